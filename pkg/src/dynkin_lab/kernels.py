"""Spectral evaluation of the symmetrised-process kernels.

With RePsi the exponent of the underlying model, the symmetrised (replica)
process has exponent 2 RePsi and the quantities below all reduce to cosine
transforms on the frequency axis:

    pbar_t(r)   = (1/pi) int_0^inf cos(xi r) exp(-2 t RePsi) dxi
    u_alpha(r)  = (1/pi) int_0^inf cos(xi r) / (alpha + 2 RePsi) dxi

together with the time-window variants that give the second moments of the
heat solution (varU), the cable solution (varV), its stationary tail
component (varS), and the stationary field (varEta = u_alpha(0)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .levy import LevyModel, re_psi
from .quadrature import (NonConvergenceError, cosine_transform,
                         integral_to_infinity)

KERNEL_KINDS = ("potential", "pbar", "varV", "varS", "varU")


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite signed measure sum_i c_i delta_{x_i}; duplicates are merged."""

    locations: np.ndarray
    weights: np.ndarray

    @staticmethod
    def from_atoms(atoms) -> "AtomicMeasure":
        pts: dict[float, float] = {}
        for x, c in atoms:
            pts[float(x)] = pts.get(float(x), 0.0) + float(c)
        pts = {x: c for x, c in pts.items() if c != 0.0}
        if not pts or sum(abs(c) for c in pts.values()) == 0.0:
            raise ValueError("atomic measure has zero total variation "
                             "after merging duplicate locations")
        xs = np.array(sorted(pts), dtype=float)
        cs = np.array([pts[x] for x in xs], dtype=float)
        return AtomicMeasure(xs, cs)

    def fourier_sq(self, xi: np.ndarray) -> np.ndarray:
        """|mu_hat(xi)|^2 = |sum_j c_j exp(i xi x_j)|^2."""
        phase = xi[..., None] * self.locations
        re = np.sum(self.weights * np.cos(phase), axis=-1)
        im = np.sum(self.weights * np.sin(phase), axis=-1)
        return re * re + im * im


def delta_difference(a: float, b: float) -> AtomicMeasure:
    return AtomicMeasure.from_atoms([(a, 1.0), (b, -1.0)])


@dataclass(frozen=True)
class KernelQuery:
    """Killing rate, time window, and accuracy budget for moment profiles.

    ``cutoff`` seeds the frequency truncation; it doubles from there until
    the recorded tail bound drops below ``tolerance`` (or the hard cap
    trips), so the achieved bound is reported rather than assumed.
    """

    alpha: float
    t: float
    cutoff: float | None = None
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.t <= 0:
            raise ValueError("t must be > 0")
        if self.cutoff is not None and self.cutoff <= 0:
            raise ValueError("cutoff must be > 0")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


def _spectral_envelope(kind: str, model: LevyModel, alpha: float | None,
                       t: float | None):
    """One-sided envelope env(xi) with kernel(r) = (1/pi) CT(env, r)."""
    if kind == "potential":
        if alpha is None or alpha <= 0:
            raise ValueError("potential kernel needs alpha > 0")

        def env(xi):
            return 1.0 / (alpha + 2.0 * re_psi(model, xi))
    elif kind == "pbar":
        if t is None or t <= 0:
            raise ValueError("pbar kernel needs t > 0")

        def env(xi):
            return np.exp(-2.0 * t * re_psi(model, xi))
    elif kind == "varV":
        if alpha is None or alpha <= 0 or t is None or t <= 0:
            raise ValueError("varV kernel needs alpha > 0 and t > 0")

        def env(xi):
            x = alpha + 2.0 * re_psi(model, xi)
            return -np.expm1(-x * t) / x
    elif kind == "varS":
        if alpha is None or alpha <= 0 or t is None or t <= 0:
            raise ValueError("varS kernel needs alpha > 0 and t > 0")

        def env(xi):
            x = alpha + 2.0 * re_psi(model, xi)
            return np.exp(-x * t) / x
    elif kind == "varU":
        if t is None or t <= 0:
            raise ValueError("varU kernel needs t > 0")

        def env(xi):
            p = np.asarray(re_psi(model, xi), dtype=float)
            x = 2.0 * t * p
            # series substitution removes the xi -> 0 limit t of (1-e^-x)/x
            small = x < 1e-6
            safe = np.where(small, 1.0, 2.0 * p)
            out = np.where(small, t * (1.0 - 0.5 * x + x * x / 6.0),
                           -np.expm1(-x) / safe)
            return out
    else:
        raise ValueError(f"unknown kernel kind {kind!r}; "
                         f"expected one of {KERNEL_KINDS}")
    return env


def _envelope_decay_guard(env, kind: str, summable: bool, context: str):
    """Reject envelopes whose far tail defeats the transform's meaning.

    For kernels that require an absolutely convergent spectral integral
    (potential, varV, varU) the octave masses of the envelope must decay
    geometrically; for density kernels (pbar, varS) the envelope itself must
    vanish at infinity (a flat tail signals an atom at the origin, e.g. a
    compound-Poisson exponent).  Coarse single-panel octaves keep this guard
    cheap; the transform's own bounds do the precise work afterwards.
    """
    from .quadrature import RATIO_CAP, RATIO_DIVERGED, gl_panel
    masses = [gl_panel(env, 2.0**m, 2.0**(m + 1)) for m in range(14, 24)]
    ratios = [b / a for a, b in zip(masses, masses[1:]) if a > 0.0]
    if not ratios:
        return
    tail_ratio = ratios[-1]
    if summable:
        if tail_ratio >= RATIO_CAP and min(ratios[-3:]) >= RATIO_CAP:
            raise NonConvergenceError(
                f"{context}: spectral envelope has non-summable tail "
                f"(octave ratio {tail_ratio:.4f}); the existence integral "
                "fails at this exponent", diverged=tail_ratio >= RATIO_DIVERGED)
    else:
        if min(ratios[-3:]) >= 0.9995:
            raise NonConvergenceError(
                f"{context}: envelope does not vanish at infinity "
                "(exponent has bounded real part; no density exists)",
                diverged=True)


def kernel_value(model: LevyModel, kind: str, r: float,
                 alpha: float | None = None, t: float | None = None,
                 rel_tol: float = 1e-9) -> float:
    """Scalar kernel at lag r for the selected kind."""
    env = _spectral_envelope(kind, model, alpha, t)
    if r != 0.0:
        _envelope_decay_guard(env, kind, kind in ("potential", "varV",
                                                  "varU"),
                              context=f"{kind} kernel")
    value, _ = cosine_transform(env, r, rel_tol=rel_tol,
                                context=f"{kind} kernel")
    return value / math.pi


def u_alpha(model: LevyModel, alpha: float, r: float,
            rel_tol: float = 1e-9) -> float:
    """Potential density of the symmetrised process at lag r.

    (1/pi) int_0^inf cos(xi r) / (alpha + 2 RePsi(xi)) dxi.  Raises
    NonConvergenceError when the tail fails to decay, which is exactly the
    numerical signature of the existence condition failing.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return kernel_value(model, "potential", r, alpha=alpha, rel_tol=rel_tol)


def pbar_density(model: LevyModel, t: float, r: float,
                 rel_tol: float = 1e-9) -> float:
    """Transition density of the symmetrised process, spectral form.

    Nonnegative up to quadrature tolerance; raw values inside (-tol, 0) are
    clamped to zero with a warning.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    raw = kernel_value(model, "pbar", r, t=t, rel_tol=rel_tol)
    if raw < 0.0:
        tol = max(1e-12, rel_tol * abs(pbar_density(model, t, 0.0))) \
            if r != 0.0 else 1e-12
        if raw > -tol:
            warnings.warn(f"pbar_density clamped tiny negative value {raw:.3e}"
                          " to 0", stacklevel=2)
            return 0.0
    return raw


@dataclass(frozen=True)
class VarianceProfile:
    varU: float
    varV: float
    varS: float
    varEta: float
    tail_bound: float

    def __iter__(self):
        return iter((self.varU, self.varV, self.varS, self.varEta))


def variance_profile(model: LevyModel, query: KernelQuery) -> VarianceProfile:
    """Pointwise second moments of U, V, S and the stationary field.

    All four are independent quadratures; varV + varS = varEta is an
    algebraic identity of the integrands and is left to hold (and be tested)
    numerically rather than being enforced.
    """
    alpha, t = query.alpha, query.t
    rel = min(1e-9, query.tolerance)
    vals = {}
    bound = 0.0
    for kind, kwargs in (("varU", dict(t=t)),
                         ("varV", dict(alpha=alpha, t=t)),
                         ("varS", dict(alpha=alpha, t=t)),
                         ("potential", dict(alpha=alpha))):
        env = _spectral_envelope(kind, model, kwargs.get("alpha"),
                                 kwargs.get("t"))
        value, err = integral_to_infinity(env, 0.0, rel_tol=rel,
                                          first_edge=query.cutoff,
                                          context=f"{kind} profile")
        vals[kind] = value / math.pi
        bound = max(bound, err / math.pi)
    return VarianceProfile(vals["varU"], vals["varV"], vals["varS"],
                           vals["potential"], bound)


def quadratic_form(model: LevyModel, alpha: float | None, mu: AtomicMeasure,
                   kernel: str = "potential", t: float | None = None,
                   route: str = "pairs", rel_tol: float = 1e-9,
                   grid_cutoff: float = 2.0**15,
                   grid_modes: int = 1 << 21) -> float:
    """sum_ij c_i c_j k(x_i - x_j) for the selected scalar kernel.

    The operative route ("pairs") double-sums exact kernel quadratures.  The
    alternative route ("grid") evaluates the same bilinear form as a single
    midpoint sum of envelope(xi) * |mu_hat(xi)|^2 plus a mean-value tail
    correction; both routes agree to the documented discretisation tolerance
    and the test suite enforces that.
    """
    if not isinstance(mu, AtomicMeasure):
        raise TypeError("mu must be an AtomicMeasure")
    if kernel not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kernel!r}")
    if route == "pairs":
        total = 0.0
        cache: dict[float, float] = {}
        for i, (xi_loc, ci) in enumerate(zip(mu.locations, mu.weights)):
            for xj_loc, cj in zip(mu.locations, mu.weights):
                r = abs(xi_loc - xj_loc)
                if r not in cache:
                    cache[r] = kernel_value(model, kernel, r, alpha=alpha,
                                            t=t, rel_tol=rel_tol)
                total += ci * cj * cache[r]
        return total
    if route == "grid":
        env = _spectral_envelope(kernel, model, alpha, t)
        dxi = grid_cutoff / grid_modes
        xi = (np.arange(grid_modes) + 0.5) * dxi
        body = float(np.sum(env(xi) * mu.fourier_sq(xi))) * dxi / math.pi
        # beyond the cutoff |mu_hat|^2 averages to sum c_i^2
        w2 = float(np.sum(mu.weights**2))
        tail_env, _ = integral_to_infinity(
            env, grid_cutoff, first_edge=2.0 * grid_cutoff, rel_tol=1e-8,
            context="quadratic form tail")
        return body + w2 * tail_env / math.pi
    raise ValueError("route must be 'pairs' or 'grid'")


def green_bound_constant(alpha: float) -> float:
    """e (alpha + 2/alpha): the potential-kernel comparison constant."""
    return math.e * (alpha + 2.0 / alpha)
