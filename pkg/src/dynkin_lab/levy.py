"""Symmetric Levy processes seen through the real part of their exponent.

Every formula in this package depends on the process only through
RePsi(xi) >= 0, where E exp(i xi X_t) = exp(-t Psi(xi)).  Three model kinds
are supported:

* ``brownian(kappa)``     RePsi(xi) = kappa xi^2
* ``stable(beta, c)``     RePsi(xi) = c |xi|^beta, beta in (0, 2]
* ``khintchine(sigma2, nu)``
                          RePsi(xi) = sigma2 xi^2 / 2
                                      + int (1 - cos(z xi)) nu(dz)

with nu a symmetric jump measure given by its density on (0, inf).  The
Gaussian coefficient convention sigma2 xi^2 / 2 is the classical one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import (_GL_NODES, _GL_WEIGHTS, NonConvergenceError,
                         adaptive, cosine_transform,
                         dyadic_integral_to_zero, integral_to_infinity,
                         octave_table)

SATISFIED = "satisfied-numerically"
VIOLATED = "violated-numerically"
INCONCLUSIVE = "inconclusive"

# Numerical verdict thresholds (limits are not decidable from finitely many
# evaluations; these are the documented decision rules).
_HAWKES_GROWTH_MIN = 1.25   # required trend growth across the top decade
_HAWKES_FLAT = 1.05         # growth below this counts as bounded
_QUASI_RATIO_MIN = 0.05     # admissible lower bound for ReTPsi(2z)/sup
_KG_BOUNDED_FACTOR = 20.0   # small-eps ratios within this of the median


@dataclass(frozen=True)
class LevyMeasure:
    """Symmetric jump measure, represented by its density on (0, inf).

    Construction verifies the integrability certificate
    int_0^1 z^2 rho(z) dz < inf and int_1^inf rho(z) dz < inf by quadrature;
    models whose density fails either check are rejected.
    """

    density: Callable[[np.ndarray], np.ndarray]
    z_min: float
    z_max: float
    small_moment: float = field(default=0.0, compare=False)
    tail_weight: float = field(default=0.0, compare=False)

    @staticmethod
    def from_density(rho: Callable, z_min: float = 0.0,
                     z_max: float = math.inf) -> "LevyMeasure":
        if z_min < 0 or z_max <= z_min:
            raise ValueError("support must satisfy 0 <= z_min < z_max")

        def clipped(z):
            z = np.asarray(z, dtype=float)
            inside = (z > z_min) & (z < z_max)
            out = np.zeros_like(z)
            if np.any(inside):
                vals = np.asarray(rho(z[inside]), dtype=float)
                if np.any(vals < 0):
                    raise ValueError("jump density must be nonnegative")
                out[inside] = vals
            return out

        try:
            lo = max(z_min, 0.0)
            if lo > 0.0:
                small = adaptive(lambda z: z * z * clipped(z), lo,
                                 min(1.0, z_max)) if lo < 1.0 else 0.0
            else:
                small = dyadic_integral_to_zero(
                    lambda z: z * z * clipped(z), min(1.0, z_max),
                    context="second moment of jump density near 0")
        except NonConvergenceError as exc:
            raise ValueError(
                f"jump density is not integrable against z^2 near 0: {exc}"
            ) from exc
        try:
            if z_max is not math.inf:
                tail = adaptive(clipped, max(1.0, z_min), z_max) \
                    if z_max > 1.0 else 0.0
            else:
                tail, _ = integral_to_infinity(
                    clipped, max(1.0, z_min), first_edge=max(2.0, 2 * z_min),
                    context="jump density tail")
        except NonConvergenceError as exc:
            raise ValueError(
                f"jump density has non-integrable tail: {exc}") from exc
        return LevyMeasure(clipped, z_min, z_max, small, tail)

    @staticmethod
    def power_law(coeff: float, beta: float, z_min: float = 0.0,
                  z_max: float = math.inf) -> "LevyMeasure":
        """rho(z) = coeff * z^(-1-beta) on (z_min, z_max)."""
        if coeff < 0:
            raise ValueError("power-law coefficient must be >= 0")
        if z_min == 0.0 and beta >= 2.0:
            raise ValueError("power-law index beta must be < 2 when the "
                             "density reaches the origin")
        return LevyMeasure.from_density(
            lambda z: coeff * z ** (-1.0 - beta), z_min, z_max)

    @staticmethod
    def from_table(z: np.ndarray, rho: np.ndarray) -> "LevyMeasure":
        """Tabulated density with log-linear interpolation, zero outside."""
        z = np.asarray(z, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if z.ndim != 1 or z.size < 2 or rho.shape != z.shape:
            raise ValueError("table needs matching 1-d z and rho arrays "
                             "with at least two rows")
        if np.any(np.diff(z) <= 0) or z[0] <= 0:
            raise ValueError("table abscissae must be positive increasing")
        if np.any(rho < 0):
            raise ValueError("table densities must be nonnegative")
        logz = np.log(z)
        # log-linear in z; zero density rows interpolate through a tiny floor
        logr = np.log(np.maximum(rho, 1e-300))

        def interp(zz):
            zz = np.asarray(zz, dtype=float)
            out = np.exp(np.interp(np.log(np.maximum(zz, 1e-300)),
                                   logz, logr))
            return np.where(out <= 1e-290, 0.0, out)

        return LevyMeasure.from_density(interp, z[0], z[-1])


def stable_jump_coefficient(beta: float, c: float) -> float:
    """Coefficient of the power-law density matching RePsi = c |xi|^beta.

    Uses int_0^inf (1 - cos u) u^(-1-beta) du = (pi/2)/(Gamma(1+beta)
    sin(pi beta/2)); the beta = 2 limit is purely Gaussian (zero jumps).
    """
    if not 0.0 < beta <= 2.0:
        raise ValueError("beta must lie in (0,2]")
    return c * math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0) / math.pi


@dataclass(frozen=True)
class LevyModel:
    kind: str
    kappa: float = 0.0
    beta: float = 0.0
    c: float = 0.0
    sigma2: float = 0.0
    nu: LevyMeasure | None = None

    @staticmethod
    def brownian(kappa: float) -> "LevyModel":
        if kappa <= 0:
            raise ValueError("diffusion coefficient kappa must be > 0")
        return LevyModel("brownian", kappa=kappa)

    @staticmethod
    def stable(beta: float, c: float) -> "LevyModel":
        if not 0.0 < beta <= 2.0:
            raise ValueError("beta must lie in (0,2]")
        if c <= 0:
            raise ValueError("scale c must be > 0")
        return LevyModel("stable", beta=beta, c=c)

    @staticmethod
    def khintchine(sigma2: float, nu: LevyMeasure) -> "LevyModel":
        if sigma2 < 0:
            raise ValueError("gaussian coefficient sigma2 must be >= 0")
        return LevyModel("khintchine", sigma2=sigma2, nu=nu)

    def canonical_measure(self) -> LevyMeasure:
        """The jump measure behind the model, for Feller functionals."""
        if self.kind == "khintchine":
            assert self.nu is not None
            return self.nu
        if self.kind == "stable":
            coeff = stable_jump_coefficient(self.beta, self.c)
            if coeff == 0.0:  # beta = 2: purely Gaussian
                return LevyMeasure(lambda z: np.zeros_like(np.asarray(z, float)),
                                   0.0, math.inf)
            return LevyMeasure.power_law(coeff, self.beta)
        raise ValueError(f"K and G are undefined for kind {self.kind!r}")

    def has_gaussian_part(self) -> bool:
        return (self.kind == "brownian"
                or (self.kind == "stable" and self.beta == 2.0)
                or (self.kind == "khintchine" and self.sigma2 > 0.0))

    def tail_exponent(self) -> float:
        """Estimated growth order of RePsi at large xi (used for defaults)."""
        if self.kind == "brownian":
            return 2.0
        if self.kind == "stable":
            return self.beta
        if self.sigma2 > 0:
            return 2.0
        hi, lo = re_psi(self, 256.0), re_psi(self, 64.0)
        if lo <= 0 or hi <= 0:
            return 2.0
        return float(np.clip(math.log(hi / lo) / math.log(4.0), 0.1, 2.0))


_JUMP_CACHE: dict[tuple[int, float, float], float] = {}


def _jump_exponent(nu: LevyMeasure, xi: float, rel_tol: float) -> float:
    """2 int_0^inf (1 - cos(z xi)) rho(z) dz, split at z = 1/xi.

    The near field uses 2 sin^2(z xi / 2) (no cancellation) with dyadic
    refinement toward any origin singularity.  A short bridge carries the
    integral to z = pi/xi, past which the measure mass and an oscillatory
    cosine transform are combined; the mask boundary pi/xi coincides with a
    half-period panel edge, so the transform sees no interior jump.
    """
    key = (id(nu), xi, rel_tol)
    hit = _JUMP_CACHE.get(key)
    if hit is not None:
        return hit
    if xi == 0.0:
        return 0.0
    split = min(1.0 / xi, nu.z_max)
    near = 0.0
    if split > nu.z_min:
        def near_f(z):
            s = np.sin(0.5 * z * xi)
            return 2.0 * s * s * nu.density(z)
        if nu.z_min > 0.0:
            near = adaptive(near_f, nu.z_min, split, rel_tol=rel_tol)
        else:
            near = dyadic_integral_to_zero(near_f, split, rel_tol=rel_tol,
                                           context="jump exponent near field")
    far = 0.0
    edge = min(math.pi / xi, nu.z_max)
    if edge > split:
        far += adaptive(lambda z: (1.0 - np.cos(z * xi)) * nu.density(z),
                        split, edge, rel_tol=rel_tol)
    if edge < nu.z_max:
        if nu.z_max is not math.inf:
            n_half = int(math.ceil((nu.z_max - edge) * xi / math.pi))
            if n_half <= 20_000:
                # one Gauss-Legendre panel per half-period, vectorised
                edges = np.minimum(edge + (math.pi / xi)
                                   * np.arange(n_half + 1), nu.z_max)
                mids = 0.5 * (edges[:-1] + edges[1:])[:, None]
                halves = 0.5 * np.diff(edges)[:, None]
                pts = mids + halves * _GL_NODES[None, :]
                vals = (1.0 - np.cos(pts * xi)) * nu.density(pts)
                far += float(np.sum(halves[:, 0]
                                    * (vals @ _GL_WEIGHTS)))
            else:
                # extreme oscillation over a finite window: take the measure
                # mass and correct with a midpoint Filon rule; the neglected
                # remainder is O(TV(rho)/xi), far below trend-table needs
                mass = adaptive(nu.density, edge, nu.z_max, rel_tol=rel_tol)
                segs = np.linspace(edge, nu.z_max, 2049)
                mids = 0.5 * (segs[:-1] + segs[1:])
                osc = float(np.sum(nu.density(mids)
                                   * (np.sin(xi * segs[1:])
                                      - np.sin(xi * segs[:-1])) / xi))
                far += mass - osc
        else:
            mass, _ = integral_to_infinity(nu.density, edge,
                                           first_edge=2.0 * edge,
                                           rel_tol=rel_tol,
                                           context="jump measure far mass")
            osc, _ = cosine_transform(
                lambda z: np.where(z > edge, nu.density(z), 0.0), xi,
                rel_tol=rel_tol, context="jump exponent far field")
            far += mass - osc
    value = 2.0 * (near + far)
    value = max(value, 0.0)
    if len(_JUMP_CACHE) > 100_000:
        _JUMP_CACHE.clear()
    _JUMP_CACHE[key] = value
    return value


def re_psi(model: LevyModel, xi, rel_tol: float = 1e-8):
    """RePsi(xi); even, nonnegative, RePsi(0) = 0.  Vectorised over xi."""
    arr = np.asarray(xi, dtype=float)
    a = np.abs(arr)
    if model.kind == "brownian":
        out = model.kappa * a * a
    elif model.kind == "stable":
        out = model.c * a ** model.beta
    else:
        assert model.nu is not None
        gauss = 0.5 * model.sigma2 * a * a
        jumps = np.array([_jump_exponent(model.nu, float(v), rel_tol)
                          for v in np.atleast_1d(a)]).reshape(a.shape)
        out = gauss + jumps
    if np.ndim(xi) == 0:
        return float(out)
    return out


def feller_functions(model: LevyModel, eps: float,
                     rel_tol: float = 1e-9) -> tuple[float, float]:
    """Truncated second moment K(eps) and tail mass G(eps) of the jumps.

    K(eps) = eps^-2 int_{|z|<=eps} z^2 nu(dz),  G(eps) = nu{|z| > eps}.
    Defined for khintchine models and for stable models via their canonical
    measure; purely closed-form Gaussian kinds have no jump measure.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    nu = model.canonical_measure()
    upper = min(eps, nu.z_max)
    if upper <= nu.z_min:
        k_val = 0.0
    elif nu.z_min > 0.0:
        k_val = adaptive(lambda z: z * z * nu.density(z), nu.z_min, upper,
                         rel_tol=rel_tol)
    else:
        k_val = dyadic_integral_to_zero(lambda z: z * z * nu.density(z),
                                        upper, rel_tol=rel_tol,
                                        context="K(eps)")
    k_val *= 2.0 / (eps * eps)
    lower = max(eps, nu.z_min)
    if lower >= nu.z_max:
        g_val = 0.0
    elif nu.z_max is not math.inf:
        g_val = adaptive(nu.density, lower, nu.z_max, rel_tol=rel_tol)
    else:
        g_val, _ = integral_to_infinity(nu.density, lower,
                                        first_edge=2.0 * lower,
                                        rel_tol=rel_tol, context="G(eps)")
    return k_val, 2.0 * g_val


def averaged_exponent(model: LevyModel, xi: float,
                      rel_tol: float = 1e-9) -> float:
    """Harmonic-analysis average (1/xi) int_0^xi RePsi(z) dz, by quadrature."""
    if xi <= 0:
        raise ValueError("xi must be > 0")
    return adaptive(lambda z: re_psi(model, z, rel_tol=rel_tol), 0.0, xi,
                    rel_tol=rel_tol) / xi


@dataclass(frozen=True)
class ConditionReport:
    """Numerical existence/smoothness diagnostics for one model.

    ``dalang_integral`` is int dxi / (alpha + 2 RePsi) over the whole line
    (inf when numerically divergent); the trend tables support the tri-state
    verdicts in ``verdicts`` (keys: dalang, hawkes, quasi_increasing, kg).
    """

    alpha: float
    dalang_integral: float
    dalang_tail_bound: float
    hawkes_trend: list[tuple[float, float]]
    quasi_increasing_ratio: list[tuple[float, float]]
    kg_ratio: list[tuple[float, float]]
    verdicts: dict[str, str]


def _monotone_increasing(vals: np.ndarray) -> bool:
    return bool(np.all(np.diff(vals) > 0))


def condition_report(model: LevyModel, alpha: float,
                     xi_grid: np.ndarray | None = None,
                     eps_grid: np.ndarray | None = None) -> ConditionReport:
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if xi_grid is None:
        xi_grid = np.geomspace(2.0, 2.0**24, 70)
    else:
        xi_grid = np.asarray(xi_grid, dtype=float)
    if eps_grid is None:
        eps_grid = np.geomspace(1e-6, 1.0, 49)
    else:
        eps_grid = np.asarray(eps_grid, dtype=float)
    if xi_grid.size == 0 or eps_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(np.diff(xi_grid) <= 0) or np.any(np.diff(eps_grid) <= 0):
        raise ValueError("grids must be strictly increasing")

    verdicts: dict[str, str] = {}

    if model.kind == "khintchine":
        # precompute the exponent on a log grid: the existence integrand of
        # a jump model can carry tiny high-frequency ripples that defeat
        # adaptive refinement at nested-quadrature cost; the smooth
        # interpolant is accurate to ~1e-4 relative, ample for verdicts
        xi_nodes = np.geomspace(1e-4, 2.0 * 2.0**30, 1200)
        p_nodes = np.array([re_psi(model, float(x), rel_tol=1e-7)
                            for x in xi_nodes])
        p_nodes = np.maximum(p_nodes, 1e-300)
        log_nodes = np.log(xi_nodes)
        log_p = np.log(p_nodes)

        def psi_eval(xi):
            xi = np.abs(np.asarray(xi, dtype=float))
            tiny = xi < xi_nodes[0]
            safe = np.maximum(xi, xi_nodes[0])
            out = np.exp(np.interp(np.log(safe), log_nodes, log_p))
            return np.where(tiny, p_nodes[0] * (xi / xi_nodes[0]) ** 2, out)
    else:
        def psi_eval(xi):
            return re_psi(model, xi)

    def dalang_env(xi):
        return 1.0 / (alpha + 2.0 * psi_eval(xi))

    try:
        half, tail = integral_to_infinity(dalang_env, 0.0, rel_tol=1e-9,
                                          context="dalang integral")
        dalang_value = 2.0 * half
        dalang_tail = 2.0 * tail
        verdicts["dalang"] = SATISFIED
    except NonConvergenceError as exc:
        dalang_value = math.inf
        dalang_tail = math.inf
        verdicts["dalang"] = VIOLATED if exc.diverged else INCONCLUSIVE

    psis = np.array([re_psi(model, x) for x in xi_grid])
    hawkes = [(float(x), float(p / math.log(x)))
              for x, p in zip(xi_grid, psis) if x > 1.0]
    hvals = np.array([v for _, v in hawkes])
    habsc = np.array([x for x, _ in hawkes])
    top = hvals[habsc >= habsc[-1] / 10.0]
    if top.size < 3:
        verdicts["hawkes"] = INCONCLUSIVE
    elif _monotone_increasing(top):
        if top[-1] >= _HAWKES_GROWTH_MIN * top[0]:
            verdicts["hawkes"] = SATISFIED
        elif top[-1] <= _HAWKES_FLAT * top[0]:
            verdicts["hawkes"] = VIOLATED
        else:
            verdicts["hawkes"] = INCONCLUSIVE
    elif bool(np.all(np.diff(top) < 0)):
        # monotone decay of ReTPsi/log xi: the growth condition fails
        verdicts["hawkes"] = VIOLATED
    else:
        verdicts["hawkes"] = INCONCLUSIVE

    quasi = []
    for z in xi_grid:
        sup = max(re_psi(model, u)
                  for u in np.geomspace(z, 2.0 * z, 17))
        num = re_psi(model, 2.0 * z)
        quasi.append((float(z), float(num / sup) if sup > 0 else 1.0))
    qvals = np.array([v for _, v in quasi])
    qtop = qvals[xi_grid >= xi_grid[-1] / 10.0]
    if np.min(qvals) >= _QUASI_RATIO_MIN and qtop.size >= 2 \
            and qtop[-1] >= 0.5 * qtop[0]:
        verdicts["quasi_increasing"] = SATISFIED
    elif qtop.size >= 2 and qtop[-1] < 0.5 * qtop[0]:
        verdicts["quasi_increasing"] = VIOLATED
    else:
        verdicts["quasi_increasing"] = INCONCLUSIVE

    if model.has_gaussian_part() and model.kind != "khintchine":
        # no jump measure to probe; the Gaussian component already settles
        # the smoothness question
        kg = [(float(e), 0.0) for e in eps_grid]
        verdicts["kg"] = SATISFIED
    else:
        kg = []
        for e in eps_grid:
            k_val, g_val = feller_functions(model, float(e))
            kg.append((float(e), float(g_val / k_val) if k_val > 0
                       else math.inf))
        ratios = np.array([v for _, v in kg])
        small = ratios[eps_grid <= eps_grid[0] * 10.0]
        if model.has_gaussian_part():
            verdicts["kg"] = SATISFIED
        elif np.any(~np.isfinite(small)):
            verdicts["kg"] = VIOLATED
        else:
            med = float(np.median(ratios[np.isfinite(ratios)]))
            if np.max(small) <= _KG_BOUNDED_FACTOR * max(med, 1e-300):
                verdicts["kg"] = SATISFIED
            elif small[0] > 10.0 * small[-1]:
                verdicts["kg"] = VIOLATED
            else:
                verdicts["kg"] = INCONCLUSIVE

    return ConditionReport(alpha, dalang_value, dalang_tail, hawkes, quasi,
                           kg, verdicts)


def dalang_octave_table(model: LevyModel, alpha: float,
                        start: float = 1.0,
                        stop: float = 2.0**20) -> list[tuple[float, float]]:
    """Raw octave masses of the existence integrand, for diagnostics."""
    return octave_table(lambda x: 1.0 / (alpha + 2.0 * re_psi(model, x)),
                        start, stop)
