"""Spectral synthesis of the stationary-in-space Gaussian fields.

Real midpoint-frequency synthesis: a field with one-sided spectral mass
2 f(xi) dxi is realised as

    F(x) = sum_k sqrt(2 f(xi_k) dxi) (A_k cos(xi_k x) + B_k sin(xi_k x))

with independent standard normal amplitudes per mode drawn from
counter-based streams, so a sample is a pure function of
(seed, replicate, grid, parameters).  The V and S components use disjoint
amplitude streams and eta = V + S holds exactly, pointwise, by construction.
Derivative fields reuse the S amplitudes with the n-fold cos/sin phase rule,
making them the exact spectral derivatives of the synthesised S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .kernels import kernel_value
from .levy import LevyModel, re_psi
from .quadrature import NonConvergenceError, integral_to_infinity

# amplitude stream components per field part
_COMPONENTS = {"V": (0, 1), "S": (2, 3), "U": (4, 5), "eta_direct": (6, 7)}


@dataclass(frozen=True)
class SpectralGrid:
    """Truncated midpoint discretisation of the one-sided frequency axis.

    Midpoint frequencies (k + 1/2) dxi, k = 0..n_modes-1 stay strictly
    positive, which keeps the heat-field density finite at the origin.
    """

    cutoff: float
    n_modes: int

    def __post_init__(self):
        if self.cutoff <= 0:
            raise ValueError("cutoff must be > 0")
        if self.n_modes < 2:
            raise ValueError("need at least 2 modes")

    @property
    def delta_xi(self) -> float:
        return self.cutoff / self.n_modes

    @property
    def frequencies(self) -> np.ndarray:
        return (np.arange(self.n_modes) + 0.5) * self.delta_xi

    @staticmethod
    def default(model: LevyModel, alpha: float = 1.0) -> "SpectralGrid":
        beta_eff = model.tail_exponent()
        cutoff = 256.0 * (alpha + 1.0) ** (1.0 / beta_eff)
        return SpectralGrid(cutoff=cutoff, n_modes=1 << 14)


def default_x_grid(grid: SpectralGrid, n_points: int = 1024) -> np.ndarray:
    """Spatial grid at 4x oversampling of the Nyquist scale 2 pi / cutoff."""
    dx = (2.0 * math.pi / grid.cutoff) * 0.25
    return np.arange(n_points) * dx


def spectral_density(kind: str, model: LevyModel, alpha: float | None,
                     t: float | None, xi, derivative_order: int = 0):
    """Two-sided spectral density f(xi) of the selected field.

    f_eta = 1/(2 pi (alpha + 2 RePsi));  f_S = exp(-(alpha+2 RePsi) t) f_eta;
    f_V = f_eta - f_S;  f_U = (1 - exp(-2 t RePsi))/(4 pi RePsi) with the
    removable limit t/(2 pi) at RePsi = 0.  A derivative order n multiplies
    by xi^(2n).
    """
    xi_arr = np.asarray(xi, dtype=float)
    p = np.asarray(re_psi(model, xi_arr), dtype=float)
    if kind in ("eta", "V", "S"):
        if alpha is None or alpha <= 0:
            raise ValueError(f"field kind {kind!r} needs alpha > 0")
        x = alpha + 2.0 * p
        base = 1.0 / (2.0 * math.pi * x)
        if kind == "eta":
            out = base
        elif kind == "S":
            if t is None or t <= 0:
                raise ValueError("field kind 'S' needs t > 0")
            out = np.exp(-x * t) * base
        else:
            if t is None or t <= 0:
                raise ValueError("field kind 'V' needs t > 0")
            out = -np.expm1(-x * t) * base
    elif kind == "U":
        if t is None or t <= 0:
            raise ValueError("field kind 'U' needs t > 0")
        y = 2.0 * t * p
        small = y < 1e-6
        safe = np.where(small, 1.0, 4.0 * math.pi * p)
        out = np.where(small,
                       t / (2.0 * math.pi) * (1.0 - 0.5 * y + y * y / 6.0),
                       -np.expm1(-y) / safe)
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    if derivative_order:
        out = out * xi_arr ** (2 * derivative_order)
    if np.ndim(xi) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BiasReport:
    """Covariance bias of truncation and discretisation, per sample."""

    truncation_tail: float
    riemann_error: float

    @property
    def total(self) -> float:
        return self.truncation_tail + self.riemann_error


@dataclass(frozen=True)
class FieldSample:
    kind: str
    alpha: float | None
    t: float | None
    derivative_order: int
    x: np.ndarray
    values: np.ndarray
    seed: int
    replicate: int
    grid: SpectralGrid
    bias: BiasReport


def discretisation_bias(kind: str, model: LevyModel, alpha: float | None,
                        t: float | None, grid: SpectralGrid,
                        derivative_order: int = 0) -> BiasReport:
    """Tail bound beyond the cutoff plus a Riemann (midpoint) refinement gap.

    Raises NonConvergenceError when the density has no integrable tail,
    which is the per-sample signature of the existence condition failing.
    """
    def dens(x):
        return spectral_density(kind, model, alpha, t, x,
                                derivative_order=derivative_order)

    tail2, _ = integral_to_infinity(
        dens, grid.cutoff, first_edge=2.0 * grid.cutoff, rel_tol=1e-6,
        context=f"{kind} spectral tail")
    coarse = 2.0 * np.sum(dens(grid.frequencies)) * grid.delta_xi
    fine_grid = SpectralGrid(grid.cutoff, 2 * grid.n_modes)
    fine = 2.0 * np.sum(dens(fine_grid.frequencies)) * fine_grid.delta_xi
    return BiasReport(truncation_tail=2.0 * float(tail2),
                      riemann_error=abs(float(fine - coarse)))


def _amplitudes(kind, model, alpha, t, grid, derivative_order=0):
    f = spectral_density(kind, model, alpha, t, grid.frequencies,
                         derivative_order=derivative_order)
    return np.sqrt(2.0 * f * grid.delta_xi)


def _mode_normals(seed, replicate, component, n_modes):
    # mode k is the k-th variate of the (seed, replicate, component) stream
    return rng.stream(seed, rng.DOMAIN_FIELD, replicate,
                      component).standard_normal(n_modes)


def _synthesise(amp, freqs, x, a, b, phase=0.0):
    arg = np.outer(x, freqs) + phase
    return (np.cos(arg) @ (amp * a)) + (np.sin(arg) @ (amp * b))


def sample_joint(model: LevyModel, alpha: float, t: float,
                 grid: SpectralGrid, x: np.ndarray, seed: int,
                 replicate: int = 0, derivative_order: int | None = None):
    """One joint draw of (V, S, eta[, S derivative]) on the spatial grid x.

    V and S use independent amplitude streams; eta is the exact pointwise
    sum.  The optional derivative field reuses the S amplitudes with phase
    n*pi/2 and amplitude factor xi^n.
    """
    if alpha <= 0 or t <= 0:
        raise ValueError("need alpha > 0 and t > 0")
    x = np.asarray(x, dtype=float)
    freqs = grid.frequencies
    draws = {name: _mode_normals(seed, replicate, comp, grid.n_modes)
             for part, comps in (("V", _COMPONENTS["V"]),
                                 ("S", _COMPONENTS["S"]))
             for name, comp in zip((part + "_a", part + "_b"), comps)}
    out = {}
    for part in ("V", "S"):
        amp = _amplitudes(part, model, alpha, t, grid)
        vals = _synthesise(amp, freqs, x, draws[part + "_a"],
                           draws[part + "_b"])
        bias = discretisation_bias(part, model, alpha, t, grid)
        out[part] = FieldSample(part, alpha, t, 0, x, vals, seed, replicate,
                                grid, bias)
    eta_vals = out["V"].values + out["S"].values
    eta_bias = discretisation_bias("eta", model, alpha, t, grid)
    eta = FieldSample("eta", alpha, t, 0, x, eta_vals, seed, replicate, grid,
                      eta_bias)
    if derivative_order is None:
        return out["V"], out["S"], eta, None
    n = int(derivative_order)
    amp = _amplitudes("S", model, alpha, t, grid) * freqs ** n
    vals = _synthesise(amp, freqs, x, draws["S_a"], draws["S_b"],
                       phase=n * math.pi / 2.0)
    bias = discretisation_bias("S", model, alpha, t, grid,
                               derivative_order=n)
    deriv = FieldSample("S_derivative", alpha, t, n, x, vals, seed,
                        replicate, grid, bias)
    return out["V"], out["S"], eta, deriv


def sample_heat_field(model: LevyModel, t: float, grid: SpectralGrid,
                      x: np.ndarray, seed: int,
                      replicate: int = 0) -> FieldSample:
    """One draw of the heat solution snapshot U(t, .) on the grid x."""
    if t <= 0:
        raise ValueError("t must be > 0")
    x = np.asarray(x, dtype=float)
    bias = discretisation_bias("U", model, None, t, grid)
    amp = _amplitudes("U", model, None, t, grid)
    a = _mode_normals(seed, replicate, _COMPONENTS["U"][0], grid.n_modes)
    b = _mode_normals(seed, replicate, _COMPONENTS["U"][1], grid.n_modes)
    vals = _synthesise(amp, grid.frequencies, x, a, b)
    return FieldSample("U", None, t, 0, x, vals, seed, replicate, grid, bias)


def ensemble_values(model: LevyModel, kind: str, alpha: float | None,
                    t: float | None, grid: SpectralGrid, points: np.ndarray,
                    seed: int, replicates: int,
                    derivative_order: int = 0,
                    batch: int = 512) -> np.ndarray:
    """(replicates x len(points)) matrix of field values at probe points.

    Row r realises the same spectral sum as sample_joint /
    sample_heat_field with replicate=r at the same points (identical
    amplitude draws; values agree to reduction-order rounding, ~1e-12).
    Identical calls are bit-identical; batching only regroups the matrix
    products.
    """
    points = np.asarray(points, dtype=float)
    freqs = grid.frequencies
    if kind == "eta":
        # eta has the same law for every t; with no t given, draw it from
        # its own spectral density instead of as V + S
        parts = [("eta_direct", 0)] if t is None else [("V", 0), ("S", 0)]
    elif kind in ("V", "S", "U"):
        parts = [(kind, derivative_order if kind == "S" else 0)]
    elif kind == "S_derivative":
        parts = [("S", derivative_order)]
    else:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    mats = []
    for part, order in parts:
        dens_kind = "eta" if part == "eta_direct" else part
        amp = _amplitudes(dens_kind, model, alpha, t, grid,
                          derivative_order=0)
        phase = order * math.pi / 2.0
        amp = amp * freqs ** order
        arg = np.outer(freqs, points) + phase
        mats.append((part, amp[:, None] * np.cos(arg),
                     amp[:, None] * np.sin(arg)))
    out = np.empty((replicates, points.size))
    k = grid.n_modes
    for lo in range(0, replicates, batch):
        hi = min(lo + batch, replicates)
        acc = np.zeros((hi - lo, points.size))
        for part, cmat, smat in mats:
            ca, cb = _COMPONENTS[part]
            a = np.empty((hi - lo, k))
            b = np.empty((hi - lo, k))
            for i, r in enumerate(range(lo, hi)):
                a[i] = _mode_normals(seed, r, ca, k)
                b[i] = _mode_normals(seed, r, cb, k)
            acc += a @ cmat + b @ smat
        out[lo:hi] = acc
    return out


@dataclass
class RunningMoments:
    """Mergeable (count, sum, sum of squares) accumulator.

    The merge is associative and commutative, so replicate batches can be
    accumulated in any order or in parallel.
    """

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        self.count += values.size
        self.total += float(values.sum())
        self.total_sq += float((values * values).sum())

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        return RunningMoments(self.count + other.count,
                              self.total + other.total,
                              self.total_sq + other.total_sq)

    @property
    def mean(self) -> float:
        return self.total / self.count

    @property
    def variance(self) -> float:
        m = self.mean
        return self.total_sq / self.count - m * m

    @property
    def stderr_mean(self) -> float:
        return math.sqrt(max(self.variance, 0.0) / self.count)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    stderr: float
    lags: np.ndarray
    structure: np.ndarray
    structure_se: np.ndarray
    band: tuple[float, float]


def resolved_band(sample: FieldSample, model: LevyModel) -> tuple[float, float]:
    """Lag window where increment scaling is meaningful for this sample.

    Lower edge: several synthesis resolution lengths 2 pi / cutoff.  Upper
    edge: a fraction of the decorrelation length, i.e. the inverse of the
    corner frequency where the spectral density leaves its small-xi regime.
    """
    return _band_for(sample.kind, model, sample.alpha, sample.t, sample.grid)


def _band_for(kind: str, model: LevyModel, alpha, t,
              grid: SpectralGrid) -> tuple[float, float]:
    low = 3.0 * (2.0 * math.pi / grid.cutoff)
    target = (1.0 / (2.0 * t)) if kind == "U" else alpha
    lo_f, hi_f = 1e-9, grid.cutoff
    for _ in range(200):
        mid = math.sqrt(lo_f * hi_f)
        if 2.0 * re_psi(model, mid) < target:
            lo_f = mid
        else:
            hi_f = mid
    return low, 0.25 / hi_f


def _validate_lags(lags: np.ndarray, band: tuple[float, float]):
    if lags.size < 8:
        raise ValueError("need at least 8 lags")
    if np.log10(lags.max() / lags.min()) < 1.5:
        raise ValueError("lags must span at least 1.5 decades")
    low, high = band
    if lags.min() < low or lags.max() > high:
        raise ValueError(
            f"lag range [{lags.min():.4g}, {lags.max():.4g}] outside the "
            f"resolved band [{low:.4g}, {high:.4g}]")


def _pair_indices(x: np.ndarray, lags: np.ndarray):
    out = []
    for r in lags:
        diffs = np.abs(x[None, :] - x[:, None] - r) < 1e-9 * max(1.0, r)
        ii, jj = np.nonzero(diffs)
        if ii.size == 0:
            raise ValueError(f"no point pairs at lag {r:.6g} on the grid")
        out.append((ii, jj))
    return out


def _fit_loglog(lags, d_mean, d_se, band) -> ScalingFit:
    log_r = np.log(lags)
    log_d = np.log(d_mean)
    xc = log_r - log_r.mean()
    sxx = float(np.sum(xc * xc))
    slope = float(np.sum(xc * log_d) / sxx)
    se_log = np.divide(d_se, d_mean, out=np.zeros_like(d_se),
                       where=d_mean > 0)
    stderr = float(np.sqrt(np.sum((xc / sxx) ** 2 * se_log**2)))
    return ScalingFit(slope, stderr, lags, d_mean, d_se, band)


def increment_scaling_exponent(samples, lags, model: LevyModel) -> ScalingFit:
    """Log-log slope of the mean-square increment over the given lags.

    ``samples`` is one FieldSample or a sequence of replicates sharing the
    same spatial grid.  For each lag every point pair at that spacing
    contributes; the ensemble average runs over pairs and replicates, and
    the slope comes from ordinary least squares on (log lag, log D) with a
    delta-method standard error from the replicate scatter.
    """
    if isinstance(samples, FieldSample):
        samples = [samples]
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    s0 = samples[0]
    lags = np.asarray(lags, dtype=float)
    band = _band_for(s0.kind, model, s0.alpha, s0.t, s0.grid)
    _validate_lags(lags, band)
    pair_idx = _pair_indices(s0.x, lags)
    reps = len(samples)
    per_rep = np.empty((reps, lags.size))
    for k, s in enumerate(samples):
        v = s.values
        for li, (ii, jj) in enumerate(pair_idx):
            d = v[jj] - v[ii]
            per_rep[k, li] = np.mean(d * d)
    d_mean = per_rep.mean(axis=0)
    d_se = per_rep.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 \
        else np.zeros(lags.size)
    return _fit_loglog(lags, d_mean, d_se, band)


def scaling_exponent_ensemble(model: LevyModel, kind: str, alpha, t,
                              grid: SpectralGrid, lags, seed: int,
                              replicates: int,
                              bases=(0.0, 7.0, 14.0, 21.0),
                              batch: int = 256) -> ScalingFit:
    """Ensemble increment-scaling fit from probe pairs (base, base + lag).

    Equivalent in law to fitting over full gridded samples but evaluates the
    field only at the O(bases x lags) points the fit needs, which keeps
    large-replicate runs cheap.
    """
    lags = np.asarray(lags, dtype=float)
    band = _band_for(kind, model, alpha, t, grid)
    _validate_lags(lags, band)
    bases = np.asarray(bases, dtype=float)
    points = np.unique(np.concatenate([bases + r
                                       for r in np.concatenate([[0.0], lags])
                                       ]))
    vals = ensemble_values(model, kind, alpha, t, grid, points, seed,
                           replicates, batch=batch)
    base_ix = np.searchsorted(points, bases)
    per_rep = np.empty((replicates, lags.size))
    for li, r in enumerate(lags):
        off_ix = np.searchsorted(points, bases + r)
        d = vals[:, off_ix] - vals[:, base_ix]
        per_rep[:, li] = np.mean(d * d, axis=1)
    d_mean = per_rep.mean(axis=0)
    d_se = per_rep.std(axis=0, ddof=1) / math.sqrt(replicates)
    return _fit_loglog(lags, d_mean, d_se, band)


def structure_function_exact(kind: str, model: LevyModel, alpha, t,
                             grid: SpectralGrid, lags) -> np.ndarray:
    """Mean-square increments implied by the discrete synthesis grid."""
    lags = np.asarray(lags, dtype=float)
    f = spectral_density(kind, model, alpha, t, grid.frequencies)
    w = 2.0 * f * grid.delta_xi
    return np.array([float(np.sum(w * 2.0 * (1.0 - np.cos(grid.frequencies
                                                          * r))))
                     for r in lags])


def field_csv_text(sample: FieldSample, provenance: str = "") -> str:
    """CSV export (x,value) with a reproducibility header comment."""
    head = (f"# kind={sample.kind} alpha={sample.alpha} t={sample.t} "
            f"derivative_order={sample.derivative_order} seed={sample.seed} "
            f"replicate={sample.replicate} cutoff={sample.grid.cutoff!r} "
            f"modes={sample.grid.n_modes} "
            f"truncation_tail={sample.bias.truncation_tail!r} "
            f"riemann_error={sample.bias.riemann_error!r}")
    if provenance:
        head = f"# {provenance}\n" + head
    lines = [head, "x,value"]
    for xv, fv in zip(sample.x, sample.values):
        lines.append(f"{float(xv)!r},{float(fv)!r}")
    return "\n".join(lines) + "\n"


def ensemble_stats_csv_text(model: LevyModel, kind: str, alpha, t,
                            grid: SpectralGrid, lags, emp_cov, emp_se,
                            provenance: str = "") -> str:
    """CSV (lag, empirical_cov, exact_cov, stderr) against the line kernel."""
    kernel_kind = {"eta": "potential", "V": "varV", "S": "varS",
                   "U": "varU"}[kind]
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append("lag,empirical_cov,exact_cov,stderr")
    for r, c, s in zip(lags, emp_cov, emp_se):
        exact = kernel_value(model, kernel_kind, float(r), alpha=alpha, t=t)
        lines.append(f"{float(r)!r},{float(c)!r},{float(exact)!r},"
                     f"{float(s)!r}")
    return "\n".join(lines) + "\n"
