"""Monte Carlo for symmetric stable paths and their box-kernel local times.

The simulated process is the symmetrised one: a PathConfig(beta, c) walks
the process whose exponent is 2 c |xi|^beta (the model stable(beta, c) seen
through its replica kernel).  Increments over dt are exact symmetric-stable
draws via the Chambers-Mallows-Stuck transform, and local time at level y is
the box occupation estimator

    Lhat = (dt / 2 eps) * #{ steps j : |X_{j dt} - y| < eps },

counted over left endpoints j = 0..n-1.  Each path owns one counter-based
stream; when an exponential horizon S(alpha) is involved it is drawn first
and the path is simulated for ceil(S/dt) steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .kernels import u_alpha
from .levy import LevyModel


class BandwidthError(ValueError):
    """The local-time bandwidth does not resolve the path."""


class OccupancyError(RuntimeError):
    """A conditioning bin has too few paths for a meaningful average."""


@dataclass(frozen=True)
class PathConfig:
    """Walk of the symmetrised process with exponent 2 c |xi|^beta."""

    beta: float
    c: float
    dt: float
    horizon: float | None = None
    x0: float = 0.0
    eps: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 1.0 < self.beta <= 2.0:
            raise ValueError("beta must lie in (1,2]: local times exist "
                             "exactly when the existence integral converges")
        if self.c <= 0:
            raise ValueError("scale c must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.horizon is not None and self.horizon <= 0:
            raise ValueError("horizon must be > 0")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps must be > 0")

    @property
    def bandwidth(self) -> float:
        """Default eps = dt^(1/beta), the spatial scale of one step."""
        return self.eps if self.eps is not None else self.dt ** (1.0 / self.beta)

    @property
    def increment_scale(self) -> float:
        """Stable scale sigma with increment law S_beta(sigma), char
        exp(-|sigma xi|^beta) = exp(-2 c dt |xi|^beta)."""
        return (2.0 * self.c * self.dt) ** (1.0 / self.beta)

    def line_model(self) -> LevyModel:
        return LevyModel.stable(self.beta, self.c)


@dataclass(frozen=True)
class LocalTimeEstimate:
    level: float
    value: float
    bandwidth: float
    path_count: int = 1


def stable_increment(beta: float, c: float, dt: float,
                     gen: np.random.Generator, size=None):
    """Symmetric stable increments of the symmetrised process over dt.

    Chambers-Mallows-Stuck: with V uniform on (-pi/2, pi/2) and W standard
    exponential,

        X = sigma * sin(beta V) / cos(V)^(1/beta)
                  * (cos((1-beta) V) / W)^((1-beta)/beta),

    sigma = (2 c dt)^(1/beta); beta = 1 reduces to sigma * tan(V).  Draw
    order within the stream: all uniforms, then all exponentials.
    """
    if not 0.0 < beta <= 2.0:
        raise ValueError("beta must lie in (0,2]")
    if c <= 0 or dt <= 0:
        raise ValueError("c and dt must be > 0")
    n = 1 if size is None else int(size)
    sigma = (2.0 * c * dt) ** (1.0 / beta)
    v = math.pi * (gen.random(n) - 0.5)
    if beta == 1.0:
        out = sigma * np.tan(v)
    else:
        w = gen.standard_exponential(n)
        out = sigma * (np.sin(beta * v) / np.cos(v) ** (1.0 / beta)
                       * (np.cos((1.0 - beta) * v) / w) ** ((1.0 - beta) / beta))
    return float(out[0]) if size is None else out


def simulate_path(cfg: PathConfig, n_steps: int,
                  gen: np.random.Generator) -> np.ndarray:
    """Positions X_0..X_n including the start point."""
    inc = stable_increment(cfg.beta, cfg.c, cfg.dt, gen, size=n_steps)
    out = np.empty(n_steps + 1)
    out[0] = cfg.x0
    np.cumsum(inc, out=out[1:])
    out[1:] += cfg.x0
    return out


def _check_bandwidth(eps: float, positions: np.ndarray):
    if eps <= 0:
        raise BandwidthError("eps must be > 0")
    if positions.size < 2:
        return
    med = float(np.median(np.abs(np.diff(positions))))
    if med == 0.0:
        return  # degenerate (injected) path: any eps resolves it
    if eps >= 2.0 * med:
        raise BandwidthError(
            f"eps={eps:.4g} >= 2 x median step {med:.4g}: over-smoothing")
    if eps <= med / 4.0:
        raise BandwidthError(
            f"eps={eps:.4g} <= median step / 4 = {med / 4.0:.4g}: below the "
            "step resolution")


def local_time(positions: np.ndarray, dt: float, y: float, eps: float,
               check_bandwidth: bool = True) -> LocalTimeEstimate:
    """Box occupation estimate of the local time at level y.

    Counts the left endpoints X_0..X_{n-1} inside (y-eps, y+eps); the
    bandwidth guards reject eps out of proportion with the step scale.
    """
    positions = np.asarray(positions, dtype=float)
    if check_bandwidth:
        _check_bandwidth(eps, positions)
    count = int(np.count_nonzero(np.abs(positions[:-1] - y) < eps))
    return LocalTimeEstimate(y, dt / (2.0 * eps) * count, eps)


def _occupation_counts(positions: np.ndarray, levels, eps: float):
    body = positions[:-1]
    return [int(np.count_nonzero(np.abs(body - y) < eps)) for y in levels]


@dataclass(frozen=True)
class ResolventResult:
    """Discounted-resolvent comparison int_0^inf e^{-alpha s} E L_s ds.

    ``estimate`` is mean(Lhat at the exponential time S(alpha)) / alpha and
    ``exact`` is u_alpha(x,y) / alpha; the underlying normalisation identity
    is u_alpha(x,y) = alpha * int_0^inf e^{-alpha s} E^x L^y_s ds.
    """

    estimate: float
    exact: float
    stderr: float
    paths: int
    eps: float
    dt: float

    @property
    def mean_at_exponential_time(self) -> float:
        return self.estimate * self._alpha

    _alpha: float = 1.0


def resolvent_check(cfg: PathConfig, alpha: float, x: float, y: float,
                    paths: int, seed: int | None = None) -> ResolventResult:
    """Monte Carlo check of the local-time normalisation against u_alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if paths < 2:
        raise ValueError("need at least 2 paths")
    seed = cfg.seed if seed is None else seed
    eps = cfg.bandwidth
    start = PathConfig(cfg.beta, cfg.c, cfg.dt, x0=x, eps=cfg.eps,
                       seed=seed)
    total = 0.0
    total_sq = 0.0
    checked = False
    for p in range(paths):
        gen = rng.stream(seed, rng.DOMAIN_PATH, p)
        s_time = gen.standard_exponential() / alpha
        n = max(1, int(math.ceil(s_time / cfg.dt)))
        pos = simulate_path(start, n, gen)
        if not checked:
            _check_bandwidth(eps, pos)
            checked = True
        val = local_time(pos, cfg.dt, y, eps,
                         check_bandwidth=False).value
        total += val
        total_sq += val * val
    mean = total / paths
    var = max(total_sq / paths - mean * mean, 0.0)
    exact = u_alpha(cfg.line_model(), alpha, x - y) / alpha
    return ResolventResult(mean / alpha, exact,
                           math.sqrt(var / paths) / alpha, paths, eps,
                           cfg.dt, _alpha=alpha)


@dataclass(frozen=True)
class CorollaryResult:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    n_long: int
    n_short: int
    verdict: bool

    @property
    def combined_se(self) -> float:
        return math.sqrt(self.lhs_se**2 + self.rhs_se**2)


def corollary_test(cfg: PathConfig, alpha: float, a: float, b: float,
                   t: float, paths: int, seed: int | None = None,
                   min_bin_count: int = 500) -> CorollaryResult:
    """Conditional comparison of L^a - L^b at an exponential time.

    Each path starts at a, draws its own S(alpha) first, runs to
    ceil(S/dt) steps and contributes Lhat^a - Lhat^b to the bin
    {S >= t} (lhs) or {S < t} (rhs).  Verdict: lhs <= rhs + 2 combined se.
    """
    if alpha <= 0 or t <= 0:
        raise ValueError("alpha and t must be > 0")
    seed = cfg.seed if seed is None else seed
    eps = cfg.bandwidth
    start = PathConfig(cfg.beta, cfg.c, cfg.dt, x0=a, eps=cfg.eps, seed=seed)
    factor = cfg.dt / (2.0 * eps)
    stats = {True: [0, 0.0, 0.0], False: [0, 0.0, 0.0]}
    checked = False
    for p in range(paths):
        gen = rng.stream(seed, rng.DOMAIN_PATH, p)
        s_time = gen.standard_exponential() / alpha
        n = max(1, int(math.ceil(s_time / cfg.dt)))
        pos = simulate_path(start, n, gen)
        if not checked:
            _check_bandwidth(eps, pos)
            checked = True
        ca, cb = _occupation_counts(pos, (a, b), eps)
        d = factor * (ca - cb)
        bucket = stats[s_time >= t]
        bucket[0] += 1
        bucket[1] += d
        bucket[2] += d * d
    n_long, n_short = stats[True][0], stats[False][0]
    if n_long < max(1, min_bin_count) or n_short < max(1, min_bin_count):
        raise OccupancyError(
            f"conditioning bins have {n_long} (S>=t) and {n_short} (S<t) "
            f"paths; need >= {max(1, min_bin_count)} each -- increase paths "
            "or choose t nearer the typical exponential time")

    def mean_se(bucket):
        n, s, s2 = bucket
        m = s / n
        v = max(s2 / n - m * m, 0.0)
        return m, math.sqrt(v / n)

    lhs, lhs_se = mean_se(stats[True])
    rhs, rhs_se = mean_se(stats[False])
    verdict = lhs <= rhs + 2.0 * math.sqrt(lhs_se**2 + rhs_se**2)
    return CorollaryResult(lhs, rhs, lhs_se, rhs_se, n_long, n_short,
                           verdict)


@dataclass(frozen=True)
class DiscountedSplitResult:
    """Discounted-increment comparison of L^a - L^b across the time t.

    With D_s = Lhat^a_s - Lhat^b_s accumulated along a path killed at the
    independent exponential time S(alpha), the geometric tail estimate
    behind the smoothness comparison states

        E[D_S - D_{S ^ t}]  <=  e^{-alpha t}/(1 - e^{-alpha t}) * E[D_{S ^ t}],

    i.e. the mean difference accumulated after t is dominated by the
    discounted mean accumulated before t.  ``margin`` is the Monte Carlo
    mean of (rhs - lhs) per path with its standard error.
    """

    lhs: float
    rhs: float
    margin: float
    margin_se: float
    paths: int

    @property
    def verdict(self) -> bool:
        return self.margin >= -2.0 * self.margin_se


def discounted_split_check(cfg: PathConfig, alpha: float, a: float, b: float,
                           t: float, paths: int,
                           seed: int | None = None) -> DiscountedSplitResult:
    """Monte Carlo check of the pre/post-t discounted local-time estimate."""
    if alpha <= 0 or t <= 0:
        raise ValueError("alpha and t must be > 0")
    seed = cfg.seed if seed is None else seed
    eps = cfg.bandwidth
    start = PathConfig(cfg.beta, cfg.c, cfg.dt, x0=a, eps=cfg.eps, seed=seed)
    factor = cfg.dt / (2.0 * eps)
    ct = math.exp(-alpha * t) / (-math.expm1(-alpha * t))
    k_t = int(math.ceil(t / cfg.dt))
    pre_sum = post_sum = acc = acc_sq = 0.0
    checked = False
    for p in range(paths):
        gen = rng.stream(seed, rng.DOMAIN_PATH, p)
        s_time = gen.standard_exponential() / alpha
        n = max(1, int(math.ceil(s_time / cfg.dt)))
        pos = simulate_path(start, n, gen)
        if not checked:
            _check_bandwidth(eps, pos)
            checked = True
        body = pos[:-1]
        hits = ((np.abs(body - a) < eps).astype(float)
                - (np.abs(body - b) < eps).astype(float))
        k = min(k_t, n)
        pre = factor * float(hits[:k].sum())
        post = factor * float(hits[k:].sum())
        pre_sum += pre
        post_sum += post
        delta = ct * pre - post
        acc += delta
        acc_sq += delta * delta
    mean = acc / paths
    var = max(acc_sq / paths - mean * mean, 0.0)
    return DiscountedSplitResult(post_sum / paths, ct * pre_sum / paths,
                                 mean, math.sqrt(var / paths), paths)


def mean_local_times(cfg: PathConfig, levels, times, paths: int,
                     seed: int | None = None):
    """Ensemble means of Lhat at several levels and horizons.

    Returns (means, stderrs) with shape (len(times), len(levels)); all paths
    run to max(times) and the estimates at earlier horizons reuse the same
    trajectories (exact local-time additivity makes the restriction exact).
    """
    times = sorted(times)
    if not times:
        raise ValueError("need at least one horizon")
    seed = cfg.seed if seed is None else seed
    eps = cfg.bandwidth
    steps = [int(round(t / cfg.dt)) for t in times]
    if any(abs(s * cfg.dt - t) > 1e-9 * t for s, t in zip(steps, times)):
        raise ValueError("times must be integer multiples of dt")
    levels = list(levels)
    factor = cfg.dt / (2.0 * eps)
    acc = np.zeros((len(times), len(levels)))
    acc_sq = np.zeros_like(acc)
    checked = False
    for p in range(paths):
        gen = rng.stream(seed, rng.DOMAIN_PATH, p)
        pos = simulate_path(cfg, steps[-1], gen)
        if not checked:
            _check_bandwidth(eps, pos)
            checked = True
        body = pos[:-1]
        for li, y in enumerate(levels):
            hits = np.abs(body - y) < eps
            cum = np.cumsum(hits)
            for ti, s in enumerate(steps):
                val = factor * float(cum[s - 1])
                acc[ti, li] += val
                acc_sq[ti, li] += val * val
    means = acc / paths
    var = np.maximum(acc_sq / paths - means * means, 0.0)
    return means, np.sqrt(var / paths)


def experiment_csv_text(rows, provenance: str = "") -> str:
    """CSV (alpha,t,a,b,lhs,rhs,lhs_se,rhs_se,paths,eps,dt,verdict)."""
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append("alpha,t,a,b,lhs,rhs,lhs_se,rhs_se,paths,eps,dt,verdict")
    for r in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float)
                              else str(v) for v in r))
    return "\n".join(lines) + "\n"
