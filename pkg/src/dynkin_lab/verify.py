"""Runtime property suites: every module invariant as an executable check.

Each check returns a CheckResult; the CLI ``verify`` command runs the
requested suites and reports one line per check.  ``paths_scale`` shrinks or
grows the Monte Carlo sizes, ``tol_scale`` the deterministic tolerances
(both default to 1).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import fields, localtime, rng, torus
from .kernels import (AtomicMeasure, KernelQuery, delta_difference,
                      green_bound_constant, quadratic_form, u_alpha,
                      pbar_density, variance_profile)
from .quadrature import cosine_transform
from .levy import (LevyMeasure, LevyModel, averaged_exponent,
                   feller_functions, re_psi, stable_jump_coefficient)


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _result(suite, name, passed, detail, t0):
    return CheckResult(suite, name, bool(passed), detail,
                       time.time() - t0)


# ----------------------------------------------------------------- levy ---

def check_evenness(model, seed, scale, tol_scale):
    t0 = time.time()
    gen = rng.stream(seed, 99, 0, 0)
    xs = gen.uniform(-50.0, 50.0, 1000)
    worst = 0.0
    for x in xs:
        a, b = re_psi(model, float(x)), re_psi(model, float(-x))
        ref = max(abs(a), abs(b), 1e-300)
        worst = max(worst, abs(a - b) / ref)
    ok = worst <= 1e-12 * tol_scale
    return _result("levy", "exponent-evenness", ok,
                   f"max relative asymmetry {worst:.2e}", t0)


def check_second_moment_lower_bound(model, seed, scale, tol_scale):
    # ReTPsi(xi) >= K(1/xi)/3 for pure-jump models
    t0 = time.time()
    nu = LevyMeasure.power_law(1.0, 1.5)
    m = LevyModel.khintchine(0.0, nu)
    worst = math.inf
    for x in np.geomspace(0.5, 64.0, 12):
        k_val, _ = feller_functions(m, 1.0 / x)
        lhs = re_psi(m, float(x))
        worst = min(worst, lhs - k_val / 3.0)
    ok = worst >= -1e-6 * tol_scale
    return _result("levy", "second-moment-lower-bound", ok,
                   f"min slack {worst:.3e}", t0)


def check_averaged_upper_bound(model, seed, scale, tol_scale):
    # (1/xi) int_0^xi ReTPsi <= K(1/xi)/2 + G(1/xi)
    t0 = time.time()
    nu = LevyMeasure.power_law(1.0, 1.5)
    m = LevyModel.khintchine(0.0, nu)
    worst = math.inf
    for x in np.geomspace(0.5, 64.0, 10):
        k_val, g_val = feller_functions(m, 1.0 / x)
        slack = 0.5 * k_val + g_val - averaged_exponent(m, float(x),
                                                        rel_tol=1e-6)
        worst = min(worst, slack)
    ok = worst >= -1e-6 * tol_scale
    return _result("levy", "averaged-exponent-upper-bound", ok,
                   f"min slack {worst:.3e}", t0)


def check_stable_consistency(model, seed, scale, tol_scale):
    t0 = time.time()
    beta, c = 1.5, 1.0
    nu = LevyMeasure.power_law(stable_jump_coefficient(beta, c), beta)
    kh = LevyModel.khintchine(0.0, nu)
    ref = LevyModel.stable(beta, c)
    worst = 0.0
    for x in np.geomspace(0.1, 100.0, 16):
        a, b = re_psi(kh, float(x)), re_psi(ref, float(x))
        worst = max(worst, abs(a - b) / b)
    ok = worst <= 1e-4 * tol_scale
    return _result("levy", "stable-self-consistency", ok,
                   f"max relative gap {worst:.2e}", t0)


# -------------------------------------------------------------- kernels ---

def _kernel_models(model):
    out = [model]
    if model.kind != "stable" or model.beta != 1.5:
        out.append(LevyModel.stable(1.5, 1.0))
    return out


def check_green_bound(model, seed, scale, tol_scale):
    t0 = time.time()
    gen = rng.stream(seed, 99, 1, 0)
    worst = math.inf
    for m in _kernel_models(model):
        u1 = u_alpha(m, 1.0, 0.0)
        for _ in range(50):
            alpha = math.exp(gen.uniform(math.log(0.1), math.log(10.0)))
            r = gen.uniform(-5.0, 5.0)
            slack = green_bound_constant(alpha) * u1 - u_alpha(m, alpha, r)
            worst = min(worst, slack)
    ok = worst >= -1e-8 * tol_scale
    return _result("kernels", "green-bound", ok,
                   f"min slack {worst:.3e}", t0)


def check_existence_sandwich(model, seed, scale, tol_scale):
    t0 = time.time()
    worst = math.inf
    for m in _kernel_models(model):
        for alpha in (0.5, 1.0, 2.0, 4.0, 8.0):
            u2a = u_alpha(m, 2.0 * alpha, 0.0)
            for t in (0.25, 0.5, 1.0, 2.0, 4.0):
                prof = variance_profile(m, KernelQuery(alpha, t))
                tol = 1e-6 * tol_scale * (1.0 + u2a)
                worst = min(
                    worst,
                    prof.varV - (1 - math.exp(-t * alpha)) * u2a + tol,
                    math.exp(t * alpha) * u2a - prof.varV + tol,
                    prof.varU - (1 - math.exp(-2 * t * alpha)) * u2a + tol,
                    math.exp(2 * t * alpha) * u2a - prof.varU + tol)
    ok = worst >= 0.0
    return _result("kernels", "existence-sandwich", ok,
                   f"min slack {worst:.3e}", t0)


def check_uv_sandwich(model, seed, scale, tol_scale):
    t0 = time.time()
    worst = math.inf
    mu = delta_difference(0.0, 1.0)
    for m in _kernel_models(model):
        for alpha in (0.5, 2.0):
            for t in (0.5, 1.0):
                prof = variance_profile(m, KernelQuery(alpha, t))
                tol = 1e-8 * tol_scale * (1.0 + prof.varU)
                worst = min(worst, prof.varU - prof.varV + tol,
                            3 * math.exp(alpha * t) * prof.varV
                            - prof.varU + tol)
                qv = quadratic_form(m, alpha, mu, "varV", t=t)
                qu = quadratic_form(m, alpha, mu, "varU", t=t)
                tol = 1e-8 * tol_scale * (1.0 + qu)
                worst = min(worst, qu - qv + tol,
                            3 * math.exp(alpha * t) * qv - qu + tol)
    ok = worst >= 0.0
    return _result("kernels", "heat-cable-sandwich", ok,
                   f"min slack {worst:.3e}", t0)


def check_bd2_exact(model, seed, scale, tol_scale):
    t0 = time.time()
    gen = rng.stream(seed, 99, 2, 0)
    worst = math.inf
    for m in _kernel_models(model):
        for _ in range(5):
            n = int(gen.integers(2, 5))
            mu = AtomicMeasure.from_atoms(
                [(gen.uniform(-2, 2), gen.uniform(-1, 1)) for _ in range(n)])
            alpha = math.exp(gen.uniform(math.log(0.5), math.log(4.0)))
            t = math.exp(gen.uniform(math.log(0.25), math.log(2.0)))
            qs = quadratic_form(m, alpha, mu, "varS", t=t)
            qv = quadratic_form(m, alpha, mu, "varV", t=t)
            bound = qv / (math.exp(t * alpha) - 1.0)
            worst = min(worst, bound - qs + 1e-8 * tol_scale * (1 + bound))
    ok = worst >= 0.0
    return _result("kernels", "tail-smoother-than-cable", ok,
                   f"min slack {worst:.3e}", t0)


def check_spectral_additivity(model, seed, scale, tol_scale):
    t0 = time.time()
    worst = 0.0
    for m in _kernel_models(model):
        for alpha in (0.5, 2.0):
            for t in (0.25, 1.0):
                prof = variance_profile(m, KernelQuery(alpha, t))
                gap = abs(prof.varV + prof.varS - prof.varEta) / prof.varEta
                worst = max(worst, gap)
    ok = worst <= 1e-8 * tol_scale
    return _result("kernels", "spectral-additivity", ok,
                   f"max relative gap {worst:.2e}", t0)


def check_pbar_monotone(model, seed, scale, tol_scale):
    t0 = time.time()
    ts = np.geomspace(0.125, 8.0, 13)
    vals = [pbar_density(model, float(t), 0.0) for t in ts]
    diffs = np.diff(vals)
    ok = bool(np.all(diffs <= 1e-10 * tol_scale * max(vals)))
    return _result("kernels", "pbar-time-monotonicity", ok,
                   f"max increase {float(np.max(diffs)):.3e}", t0)


def check_quadratic_form_routes(model, seed, scale, tol_scale):
    t0 = time.time()
    mu = AtomicMeasure.from_atoms([(0.0, 1.0), (0.7, -0.5), (1.3, 0.25)])
    worst = 0.0
    for kernel, kwargs in (("potential", dict(alpha=2.0)),
                           ("varV", dict(alpha=1.0, t=1.0)),
                           ("varS", dict(alpha=1.0, t=1.0))):
        a = quadratic_form(model, kwargs.get("alpha"), mu, kernel,
                           t=kwargs.get("t"), route="pairs")
        b = quadratic_form(model, kwargs.get("alpha"), mu, kernel,
                           t=kwargs.get("t"), route="grid")
        worst = max(worst, abs(a - b) / max(abs(a), 1e-12))
    ok = worst <= 1e-5 * tol_scale
    return _result("kernels", "quadratic-form-route-agreement", ok,
                   f"max relative gap {worst:.2e}", t0)


# ------------------------------------------------------------ synthesis ---

def check_field_determinism(model, seed, scale, tol_scale):
    t0 = time.time()
    grid = fields.SpectralGrid(64.0, 256)
    x = np.linspace(0.0, 3.0, 17)
    a = fields.sample_joint(model, 2.0, 1.0, grid, x, seed, replicate=3,
                            derivative_order=2)
    b = fields.sample_joint(model, 2.0, 1.0, grid, x, seed, replicate=3,
                            derivative_order=2)
    same = all(np.array_equal(p.values, q.values)
               for p, q in zip(a[:3], b[:3])) \
        and np.array_equal(a[3].values, b[3].values)
    ident = bool(np.array_equal(a[2].values, a[0].values + a[1].values))
    return _result("synthesis", "determinism-and-exact-sum",
                   same and ident,
                   f"bit-identical={same} eta=V+S exact={ident}", t0)


def check_discretisation_consistency(model, seed, scale, tol_scale):
    t0 = time.time()
    alpha, t = 2.0, 1.0
    prof = variance_profile(model, KernelQuery(alpha, t))
    worst = 0.0
    for cutoff, modes in ((256.0, 2048), (256.0, 8192), (1024.0, 8192),
                          (4096.0, 32768)):
        grid = fields.SpectralGrid(cutoff, modes)
        for kind, target in (("V", prof.varV), ("S", prof.varS),
                             ("eta", prof.varEta), ("U", prof.varU)):
            disc = 2.0 * float(np.sum(fields.spectral_density(
                kind, model, alpha, t, grid.frequencies))) * grid.delta_xi
            bias = fields.discretisation_bias(kind, model, alpha, t, grid)
            allowed = 2.0 * bias.total + 1e-9 * target
            gap = abs(disc - target)
            worst = max(worst, gap / allowed if allowed > 0 else 0.0)
    ok = worst <= 1.0 * tol_scale
    return _result("synthesis", "discretisation-consistency", ok,
                   f"max gap / reported bias {worst:.3f}", t0)


def check_bd2_empirical(model, seed, scale, tol_scale):
    t0 = time.time()
    alpha, t = 1.0, math.log(2.0)
    reps = max(2000, int(20000 * scale))
    grid = fields.SpectralGrid(1024.0, 4096)
    pts = np.array([0.0, 1.0])
    v = fields.ensemble_values(model, "V", alpha, t, grid, pts, seed, reps)
    s = fields.ensemble_values(model, "S", alpha, t, grid, pts, seed, reps)
    dv = v[:, 0] - v[:, 1]
    ds = s[:, 0] - s[:, 1]
    ev, es = float(np.mean(dv**2)), float(np.mean(ds**2))
    se = math.sqrt(np.var(ds**2) / reps
                   + np.var(dv**2) / reps / (math.exp(t * alpha) - 1.0)**2)
    slack = ev / (math.exp(t * alpha) - 1.0) + 3.0 * se - es
    return _result("synthesis", "tail-smoother-empirical", slack >= 0,
                   f"slack {slack:.3e} (3 s.e. = {3*se:.3e})", t0)


def check_derivative_variance(model, seed, scale, tol_scale):
    t0 = time.time()
    m = LevyModel.stable(1.5, 1.0)
    alpha, t = 1.0, 0.5
    reps = max(2000, int(20000 * scale))
    grid = fields.SpectralGrid(64.0, 4096)
    worst = math.inf
    for n in (1, 2, 3, 4):
        vals = fields.ensemble_values(m, "S_derivative", alpha, t, grid,
                                      np.array([0.0]), seed, reps,
                                      derivative_order=n)[:, 0]
        emp = float(np.mean(vals**2))
        exact = (1.0 / math.pi) * cosine_transform(
            lambda x: x ** (2 * n) * np.exp(-(alpha + 2 * re_psi(m, x)) * t)
            / (alpha + 2 * re_psi(m, x)), 0.0)[0]
        bias = fields.discretisation_bias("S", m, alpha, t, grid,
                                          derivative_order=n).total
        se = emp * math.sqrt(2.0 / reps)
        slack = 3.0 * se + bias - abs(emp - exact)
        worst = min(worst, slack)
    return _result("synthesis", "derivative-field-variance", worst >= 0,
                   f"min slack {worst:.3e}", t0)


def check_eta_covariance(model, seed, scale, tol_scale):
    t0 = time.time()
    alpha = 2.0
    reps = max(2000, int(10000 * scale))
    grid = fields.SpectralGrid(1024.0, 4096)
    pts = np.array([0.0, 0.5, 1.0])
    vals = fields.ensemble_values(model, "eta", alpha, 1.0, grid, pts, seed,
                                  reps)
    bias = fields.discretisation_bias("eta", model, alpha, 1.0, grid).total
    worst = math.inf
    for j, r in enumerate(pts):
        prod = vals[:, 0] * vals[:, j]
        emp = float(np.mean(prod))
        se = float(np.std(prod) / math.sqrt(reps))
        exact = u_alpha(model, alpha, float(r))
        worst = min(worst, 3.0 * se + bias - abs(emp - exact))
    return _result("synthesis", "stationary-covariance", worst >= 0,
                   f"min slack {worst:.3e}", t0)


# ----------------------------------------------------------------- spde ---

def check_dt_invariance(model, seed, scale, tol_scale):
    t0 = time.time()
    paths = max(500, int(2000 * scale))
    t_end = 1.0
    var = {}
    for dt in (0.1, 0.0125):
        cfg = torus.TorusConfig(16.0, 65, 2.0, dt)
        op = torus.StepOperator(cfg, model)
        acc = fields.RunningMoments()
        for p in range(paths):
            st = torus.initial_state(cfg, seed + (0 if dt == 0.1 else 1),
                                     path=p)
            for _ in range(int(round(t_end / dt))):
                st = op.apply(st)
            acc.add(torus.snapshot(st, cfg, [0.0]))
        var[dt] = (acc.variance, acc.variance * math.sqrt(2.0 / paths))
    gap = abs(var[0.1][0] - var[0.0125][0])
    se = math.hypot(var[0.1][1], var[0.0125][1])
    return _result("spde", "dt-invariance-in-law", gap <= 3 * se,
                   f"gap {gap:.4e} vs 3 s.e. {3*se:.4e}", t0)


def check_hermitian_preservation(model, seed, scale, tol_scale):
    t0 = time.time()
    steps = max(1000, int(1_000_000 * scale))
    cfg = torus.TorusConfig(8.0, 5, 1.0, 0.01)
    op = torus.StepOperator(cfg, model)
    st = torus.initial_state(cfg, seed, path=0)
    for _ in range(steps):
        st = op.apply(st)
    full = st.full_modes()
    gap = float(np.max(np.abs(full - np.conj(full[::-1]))))
    return _result("spde", "hermitian-symmetry", gap == 0.0,
                   f"max |u_n - conj(u_-n)| = {gap:.1e} over {steps} steps",
                   t0)


def check_stationary_spectrum(model, seed, scale, tol_scale):
    t0 = time.time()
    cfg = torus.TorusConfig(16.0, 33, 2.0, 0.05)
    paths = max(500, int(2000 * scale))
    t_end = 4.0
    op = torus.StepOperator(cfg, model)
    acc = np.zeros(cfg.half + 1)
    for p in range(paths):
        st = torus.initial_state(cfg, seed, path=p)
        for _ in range(int(round(t_end / cfg.dt))):
            st = op.apply(st)
        acc += np.abs(st.modes) ** 2
    emp = acc / paths
    k = cfg.frequencies
    exact = 1.0 / (cfg.circumference
                   * (cfg.alpha + 2.0 * np.asarray(re_psi(model, k))))
    relax = np.exp(-(cfg.alpha + 2.0 * np.asarray(re_psi(model, k)))
                   * t_end) * exact
    se = exact * math.sqrt(2.0 / paths)  # |u_n|^2 has two d.o.f. per mode
    worst = float(np.min(3.0 * se + relax - np.abs(emp - exact)))
    return _result("spde", "stationary-mode-spectrum", worst >= 0,
                   f"min slack {worst:.3e}", t0)


def check_heat_cable_modes(model, seed, scale, tol_scale):
    t0 = time.time()
    heat = torus.TorusConfig(16.0, 129, 0.0, 0.05)
    cable = torus.TorusConfig(16.0, 129, 1.5, 0.05)
    for t in (0.25, 1.0, 4.0):
        vu = torus.mode_variance(heat, model, t)
        vv = torus.mode_variance(cable, model, t)
        if not np.all(vv <= vu + 1e-15):
            return _result("spde", "per-mode-heat-dominates-cable", False,
                           f"violated at t={t}", t0)
    return _result("spde", "per-mode-heat-dominates-cable", True,
                   "formula inequality holds on all modes", t0)


# ------------------------------------------------------------ localtime ---

def check_lt_additivity(model, seed, scale, tol_scale):
    t0 = time.time()
    cfg = localtime.PathConfig(1.5, 0.5, 1e-3, seed=seed)
    gen = rng.stream(seed, rng.DOMAIN_PATH, 0)
    pos = localtime.simulate_path(cfg, 4000, gen)
    eps = cfg.bandwidth
    whole = localtime.local_time(pos, cfg.dt, 0.1, eps).value
    first = localtime.local_time(pos[:2001], cfg.dt, 0.1, eps).value
    second = localtime.local_time(pos[2000:], cfg.dt, 0.1, eps).value
    # the box counts split exactly; the scaled values agree to rounding
    counts = [int(np.count_nonzero(np.abs(seg - 0.1) < eps))
              for seg in (pos[:-1], pos[:2000], pos[2000:-1])]
    ok = counts[0] == counts[1] + counts[2] \
        and math.isclose(whole, first + second, rel_tol=1e-12)
    return _result("localtime", "additivity-under-restart", ok,
                   f"counts {counts[0]} = {counts[1]} + {counts[2]}", t0)


def check_lt_domination(model, seed, scale, tol_scale):
    t0 = time.time()
    paths = max(1000, int(4000 * scale))
    y, x = 0.0, 0.5
    times = [1.0, 2.0, 4.0]
    from_x = localtime.PathConfig(1.5, 0.5, 1e-3, x0=x, seed=seed)
    from_y = localtime.PathConfig(1.5, 0.5, 1e-3, x0=y, seed=seed)
    mx, sx = localtime.mean_local_times(from_x, [y], times, paths,
                                        seed=seed)
    my, sy = localtime.mean_local_times(from_y, [y], times, paths,
                                        seed=seed + 1)
    worst = math.inf
    for ti, t in enumerate(times):
        se = math.hypot(sx[ti, 0], sy[ti, 0])
        worst = min(worst, my[ti, 0] + 3 * se - mx[ti, 0])
        bound = 2.0 * t * my[0, 0]
        se2 = math.hypot(sx[ti, 0], 2.0 * t * sy[0, 0])
        worst = min(worst, bound + 3 * se2 - mx[ti, 0])
    return _result("localtime", "hitting-domination-and-linear-growth",
                   worst >= 0, f"min slack {worst:.4e}", t0)


def check_lt_discounted_split(model, seed, scale, tol_scale):
    t0 = time.time()
    paths = max(2000, int(10000 * scale))
    cfg = localtime.PathConfig(1.5, 0.5, 1e-3, seed=seed)
    res = localtime.discounted_split_check(cfg, 1.0, 0.0, 1.0,
                                           math.log(2.0), paths, seed=seed)
    return _result("localtime", "discounted-split-inequality", res.verdict,
                   f"margin {res.margin:.4e} (se {res.margin_se:.1e})", t0)


SUITES = {
    "levy": [check_evenness, check_second_moment_lower_bound,
             check_averaged_upper_bound, check_stable_consistency],
    "kernels": [check_green_bound, check_existence_sandwich,
                check_uv_sandwich, check_bd2_exact,
                check_spectral_additivity, check_pbar_monotone,
                check_quadratic_form_routes],
    "synthesis": [check_field_determinism, check_discretisation_consistency,
                  check_bd2_empirical, check_derivative_variance,
                  check_eta_covariance],
    "spde": [check_dt_invariance, check_hermitian_preservation,
             check_stationary_spectrum, check_heat_cable_modes],
    "localtime": [check_lt_additivity, check_lt_domination,
                  check_lt_discounted_split],
}


def run_suites(suite_names, model: LevyModel, seed: int,
               paths_scale: float = 1.0,
               tol_scale: float = 1.0) -> list[CheckResult]:
    results = []
    for name in suite_names:
        if name not in SUITES:
            raise ValueError(f"unknown verify suite {name!r}")
        for fn in SUITES[name]:
            results.append(fn(model, seed, paths_scale, tol_scale))
    return results
