import math

import numpy as np
import pytest

from dynkin_lab import torus
from dynkin_lab.fields import RunningMoments
from dynkin_lab.levy import LevyModel
from dynkin_lab.torus import (StepOperator, TorusConfig, TorusState,
                              initial_state, mode_variance,
                              point_variance_exact, run_moments, snapshot,
                              step)

BROWNIAN = LevyModel.brownian(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        TorusConfig(16.0, 64, 1.0, 0.1)   # even mode count
    with pytest.raises(ValueError):
        TorusConfig(-1.0, 65, 1.0, 0.1)
    with pytest.raises(ValueError):
        TorusConfig(16.0, 65, -0.5, 0.1)
    with pytest.raises(ValueError):
        TorusConfig(16.0, 65, 1.0, 0.0)


def test_snapshot_zero_state():
    cfg = TorusConfig(16.0, 33, 0.0, 0.1)
    st = initial_state(cfg, seed=1)
    assert np.all(snapshot(st, cfg, [0.0, 3.0, 15.9]) == 0.0)


def test_snapshot_mode_injection_cosine():
    cfg = TorusConfig(16.0, 33, 0.0, 0.1)
    modes = np.zeros(cfg.half + 1, dtype=complex)
    modes[1] = 1.0
    st = TorusState(0.0, modes, 0, 0, 0)
    xs = np.array([0.0, 4.0, 8.0, 12.0])
    vals = snapshot(st, cfg, xs)
    assert vals == pytest.approx(2 * np.cos(2 * np.pi * xs / 16.0),
                                 abs=1e-12)


def test_snapshot_domain_error():
    cfg = TorusConfig(16.0, 33, 0.0, 0.1)
    st = initial_state(cfg, seed=1)
    with pytest.raises(ValueError):
        snapshot(st, cfg, [16.0])
    with pytest.raises(ValueError):
        snapshot(st, cfg, [-0.1])


def test_zero_mode_variance_heat_exact():
    # alpha = 0 zero mode is a Brownian motion in time: Var = t/L, and the
    # one-step recursion reproduces it exactly in floating point
    cfg = TorusConfig(16.0, 33, 0.0, 0.05)
    mv = mode_variance(cfg, BROWNIAN, 0.05)
    assert mv[0] == pytest.approx(0.05 / 16.0, rel=1e-12)
    op = StepOperator(cfg, BROWNIAN)
    var = 0.0
    for _ in range(200):
        var = var * op.decay[0] ** 2 + op.sigma_zero ** 2
    assert var == pytest.approx(200 * 0.05 / 16.0, rel=1e-12)


def test_step_is_pure_and_reproducible():
    cfg = TorusConfig(16.0, 17, 1.0, 0.1)
    st = initial_state(cfg, seed=5, path=2)
    a = step(st, cfg, BROWNIAN)
    b = step(st, cfg, BROWNIAN)
    assert np.array_equal(a.modes, b.modes)
    assert a.time == pytest.approx(0.1)
    assert a.step_index == 1


def test_hermitian_symmetry_structural():
    cfg = TorusConfig(8.0, 5, 1.0, 0.01)
    op = StepOperator(cfg, BROWNIAN)
    st = initial_state(cfg, seed=9)
    for _ in range(1000):
        st = op.apply(st)
    full = st.full_modes()
    assert np.array_equal(full, np.conj(full[::-1]))


def test_mode_variance_matches_ensemble():
    cfg = TorusConfig(16.0, 17, 2.0, 0.1)
    op = StepOperator(cfg, BROWNIAN)
    paths, steps = 6000, 8
    acc = np.zeros(cfg.half + 1)
    for p in range(paths):
        st = initial_state(cfg, seed=21, path=p)
        for _ in range(steps):
            st = op.apply(st)
        acc += np.abs(st.modes) ** 2
    emp = acc / paths
    exact = mode_variance(cfg, BROWNIAN, steps * cfg.dt)
    se = exact * math.sqrt(2.0 / paths)
    assert np.all(np.abs(emp - exact) <= 4 * se)


def test_point_variance_ensemble_and_dt_invariance():
    paths = 3000
    target = {}
    for dt in (0.1, 0.0125):
        cfg = TorusConfig(16.0, 65, 2.0, dt)
        op = StepOperator(cfg, BROWNIAN)
        acc = RunningMoments()
        for p in range(paths):
            st = initial_state(cfg, seed=33 + (dt == 0.1), path=p)
            for _ in range(int(round(1.0 / dt))):
                st = op.apply(st)
            acc.add(snapshot(st, cfg, [0.0, 5.0, 10.0]))
        target[dt] = acc.variance
    exact = point_variance_exact(TorusConfig(16.0, 65, 2.0, 0.1), BROWNIAN,
                                 1.0)
    se = exact * math.sqrt(2.0 / paths)
    assert abs(target[0.1] - exact) <= 3 * se
    assert abs(target[0.1] - target[0.0125]) <= 3 * math.sqrt(2) * se


def test_stationary_spectrum_limit():
    cfg = TorusConfig(16.0, 33, 2.0, 0.25)
    exact = torus.stationary_point_variance(cfg, BROWNIAN)
    assert point_variance_exact(cfg, BROWNIAN, 50.0) == \
        pytest.approx(exact, rel=1e-10)


def test_heat_dominates_cable_per_mode():
    heat = TorusConfig(16.0, 65, 0.0, 0.1)
    cable = TorusConfig(16.0, 65, 2.0, 0.1)
    for t in (0.1, 1.0, 10.0):
        vu = mode_variance(heat, BROWNIAN, t)
        vv = mode_variance(cable, BROWNIAN, t)
        assert np.all(vv <= vu + 1e-15)


def test_torus_covariance_matches_line_kernel():
    # long-run torus covariance approaches exp(-a r)/(4a) for r << L
    cfg = TorusConfig(64.0, 2049, 2.0, 0.1)
    for r in (0.5, 1.0, 2.0):
        tor = torus.point_covariance_exact(cfg, BROWNIAN, 40.0, r)
        assert tor == pytest.approx(math.exp(-r) / 4.0, rel=1e-3)


def test_run_moments_report():
    cfg = TorusConfig(16.0, 33, 2.0, 0.1)
    report = run_moments(cfg, BROWNIAN, 2.0, 500, [0.0, 4.0], seed=3)
    assert len(report.rows) == 4  # two times x two probes
    assert len(report.covariances) == 1
    c = report.covariances[0]
    scale = report.rows[-1].exact_var
    assert abs(c.cov - c.exact_cov) <= 5 * scale * math.sqrt(2.0 / 500)
    assert report.stationarity_gap is not None
    assert report.stationarity_gap <= report.stationarity_bound \
        + 4 * report.rows[-1].exact_var * math.sqrt(2.0 / 500)
    for row in report.rows:
        assert abs(row.mean) <= 4 * math.sqrt(row.exact_var / 500)
        assert abs(row.var - row.exact_var) <= 4 * row.exact_var \
            * math.sqrt(2.0 / 500)
    text = report.csv_text("prov")
    assert text.startswith("# prov\nt,x,mean,var,exact_var,stderr,paths\n")


def test_run_moments_rejects_small_torus():
    # image-sum correction above 1% must be refused
    cfg = TorusConfig(2.0, 33, 0.5, 0.1)
    with pytest.raises(ValueError, match="image-sum"):
        run_moments(cfg, BROWNIAN, 1.0, 10, [0.0], seed=1)


def test_run_moments_validation():
    cfg = TorusConfig(16.0, 33, 2.0, 0.1)
    with pytest.raises(ValueError):
        run_moments(cfg, BROWNIAN, 0.0, 10, [0.0])
    with pytest.raises(ValueError):
        run_moments(cfg, BROWNIAN, 1.0, 1, [0.0])
    with pytest.raises(ValueError):
        run_moments(cfg, BROWNIAN, 1.05, 10, [0.0])  # not a dt multiple
