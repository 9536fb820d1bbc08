import warnings

import numpy as np
import pytest

from lindsim.experiments import (
    LeakageWarning,
    degenerate_chain,
    error_curve,
    fit_inverse_sqrt,
    hierarchy_iterate,
    leakage_check,
    log_grid,
    propagators,
    regression_scenarios,
    scaling_envelope,
    sweep_T,
)
from lindsim.hilbert import pauli
from lindsim.numerics import expm, spectral_norm
from lindsim.protocol import (
    FIGURE_MODE,
    LIBRARY_MODE,
    collective_damping_cavity,
    collective_dephasing,
    scale,
)
from lindsim.superop import dissipator

from conftest import random_matrix


def test_log_grid():
    g = log_grid(0.01, 100.0, 10)
    assert g[-1] == 100.0 and g[0] >= 0.01 and np.all(np.diff(g) > 0)
    assert len(g) == 41
    # a point one decade up is exactly ten times the earlier one
    assert np.allclose(g[10:] / g[:-10], 10.0, rtol=1e-14)
    with pytest.raises(ValueError):
        log_grid(1.0, 0.5)


def test_propagators_match_expm(rng):
    l = random_matrix(rng, 4) - 3 * np.eye(4)
    times = log_grid(0.01, 10.0, 5)
    for t, p in zip(times, propagators(l, times)):
        assert np.allclose(p, expm(t * l), atol=1e-10, rtol=1e-8)


def test_error_curve_basics():
    p = collective_dephasing(1, 2.0, 1.0)
    model = scale(p, 100.0, FIGURE_MODE)
    curve = error_curve(model, [0.0, 1.0, 10.0, 100.0])
    assert curve.distances[0] == pytest.approx(0.0, abs=1e-14)
    assert np.all(curve.distances >= 0)
    assert curve.sup_error == curve.distances.max() and curve.final_error == curve.distances[-1]
    with pytest.raises(ValueError):
        error_curve(model, [1.0, 0.5])


def test_error_curve_matches_direct_evaluation():
    p = collective_dephasing(1, 2.0, 1.0)
    model = scale(p, 50.0, LIBRARY_MODE)
    grid = log_grid(0.05, 50.0, 4)
    curve = error_curve(model, grid)
    p0 = model.spectral.p0
    direct = [spectral_norm((expm(t * model.l_t) - expm(t * model.l_eff)) @ p0) for t in grid]
    assert np.allclose(curve.distances, direct, rtol=1e-8, atol=1e-12)


def test_fig3_ratio():
    p = collective_dephasing(1, 2.0, 1.0)
    sd = p.spectral()
    a = error_curve(scale(p, 100.0, FIGURE_MODE, sd))
    b = error_curve(scale(p, 1000.0, FIGURE_MODE, sd))
    assert 2.5 <= a.sup_error / b.sup_error <= 4.0


@pytest.mark.parametrize("mode", [FIGURE_MODE, LIBRARY_MODE])
def test_matched_time_audit(mode):
    # past the bath transient, the curve at 100 T lies below the curve at T at equal t/T
    p = collective_dephasing(1, 2.0, 1.0)
    sd = p.spectral()
    a, b = scale(p, 100.0, mode, sd), scale(p, 1e4, mode, sd)
    ca = error_curve(a, points_per_decade=10)
    cb = error_curve(b, t_grid=ca.t_grid * 100)
    late = ca.t_grid >= 10 * a.tau_r
    assert np.all(cb.distances[late] <= ca.distances[late])


def test_sweep_small():
    p = collective_dephasing(1, 2.0, 1.0)
    T = np.logspace(2, 4, 5)
    res = sweep_T(p, T, FIGURE_MODE, points_per_decade=20)
    assert res.r_squared >= 0.99 and not res.degenerate
    assert np.all(np.diff(res.sup_errors) < 0)
    assert np.allclose(res.fit_prediction, res.fit_slope / np.sqrt(res.T_values) + res.fit_intercept)
    threaded = sweep_T(p, T[::-1], FIGURE_MODE, points_per_decade=20, threads=3)
    assert np.array_equal(threaded.sup_errors, res.sup_errors)
    final = sweep_T(p, T, FIGURE_MODE, points_per_decade=20, metric="final")
    assert np.array_equal(final.errors, final.final_errors)


def test_sweep_preconditions():
    p = collective_dephasing(1, 2.0, 1.0)
    with pytest.raises(ValueError):
        sweep_T(p, [100.0, 200.0, 300.0, 400.0])
    with pytest.raises(ValueError):
        sweep_T(p, [10.0, 100.0, 1000.0])
    with pytest.raises(ValueError):
        sweep_T(p, np.logspace(2, 4, 5), metric="median")


def test_sweep_degenerate_when_uncoupled():
    p = collective_dephasing(1, 2.0, 1.0, g=0.0)
    res = sweep_T(p, np.logspace(2, 4, 4), LIBRARY_MODE, points_per_decade=5)
    assert res.degenerate and res.sup_errors.max() <= 1e-8
    assert fit_inverse_sqrt([1, 10, 100, 1000], [0, 0, 0, 0])[3]


def test_scaling_envelope():
    env = scaling_envelope(collective_dephasing(1, 2.0, 1.0), [100.0, 300.0, 1000.0])
    assert env.max() / env.min() < 2


def test_leakage_strong_damping():
    p = collective_damping_cavity(1, 0.0, 1.0, 8)
    rep = leakage_check(scale(p, 100.0, FIGURE_MODE), [1.0, 10.0, 100.0])
    assert rep.max_population <= 1e-8 and not rep.warned
    assert rep.levels == (6, 7)


def test_leakage_low_cutoff_warns():
    p = collective_damping_cavity(2, 0.0, 1.0, 2, g=5.0)
    model = scale(p, 1.0, LIBRARY_MODE)
    with pytest.warns(LeakageWarning):
        rep = leakage_check(model, [0.1, 1.0])
    assert rep.max_population > 1e-8


def test_leakage_zero_coupling():
    p = collective_damping_cavity(1, 0.0, 1.0, 4, g=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = leakage_check(scale(p, 10.0, LIBRARY_MODE), [1.0, 10.0])
    assert rep.max_population == 0.0


def test_leakage_requires_boson():
    with pytest.raises(ValueError):
        leakage_check(scale(collective_dephasing(), 10.0), [1.0])


def test_hierarchy_chain():
    l0, ks = degenerate_chain(1.0)
    levels = hierarchy_iterate(l0, ks, 0.1, 3)
    assert [lv.p0_dim for lv in levels] == [16, 4, 1]
    assert levels[-1].status == "unique"
    assert levels[1].tau_r / levels[0].tau_r >= 0.1 * 0.1**-2
    assert levels[0].epsilon == pytest.approx(0.1)


def test_hierarchy_unique_start():
    levels = hierarchy_iterate(dissipator(pauli("minus")), pauli("x"), 0.1)
    assert len(levels) == 1 and levels[0].status == "unique"


def test_hierarchy_first_order_stops():
    l0, _ = degenerate_chain(1.0)
    k = np.kron(pauli("x"), np.eye(4))  # acts inside the steady manifold
    levels = hierarchy_iterate(l0, k, 0.1)
    assert levels[-1].status == "hamiltonian"
    assert levels[0].first_order_norm > 0


def test_hierarchy_runs_out_of_couplings():
    l0, ks = degenerate_chain(1.0)
    levels = hierarchy_iterate(l0, ks[0], 0.1)
    assert levels[-1].status == "no_coupling" and len(levels) == 2


def test_regression_scenarios():
    results = regression_scenarios()
    assert len(results) >= 6
    for r in results:
        assert r.passed, r.name
        assert np.allclose(r.extracted_rates, r.expected_rates, atol=1e-8)
    names = [r.name for r in results]
    assert any("thermal" in n for n in names) and any("dephasing" in n for n in names) and any("cavity" in n for n in names)
