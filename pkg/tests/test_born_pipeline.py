"""Born functional, measurement modes, sweeps, localization and scaling."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlw_inverse import born_pipeline as bp
from nlw_inverse.closed_forms import ScaleParams
from nlw_inverse.nonlinearity import NonlinearitySpec as N

W_INT = 40 * math.log(2) - 27.5
HW_QUINTIC = 6 * W_INT
SIXTH_MOMENT = 64 * math.pi * W_INT


# ----------------------------------------------------------------- Born functional


def test_born_functional_quintic_unit_scale():
    p = ScaleParams(1.0, 1.0)
    val, err = bp.born_integral(N.quintic(), p)
    assert val == pytest.approx(SIXTH_MOMENT, rel=1e-10)
    assert err < 1e-8 * val
    assert bp.born_functional(N.quintic(), p) == pytest.approx(SIXTH_MOMENT, rel=1e-10)
    # layer-cake route, normalized by 32 pi / 3 at alpha = eps = 1
    lc = bp.born_layer_cake(N.quintic(), p) * 32 * math.pi / 3
    assert lc == pytest.approx(SIXTH_MOMENT, rel=1e-10)


def test_born_functional_zero():
    assert bp.born_functional(N.zero(), ScaleParams(1.3, 0.2)) == 0.0


@given(st.floats(0.2, 5.0), st.floats(0.01, 1.0))
def test_born_scaling_law(alpha, eps):
    # value(alpha, eps) = (32 pi eps^8 / (3 alpha^2)) (H*w)(log 2 alpha)
    val = bp.born_functional(N.quintic(), ScaleParams(alpha, eps))
    assert val == pytest.approx(32 * math.pi * eps**8 / (3 * alpha**2) * HW_QUINTIC, rel=1e-9)


@pytest.mark.parametrize("F", [N.quintic(), N.rational_quintic(), N.quintic(-2.0)], ids=str)
@pytest.mark.parametrize("alpha", [0.3, 1.0, 4.0])
def test_layer_cake_and_H_routes_agree(F, alpha):
    p = ScaleParams(alpha, 0.1)
    direct, _ = bp.normalized_born(F, p)
    assert bp.hw_via_H(F, p) == pytest.approx(direct, rel=1e-8)
    assert bp.born_layer_cake(F, p) == pytest.approx(direct, rel=1e-8)


@given(st.floats(-3.0, 3.0))
@settings(max_examples=15)
def test_hw_quintic_independent_of_alpha(tau0):
    hw, _, mode = bp.measure_hw_sample(N.quintic(), ScaleParams.from_tau0(tau0, 0.05))
    assert mode == "born_oracle"
    assert hw == pytest.approx(HW_QUINTIC, rel=1e-10)


def test_measure_zero_and_bad_mode():
    p = ScaleParams(1.0, 0.05)
    assert bp.measure_hw_sample(N.zero(), p)[0] == 0.0
    with pytest.raises(ValueError):
        bp.measure_hw_sample(N.quintic(), p, mode="exact")


def test_masked_born_depends_on_center():
    F = N.masked_quintic(1.0)
    inside, _ = bp.normalized_born(F, ScaleParams(1.0, 0.05))
    outside, _ = bp.normalized_born(F, ScaleParams(1.0, 0.05, x0=(3.0, 0.0, 0.0)))
    assert inside == pytest.approx(HW_QUINTIC, rel=1e-8)
    # the probe tail reaches the mask only at large |t|: tiny but not zero
    assert abs(outside) < 1e-10


# ----------------------------------------------------------------- full PDE


def test_full_pde_matches_oracle():
    p = ScaleParams(1.0, 0.05)
    full, err, mode = bp.measure_hw_sample(N.quintic(), p, "full_pde")
    assert mode == "full_pde"
    assert full == pytest.approx(HW_QUINTIC, rel=1e-3)
    assert abs(full - HW_QUINTIC) <= err


def test_full_pde_zero_and_odd():
    p = ScaleParams(0.7, 0.05)
    assert bp.measure_hw_sample(N.zero(), p, "full_pde")[0] == 0.0
    # only the Born term is odd in F; the O(eps^4) correction is not
    a, ea, _ = bp.measure_hw_sample(N.quintic(), p, "full_pde")
    b, eb, _ = bp.measure_hw_sample(N.quintic(-1.0), p, "full_pde")
    assert abs(a + b) <= ea + eb
    assert a + b != 0


def test_probe_pairing_richardson_reduces_error():
    F, p = N.quintic(), ScaleParams(1.0, 0.05)
    # probe-frame pairing of the Born term: 32 pi eps^4 hw / 3
    born = 32 * math.pi * p.epsilon**4 * HW_QUINTIC / 3
    plain = bp.probe_pairing(F, p, bp.PdeSettings(richardson=False))
    rich = bp.probe_pairing(F, p)
    assert abs(rich.total - born) < abs(plain.total - born) / 10
    assert rich.discretization_error > 0


def test_regime_selftest_warns_for_large_eps():
    with pytest.warns(bp.BornRegimeWarning):
        assert not bp.born_regime_selftest(N.quintic(), ScaleParams(1.0, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert bp.born_regime_selftest(N.quintic(), ScaleParams(1.0, 0.05))


# ----------------------------------------------------------------- sweeps


@pytest.mark.parametrize("F", [N.quintic(), N.quintic(-1.0), N.rational_quintic()], ids=str)
def test_run_sweep_recovers(F):
    rep = bp.run_sweep(F, bp.SweepPlan())
    assert rep.max_relative_error() < 0.05
    np.testing.assert_allclose(rep.f_true.values, F.core(rep.plan.u_grid))
    assert "residual" in " ".join(rep.diagnostics)


def test_run_sweep_zero_recovers_zero():
    rep = bp.run_sweep(N.zero(), bp.SweepPlan())
    assert np.all(rep.hw_samples.values == 0)
    assert np.all(rep.f_estimate.values == 0)


def test_sweep_is_linear_in_F():
    plan = bp.SweepPlan(tau_min=-2.0, tau_max=2.0, tau_step=0.1)
    a = bp.run_sweep(N.rational_quintic(), plan)
    b = bp.run_sweep(N.rational_quintic(-3.0), plan)
    for x, y in ((a.hw_samples, b.hw_samples), (a.h_estimate, b.h_estimate), (a.f_estimate, b.f_estimate)):
        np.testing.assert_allclose(y.values, -3.0 * x.values, rtol=1e-12, atol=1e-300)


def test_sweep_samples_carry_mode_and_error():
    hw = bp.measure_sweep(N.quintic(), bp.SweepPlan(tau_min=-1, tau_max=1, tau_step=0.5))
    assert hw.meta["mode"] == "born_oracle"
    assert len(hw.meta["error_bars"]) == len(hw)


def test_sweep_workers_do_not_change_results():
    plan = bp.SweepPlan(tau_min=-2.0, tau_max=2.0, tau_step=0.1)
    a = bp.measure_sweep(N.rational_quintic(), plan, workers=1)
    b = bp.measure_sweep(N.rational_quintic(), plan, workers=2)
    assert np.array_equal(a.values, b.values)


def test_sweep_plan_validation():
    with pytest.raises(ValueError):
        bp.SweepPlan(mode="guess")
    with pytest.raises(ValueError):
        bp.SweepPlan(mode="full_pde", pde_budget=10)
    with pytest.raises(ValueError):
        bp.SweepPlan(tau_min=1.0, tau_max=0.0)
    plan = bp.SweepPlan()
    assert plan.n_samples == 121
    assert np.all(plan.params(0.3).alpha > 0)
    assert plan.params(0.3).alpha == pytest.approx(0.5 * math.exp(0.3))


def test_report_serializes():
    rep = bp.run_sweep(N.quintic(), bp.SweepPlan(tau_min=-2.0, tau_max=2.0, tau_step=0.1))
    text = rep.to_json()
    assert '"hw_samples"' in text and '"plan"' in text
    assert rep.to_json() == text


# ----------------------------------------------------------------- localization


def test_localization_table():
    F = N.masked_quintic(1.0)
    centers = [(0.0, 0.0, 0.0), (3.0, 0.0, 0.0), (1.0, 0.0, 0.0)]
    tab = bp.localization_experiment(F, centers, recover_plan=bp.SweepPlan(epsilon=1e-3))
    kinds = {c.x0_norm: c for c in tab.centers}
    assert kinds[0.0].kind == "interior" and kinds[0.0].limit == pytest.approx(HW_QUINTIC)
    assert kinds[3.0].kind == "exterior" and kinds[3.0].limit == 0.0
    assert kinds[1.0].kind == "boundary" and kinds[1.0].monotone is None
    for x0 in (0.0, 3.0):
        assert kinds[x0].monotone
        assert kinds[x0].recovery_error < 0.05
    assert tab.passed
    devs = [r.deviation for r in tab.rows if r.x0_norm == 0.0]
    assert all(a > b for a, b in zip(devs, devs[1:]))


# ----------------------------------------------------------------- scaling


def test_scaling_study_zero_is_floor_limited():
    rep = bp.born_scaling_study(N.zero())
    assert rep.slope is None and rep.floor_limited
    assert all(d == 0.0 for d in rep.differences)


def test_scaling_study_needs_three_points():
    with pytest.raises(ValueError):
        bp.born_scaling_study(N.quintic(), epsilons=(0.1,))
    with pytest.raises(ValueError):
        bp.born_scaling_study(N.quintic(), epsilons=(0.1, 0.1, 0.05))
