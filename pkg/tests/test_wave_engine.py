"""Radial solver: linear propagation, nonlinear stepping, Picard and scattering."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlw_inverse import wave_engine as we
from nlw_inverse.closed_forms import ScaleParams, eval_u_lin, probe_state
from nlw_inverse.nonlinearity import NonlinearitySpec as N
from nlw_inverse.radial import RadialGrid, RadialState, energy_inner, energy_norm_sq

Q = N.quintic()


def bump(grid, amp=1.0, width=1.0, vel=0.0):
    r = grid.r
    prof = np.where(r < width, (1 - (r / width) ** 2) ** 4, 0.0)
    return RadialState(grid, amp * prof, vel * amp * prof)


def enorm(a, b):
    d = a - b
    return math.sqrt(max(energy_norm_sq(d), 0.0))


# ----------------------------------------------------------------- linear flow


def test_probe_propagated_matches_closed_form():
    errs = []
    for h in (0.01, 0.005):
        g = RadialGrid.from_spacing(h, 4.0)
        s = we.propagate_linear(probe_state(ScaleParams(1.0, 1.0), g), 0.25)
        r = g.r
        exact = eval_u_lin(0.25, r[1:])
        assert s.u[round(0.1 / h)] == pytest.approx(2.0, abs=1e-10)
        # u_t of the probe jumps at r = 1; away from the cone |r - 1| <= t it is exact
        far = np.abs(r[1:] - 1.0) > 0.25 + 2 * h
        np.testing.assert_allclose(s.u[1:][far], exact[far], atol=1e-10)
        errs.append(np.max(np.abs(s.u[1:] - exact)))
    # the jump cell is smeared by one cell width: first order there
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)


def test_zero_state_stays_zero():
    g = RadialGrid.from_spacing(0.05, 5.0)
    s = we.propagate_linear(RadialState.zeros(g), 1.5)
    assert np.all(s.u == 0) and np.all(s.ut == 0)


@given(
    amp=st.floats(0.1, 3.0),
    vel=st.floats(-2.0, 2.0),
    t=st.integers(1, 60).map(lambda k: k * 0.025),
)
def test_group_property_in_energy_norm(amp, vel, t):
    h = 0.025
    g = RadialGrid.from_spacing(h, 6.0)
    d = bump(g, amp, 1.0, vel)
    back = we.propagate_linear(we.propagate_linear(d, t), -t)
    assert enorm(back, d) <= 8 * h**2 * math.sqrt(energy_norm_sq(d))


def test_group_property_second_order():
    errs = []
    for h in (0.025, 0.0125, 0.00625):
        g = RadialGrid.from_spacing(h, 6.0)
        d = bump(g, 1.0, 1.0, 2.0)
        errs.append(enorm(we.propagate_linear(we.propagate_linear(d, 1.0), -1.0), d))
    np.testing.assert_allclose(np.log2(np.array(errs[:-1]) / errs[1:]), 2.0, atol=0.1)


def test_linear_energy_preserved_by_propagation():
    g = RadialGrid.from_spacing(0.01, 6.0)
    d = bump(g, 1.0, 1.0, 0.5)
    e0 = energy_norm_sq(d)
    for t in (0.5, 1.0, 2.0):
        assert energy_norm_sq(we.propagate_linear(d, t)) == pytest.approx(e0, rel=1e-3)


def test_propagation_beyond_domain_raises():
    g = RadialGrid.from_spacing(0.05, 2.0)
    with pytest.raises(we.DomainEscapeError):
        we.propagate_linear(bump(g), 1.5)


# ----------------------------------------------------------------- nonlinear stepping


def test_zero_F_matches_free_flow():
    g = we.grid_for_horizon(1.0, 3.0, 0.02)
    d = bump(g, 0.5)
    tr = we.solve_nlw(d, None, 3.0)
    free = we.propagate_linear(d, 3.0)
    np.testing.assert_allclose(tr.final.v, free.v, atol=1e-12)
    tz = we.solve_nlw(d, N.zero(), 3.0)
    np.testing.assert_array_equal(tz.v, tr.v)


def test_linear_energy_conserved_per_step():
    g = we.grid_for_horizon(1.0, 4.0, 0.02)
    E = we.discrete_energy(we.solve_nlw(bump(g, 0.5, 1.0, 1.0), None, 4.0))
    assert np.max(np.abs(np.diff(E))) / E[0] < 1e-10


@given(amp=st.floats(0.05, 0.6), vel=st.floats(-1.0, 1.0))
def test_odd_data_gives_exactly_negated_solution(amp, vel):
    g = we.grid_for_horizon(1.0, 1.0, 0.05)
    d = bump(g, amp, 1.0, vel)
    a = we.solve_nlw(d, Q, 1.0)
    b = we.solve_nlw(-d, Q, 1.0)
    assert np.array_equal(b.v, -a.v)
    assert np.array_equal(b.vt, -a.vt)


def test_finite_propagation_speed():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    tr = we.solve_nlw(bump(g, 0.8), Q, 2.0)
    r = g.r
    for k in range(0, len(tr.times), 10):
        nz = np.nonzero(tr.v[k])[0]
        assert r[nz[-1]] <= 1.0 + k * g.dr + 1e-12


def test_domain_escape_in_solver():
    g = RadialGrid.from_spacing(0.05, 2.0)
    with pytest.raises(we.DomainEscapeError):
        we.solve_nlw(bump(g, 0.5), Q, 2.0)


def test_backward_horizon():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    tr = we.solve_nlw(bump(g, 0.5), Q, -2.0)
    assert tr.times[-1] == pytest.approx(-2.0)
    assert tr.dt < 0


def test_horizon_and_stride_validation():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    with pytest.raises(ValueError):
        we.solve_nlw(bump(g), Q, 1.013)
    with pytest.raises(ValueError):
        we.solve_nlw(bump(g), Q, 1.0, stride=3)
    with pytest.raises(ValueError):
        we.solve_nlw(bump(g), Q, 1.0, mode="rk4")


def test_second_order_convergence():
    def final_energy(h):
        g = we.grid_for_horizon(1.0, 2.0, h)
        return energy_norm_sq(we.solve_nlw(bump(g, 2.0), Q, 2.0).final)

    q = [final_energy(h) for h in (0.04, 0.02, 0.01, 0.005)]
    orders = [math.log2((q[i] - q[i + 1]) / (q[i + 1] - q[i + 2])) for i in range(2)]
    assert all(abs(p - 2.0) <= 0.2 for p in orders)


# ----------------------------------------------------------------- Picard


def test_picard_contracts_and_agrees_with_leapfrog():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    d = bump(g, 0.5)
    pic = we.solve_nlw(d, Q, 2.0, mode="picard")
    assert pic.picard.converged
    assert max(pic.picard.ratios) < 0.5
    lf = we.solve_nlw(d, Q, 2.0)
    # Richardson-style discretization scale: leapfrog at two resolutions
    g2 = we.grid_for_horizon(1.0, 2.0, 0.01)
    lf2 = we.solve_nlw(bump(g2, 0.5), Q, 2.0)
    disc = abs(energy_norm_sq(lf2.final) - energy_norm_sq(lf.final))
    assert abs(energy_norm_sq(pic.final) - energy_norm_sq(lf.final)) <= disc
    assert np.max(np.abs(pic.v - lf.v)) < 1e-10


def test_picard_diverges_for_large_data():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    with pytest.raises(we.PicardDivergenceError):
        we.solve_nlw(bump(g, 6.0), Q, 2.0, mode="picard")


def test_small_data_close_to_linear():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    devs = []
    for amp in (0.2, 0.1):
        d = bump(g, amp)
        nl = we.solve_nlw(d, Q, 2.0).final
        devs.append(enorm(nl, we.propagate_linear(d, 2.0)))
    assert math.log2(devs[0] / devs[1]) == pytest.approx(5.0, abs=0.05)


# ----------------------------------------------------------------- norms


def test_strichartz_zero_and_homogeneous():
    g = we.grid_for_horizon(1.0, 2.0, 0.02)
    assert we.strichartz_norm(we.solve_nlw(RadialState.zeros(g), Q, 2.0)) == 0.0
    tr = we.solve_nlw(bump(g, 0.5), Q, 2.0)
    base = we.strichartz_norm(tr)
    for c in (2.0, -0.5, 3.7):
        assert we.strichartz_norm(tr.scaled(c)) == pytest.approx(abs(c) * base, rel=1e-12)


def _probe_strichartz_closed(T, n_t=4001, n_r=4001):
    # trapezoid quadrature of the closed form on t in [-T, T], r in [0, |t| + 1]
    t = np.linspace(-T, T, n_t)
    inner = []
    for tk in t:
        r = np.linspace(0.0, abs(tk) + 1.0, n_r)
        u = eval_u_lin(tk, r)
        inner.append(math.sqrt(np.trapezoid(4 * math.pi * r**2 * u**10, r)))
    return np.trapezoid(inner, t) ** 0.2


def test_strichartz_of_probe_matches_closed_form():
    def solver_norm(h, T):
        g = we.grid_for_horizon(2.0, 3 * T, h)
        d = probe_state(ScaleParams(1.0, 1.0), g)
        tr = we.solve_nlw(we.propagate_linear(d, -T), None, 2 * T)
        return we.strichartz_norm(tr)

    closed = _probe_strichartz_closed(3.0)
    assert solver_norm(0.005, 3.0) == pytest.approx(closed, rel=5e-3)
    # the tail |t| > T decays (u_lin ~ 1/t on a shell of width 2): finite limit
    n2, n4, n8 = (solver_norm(0.01, T) for T in (2.0, 4.0, 8.0))
    assert 0 < n8 - n4 < n4 - n2


# ----------------------------------------------------------------- scattering


def test_zero_F_scattering_is_identity():
    g = we.grid_for_horizon(2.0, 12.0, 0.02)
    d = bump(g, 0.5, 1.0, 0.3)
    for F in (None, N.zero()):
        for res in (we.scattering_operator(F, d, 3.0), we.wave_operator(F, d, 3.0)):
            assert np.array_equal(res.state.u, d.u) and np.array_equal(res.state.ut, d.ut)
            assert res.tail_bound == 0.0


def test_scattering_odd_symmetry():
    g = we.grid_for_horizon(2.0, 16.0, 0.02)
    d = bump(g, 0.3)
    a = we.scattering_operator(Q, d, 4.0).state
    b = we.scattering_operator(Q, -d, 4.0).state
    assert np.array_equal(b.u, -a.u)


def test_scattering_deviation_is_quintic_in_size():
    g = we.grid_for_horizon(2.0, 16.0, 0.02)
    devs = []
    for amp in (0.2, 0.1, 0.05):
        d = bump(g, amp)
        devs.append(enorm(we.scattering_operator(Q, d, 4.0).state, d))
    slopes = np.diff(np.log(devs)) / np.diff(np.log([0.2, 0.1, 0.05]))
    np.testing.assert_allclose(slopes, 5.0, atol=0.05)


def test_scattering_is_future_minus_reversed_past():
    # time-symmetric data (u_t = 0): the past Duhamel part is the time reversal
    # R(u, u_t) = (u, -u_t) of the future part, so to leading order
    # S(d) - d = D - R D with D = W(d) - d
    g = we.grid_for_horizon(2.0, 16.0, 0.02)
    d = bump(g, 0.2)
    ds = we.scattering_operator(Q, d, 4.0).state - d
    D = we.wave_operator(Q, d, 4.0).state - d
    pred = RadialState(g, np.zeros_like(D.u), 2 * D.ut)
    size = math.sqrt(energy_norm_sq(ds))
    assert size > 0
    assert math.sqrt(energy_norm_sq(ds - pred)) < 1e-2 * size


def test_cauchy_tail_decreases():
    g = we.grid_for_horizon(1.0, 16.0, 0.02)
    tr = we.solve_nlw(bump(g, 0.4), Q, 8.0)
    tail = we.cauchy_tail(tr, [1.0, 2.0, 4.0, 8.0])
    assert np.all(np.diff(tail) < 0)
