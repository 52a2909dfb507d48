import numpy as np
import pytest

from pathrelax.core import Grid1D, GridSolution
from pathrelax.coupling import (
    CoupledDomain,
    CustomCoupling,
    Kirchhoff,
    ModifiedKirchhoff,
    blood_inflow,
    coupled_relaxed_step,
    coupling_error,
    kirchhoff_residual,
    p1,
    p2,
    scan_roots,
    solve_coupled,
    solve_riemann,
    truncated_T1,
    truncated_T2,
)
from pathrelax.errors import InvalidParam, NoConvergence, NonAdmissibleState
from pathrelax.experiments import build_blood_domain
from pathrelax.models import BloodVessel, TwoLayerSWE
from pathrelax.schemes import BoundarySpec, Neumann, RelaxationParams, relaxed_step, source_step

BETA = 0.005 * np.sqrt(np.pi)
UA = np.array([5.0, 0.0])


def make_domain(v1, v2, n=20, mu=0.16, cfl=0.9, **kw):
    g1 = Grid1D.from_bounds(-1.0, 0.0, n)
    g2 = Grid1D.from_bounds(0.0, 1.0, n)
    p = RelaxationParams.from_mu(mu, 2, cfl=cfl)
    return CoupledDomain(v1, v2, g1, g2, p, p, UA, UA, **kw)


def bump(x):
    return np.column_stack([5.0 + 0.5 * np.exp(-20 * (x + 0.3) ** 2), 0.05 * np.sin(3 * x)])


def test_domain_validation():
    v = BloodVessel()
    g1 = Grid1D.from_bounds(-1.0, 0.0, 4)
    g2 = Grid1D.from_bounds(0.1, 1.0, 4)
    p = RelaxationParams.from_mu(0.16, 2)
    with pytest.raises(InvalidParam):
        CoupledDomain(v, v, g1, g2, p, p, UA, UA)
    with pytest.raises(NonAdmissibleState):
        CoupledDomain(v, v, g1, Grid1D.from_bounds(0, 1, 4), p, p, [-1.0, 0.0], UA)
    with pytest.raises(InvalidParam):
        CoupledDomain(v, TwoLayerSWE(), g1, Grid1D.from_bounds(0, 1, 4), p, p, UA, [1, 0, 1, 0])


def test_residual_vanishes_at_truncation_states():
    dom = make_domain(BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5))
    r = kirchhoff_residual(dom, np.zeros(2), np.zeros(2), UA, UA)
    assert np.array_equal(r, np.zeros(4))


def test_trivial_root_gives_zero_sigma():
    dom = make_domain(BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5))
    data = solve_riemann(dom, UA, UA)
    assert np.array_equal(data.sigma_minus, [0, 0]) and np.array_equal(data.sigma_plus, [0, 0])
    assert data.iterations == 0


def test_constant_truncation_states_stay_unchanged():
    dom, left, right = build_blood_domain(10, cfl=0.9)
    dom.left_boundary = Neumann()
    l, r, data = coupled_relaxed_step(dom, left, right)
    np.testing.assert_array_equal(l.u, left.u)
    np.testing.assert_array_equal(r.u, right.u)


def test_newton_root_and_lax_membership():
    v1, v2 = BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5)
    dom = make_domain(v1, v2)
    u0m, u0p = np.array([5.4, 0.03]), np.array([4.8, -0.02])
    data = solve_riemann(dom, u0m, u0p)
    r = kirchhoff_residual(dom, data.sigma_minus, data.sigma_plus, u0m, u0p)
    assert np.max(np.abs(r)) <= 1e-12
    s = np.sqrt(0.16)
    np.testing.assert_allclose(data.u_r, u0m - data.sigma_minus / s, rtol=0, atol=1e-15)
    np.testing.assert_allclose(data.u_l, u0p + data.sigma_plus / s, rtol=0, atol=1e-15)
    np.testing.assert_allclose(data.v_r, p1(dom, u0m) + data.sigma_minus, atol=1e-15)
    np.testing.assert_allclose(data.v_l, -p2(dom, u0p) + data.sigma_plus, atol=1e-15)
    # V_R - V_L is the first residual block
    assert np.max(np.abs(data.v_r - data.v_l)) <= 1e-12


def test_newton_is_unique_in_scan():
    dom = make_domain(BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5))
    u0m, u0p = np.array([5.2, 0.01]), np.array([5.0, 0.0])
    roots, norms = scan_roots(dom, u0m, u0p, radius=0.2, n=11)
    data = solve_riemann(dom, u0m, u0p)
    assert len(roots) == 1
    np.testing.assert_allclose(roots[0], np.concatenate([data.sigma_minus, data.sigma_plus]), atol=1e-10)


def test_newton_failure_modes():
    v1, v2 = BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5)
    dom = make_domain(v1, v2, newton_max_iter=0)
    with pytest.raises(NoConvergence) as info:
        solve_riemann(dom, np.array([5.4, 0.03]), UA)
    assert info.value.iterations == 0
    dom = make_domain(v1, v2)
    with pytest.raises(NonAdmissibleState):
        kirchhoff_residual(dom, np.array([10.0, 0.0]), np.zeros(2), UA, UA)


def test_collapsed_right_trace_has_no_admissible_root():
    # traces reached by the alpha=1 blood run at N=4000 near t=9.45: the soft
    # right vessel is nearly empty and the interface root sits at a -> 0
    dom, left, right = build_blood_domain(4000, alpha=1.0, cfl=0.9)
    u1, u2 = left.u.copy(), right.u.copy()
    u1[-1] = [5.10784585754673, -0.0034684044307073075]
    u2[0] = [0.17444855207508586, -0.08998531930273458]
    left = GridSolution(left.grid, u1, None, 9.5)
    right = GridSolution(right.grid, u2, None, 9.5)
    with pytest.raises(NoConvergence) as info:
        coupled_relaxed_step(dom, left, right)
    assert info.value.time == 9.5
    assert "t=9.5" in str(info.value) and "U0+=" in str(info.value)


def test_custom_coupling_residual():
    v = BloodVessel(alpha=1.0)

    def fn(domain, sm, sp, u0m, u0p):
        return np.concatenate([sm - 0.01, sp + 0.02])

    dom = make_domain(v, v, kind=CustomCoupling(fn))
    data = solve_riemann(dom, UA, UA)
    np.testing.assert_allclose(data.sigma_minus, [0.01, 0.01], atol=1e-12)
    np.testing.assert_allclose(data.sigma_plus, [-0.02, -0.02], atol=1e-12)


def test_modified_kirchhoff_offset():
    v1, v2 = BloodVessel(alpha=1.0), BloodVessel(alpha=1.0, beta=BETA / 5)
    ua2 = np.array([5.5, 0.0])
    g1, g2 = Grid1D.from_bounds(-1, 0, 10), Grid1D.from_bounds(0, 1, 10)
    p = RelaxationParams.from_mu(0.16, 2)
    dom = CoupledDomain(v1, v2, g1, g2, p, p, UA, ua2)
    dom.kind = ModifiedKirchhoff.from_domain(dom)
    np.testing.assert_allclose(dom.kind.offset(dom), v1.flux(UA) - v2.flux(ua2))
    r = kirchhoff_residual(dom, np.zeros(2), np.zeros(2), UA, ua2)
    np.testing.assert_allclose(r, np.tile(v1.flux(UA) - v2.flux(ua2), 2), atol=1e-15)
    data = solve_riemann(dom, np.array([5.2, 0.01]), np.array([5.4, 0.0]))
    # V_L - V_R equals F1(U_a^1) - F2(U_a^2)
    np.testing.assert_allclose(data.v_l - data.v_r, dom.kind.offset(dom), atol=1e-12)


def test_coupled_equals_uncoupled_for_identical_conservative_models():
    v = BloodVessel(alpha=1.0)
    n = 40
    dom = make_domain(v, v, n=n)
    x1, x2 = dom.left_grid.centers, dom.right_grid.centers
    left, right = GridSolution(dom.left_grid, bump(x1)), GridSolution(dom.right_grid, bump(x2))
    full_grid = Grid1D.from_bounds(-1.0, 1.0, 2 * n)
    full = GridSolution(full_grid, np.vstack([left.u, right.u]))
    params = RelaxationParams.from_mu(0.16, 2, cfl=0.9)
    dt = dom.dt()
    worst = 0.0
    for _ in range(100):
        left, right, _ = coupled_relaxed_step(dom, left, right, dt)
        full = source_step(v, dt, relaxed_step(v, params, full, dt, BoundarySpec()))
        worst = max(worst, np.max(np.abs(np.vstack([left.u, right.u]) - full.u)))
    assert worst <= 1e-12


def test_interface_conservation_and_mass_balance():
    v1, v2 = BloodVessel(alpha=1.0, k_r=0.0), BloodVessel(alpha=1.0, k_r=0.0, beta=BETA / 5)
    dom, left, right = build_blood_domain(50, alpha=1.0, cfl=0.9)
    dom = CoupledDomain(v1, v2, dom.left_grid, dom.right_grid, dom.left_params, dom.right_params, UA, UA,
                        left_boundary=dom.left_boundary, right_boundary=Neumann())
    dt = dom.dt()
    s = np.sqrt(0.16)
    for _ in range(300):
        t = left.time
        g = dom.left_boundary.ghost_u("left", left.u[0], t)
        h_in = 0.5 * (v1.flux(g) + v1.flux(left.u[0])) - 0.5 * s * (left.u[0] - g)
        h_out = v2.flux(right.u[-1])
        mass = left.u[:, 0].sum() * dom.left_grid.dx + right.u[:, 0].sum() * dom.right_grid.dx
        left, right, data = coupled_relaxed_step(dom, left, right, dt)
        assert np.max(np.abs(data.v_r - data.v_l)) <= 1e-11
        new_mass = left.u[:, 0].sum() * dom.left_grid.dx + right.u[:, 0].sum() * dom.right_grid.dx
        assert abs(new_mass - mass - dt * (h_in[0] - h_out[0])) <= 1e-13


def test_coupling_error_zero_at_truncation_states():
    dom = make_domain(BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5))
    assert np.array_equal(coupling_error(dom, UA, UA), [0.0, 0.0])


def test_coupling_error_first_component_is_flow_jump():
    dom = make_domain(BloodVessel(alpha=4 / 3), BloodVessel(alpha=4 / 3, beta=BETA / 5))
    um, up = np.array([5.3, 0.02]), np.array([5.6, 0.01])
    assert coupling_error(dom, um, up)[0] == pytest.approx(abs(5.3 * 0.02 - 5.6 * 0.01), abs=1e-15)


def test_truncated_operators_match_single_integrals_for_conservative_models():
    v1, v2 = BloodVessel(alpha=1.0), BloodVessel(alpha=1.0, beta=BETA / 5)
    dom = make_domain(v1, v2, n=30)
    ul, ur = bump(dom.left_grid.centers), bump(dom.right_grid.centers)
    T1 = truncated_T1(dom, ul)
    T2 = truncated_T2(dom, ur)
    np.testing.assert_allclose(T1[-1], p1(dom, ul[-1]), atol=1e-13)
    np.testing.assert_allclose(T2[0], -p2(dom, ur[0]), atol=1e-13)
    np.testing.assert_allclose(T1, v1.flux(ul) - v1.flux(UA), atol=1e-13)


def test_blood_inflow_examples():
    v = BloodVessel(beta=BETA)
    np.testing.assert_allclose(blood_inflow(0.0, 0.0, UA, v), UA, atol=1e-15)
    a_b, u_b = blood_inflow(lambda t: 2e-3, 0.0, UA, v)
    assert a_b == pytest.approx(6.0602, abs=1e-4)
    c = lambda a: np.sqrt(BETA / 2) * a ** 0.25
    assert u_b == pytest.approx(4 * (c(a_b) - c(5.0)), rel=1e-14)
    # 30-digit evaluation of 4 sqrt(beta/2) (a_b^(1/4) - 5^(1/4))
    assert u_b == pytest.approx(0.0196094358907826586, rel=1e-13)
    assert a_b == pytest.approx(6.06018259059747052674, rel=1e-14)
    with pytest.raises(NonAdmissibleState):
        blood_inflow(-1.0, 0.0, UA, v)


def test_debug_mode_checks_interface_fluxes():
    dom, left, right = build_blood_domain(20, cfl=0.9, debug=True)
    left, right = solve_coupled(dom, left, right, 1.0)
    assert left.time == right.time == 1.0
    assert np.all(np.isfinite(left.u)) and np.all(np.isfinite(right.u))


def test_solve_coupled_callback_sees_every_step():
    dom, left, right = build_blood_domain(10, cfl=0.9)
    seen = []
    solve_coupled(dom, left, right, 0.5, callback=lambda n, l, r, d: seen.append(n))
    assert seen == list(range(len(seen))) and len(seen) == int(np.ceil(0.5 / dom.dt() - 1e-9))
