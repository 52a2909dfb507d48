import numpy as np
import pytest

from pathrelax.core import SEGMENT, gauss_lobatto_5, path_integral
from pathrelax.errors import NonAdmissibleState
from pathrelax.models import BloodVessel, TwoLayerSWE, m_term, subchar_check

BETA1 = 0.5 * 0.05 * np.sqrt(np.pi) / 5.0


def fd_jacobian(f, U, h=1e-6):
    U = np.asarray(U, dtype=float)
    cols = []
    for k in range(len(U)):
        e = np.zeros_like(U)
        e[k] = h * max(1.0, abs(U[k]))
        cols.append((f(U + e) - f(U - e)) / (2 * e[k]))
    return np.column_stack(cols)


def test_swe_matrix_example():
    A = TwoLayerSWE().matrix([0.2, 0.0, 1.8, 0.0])
    expected = [[0, 1, 0, 0], [1.962, 0, 1.962, 0], [0, 0, 0, 1], [15.8922, 0, 17.658, 0]]
    np.testing.assert_allclose(A, expected, rtol=1e-13, atol=1e-15)


def test_swe_matrix_rest_and_conservative_rows():
    model = TwoLayerSWE()
    rng = np.random.default_rng(0)
    U = rng.uniform([0.1, -1, 0.1, -1], [2, 1, 2, 1], (50, 4))
    A = model.matrix(U)
    assert np.all(A[:, 0] == [0, 1, 0, 0])
    assert np.all(A[:, 2] == [0, 0, 0, 1])
    A0 = model.matrix([0.4, 0.0, 1.1, 0.0])
    assert A0[1, 1] == 0 and A0[3, 3] == 0


def test_swe_matrix_entries_as_printed():
    A = TwoLayerSWE().matrix([0.5, 0.3, 1.5, -0.2])
    assert A[1, 1] == pytest.approx(2 * 0.3**2 / 0.5**2)
    assert A[3, 3] == pytest.approx(2 * 0.2**2 / 1.5**2)
    A = TwoLayerSWE(flux_jacobian_diagonal=True).matrix([0.5, 0.3, 1.5, -0.2])
    assert A[1, 1] == pytest.approx(2 * 0.3 / 0.5)
    assert A[3, 3] == pytest.approx(2 * -0.2 / 1.5)


def test_swe_non_admissible():
    with pytest.raises(NonAdmissibleState):
        TwoLayerSWE().matrix([0.0, 0.0, 1.0, 0.0])
    with pytest.raises(NonAdmissibleState):
        TwoLayerSWE().max_speed([1.0, 0.0, -1.0, 0.0])


@pytest.mark.parametrize("U", [[0.2, 0, 1.8, 0], [1, 0, 1, 0]])
def test_swe_max_speed(U):
    assert TwoLayerSWE().max_speed(U) == pytest.approx(np.sqrt(19.62), rel=1e-14)
    assert TwoLayerSWE().max_speed(U) == pytest.approx(4.4294, abs=1e-4)


def test_swe_max_speed_squared_below_mu():
    rng = np.random.default_rng(1)
    h1 = rng.uniform(0.1, 1.9, 100)
    q1 = rng.uniform(-1, 1, 100)
    U = np.column_stack([h1, q1, 2 - h1, -q1])
    assert np.all(TwoLayerSWE().max_speed(U) ** 2 < 25)
    np.testing.assert_allclose(TwoLayerSWE().max_speed(U) ** 2, 19.62, rtol=1e-13)


def test_swe_max_speed_bounds_spectral_radius_near_rest():
    model = TwoLayerSWE()
    rng = np.random.default_rng(2)
    for _ in range(200):
        h = rng.uniform(0.2, 2.0, 2)
        q = rng.uniform(-0.2, 0.2, 2) * h
        U = np.array([h[0], q[0], h[1], q[1]])
        rho = np.max(np.abs(np.linalg.eigvals(model.matrix(U))))
        assert model.max_speed(U) >= rho - 1e-8


def test_blood_matrix_example():
    A = BloodVessel(alpha=1.0, beta=0.005 * np.sqrt(np.pi)).matrix([5.0, 0.0])
    assert A[0, 0] == 0 and A[0, 1] == 5 and A[1, 1] == 0
    assert A[1, 0] == pytest.approx(0.005 * np.sqrt(np.pi) / (2 * np.sqrt(5)), rel=1e-14)
    assert A[1, 0] == pytest.approx(1.9816e-3, rel=1e-4)
    assert BloodVessel(alpha=4 / 3).matrix([3.0, 0.0])[1, 1] == 0


def test_blood_beta_from_wall():
    v = BloodVessel.from_wall(0.5, 0.05, 5.0)
    assert v.beta == pytest.approx(BETA1, rel=1e-15)
    assert v.beta == pytest.approx(0.005 * np.sqrt(np.pi), rel=1e-15)


def test_blood_matrix_is_flux_jacobian_for_alpha_one():
    model = BloodVessel(alpha=1.0)
    rng = np.random.default_rng(3)
    for _ in range(100):
        U = np.array([rng.uniform(1, 10), rng.uniform(-1, 1)])
        J = fd_jacobian(model.flux, U)
        assert np.max(np.abs(model.matrix(U) - J)) <= 1e-5


def test_blood_max_speed_is_spectral_radius():
    rng = np.random.default_rng(4)
    for alpha in (1.0, 4 / 3):
        model = BloodVessel(alpha=alpha)
        for _ in range(100):
            U = np.array([rng.uniform(1, 10), rng.uniform(-1, 1)])
            rho = np.max(np.abs(np.linalg.eigvals(model.matrix(U))))
            assert model.max_speed(U) >= rho - 1e-8
            assert model.max_speed(U) == pytest.approx(rho, rel=1e-10)


def test_closed_form_examples():
    model = BloodVessel(alpha=1.0)
    assert np.array_equal(model.closed_form_path_integral([5.0, 0.2], [5.0, 0.2]), [0.0, 0.0])
    np.testing.assert_allclose(model.closed_form_path_integral([5.0, 0.0], [5.0, 0.1]), [0.5, 0.005], rtol=1e-14)


def test_closed_form_equal_velocities_regular():
    model = BloodVessel(alpha=4 / 3)
    out = model.closed_form_path_integral([4.0, 0.3], [6.0, 0.3])
    assert np.all(np.isfinite(out))
    quad = path_integral(model.matrix, SEGMENT, [4.0, 0.3], [6.0, 0.3], gauss_lobatto_5())
    np.testing.assert_allclose(out, quad, rtol=1e-6)


@pytest.mark.parametrize("alpha", [1.0, 4 / 3])
def test_closed_form_matches_quadrature(alpha):
    model = BloodVessel(alpha=alpha)
    rng = np.random.default_rng(5)
    U1 = np.column_stack([rng.uniform(3, 8, 1000), rng.uniform(-0.5, 0.5, 1000)])
    U2 = np.column_stack([rng.uniform(3, 8, 1000), rng.uniform(-0.5, 0.5, 1000)])
    exact = model.closed_form_path_integral(U1, U2)
    quad = path_integral(model.matrix, SEGMENT, U1, U2, gauss_lobatto_5())
    scale = np.abs(exact).max(axis=1, keepdims=True)
    assert np.all(np.abs(exact - quad) <= 1e-6 * scale)
    np.testing.assert_allclose(exact[:, 0], U2[:, 0] * U2[:, 1] - U1[:, 0] * U1[:, 1], rtol=0, atol=1e-14)


def test_closed_form_rejects_non_admissible():
    with pytest.raises(NonAdmissibleState):
        BloodVessel().closed_form_path_integral([0.0, 0.0], [1.0, 0.0])


def test_pressure_law():
    v = BloodVessel(beta=0.005 * np.sqrt(np.pi))
    assert v.pressure(5.0) == 0.0
    assert v.area_from_pressure(2e-3) == pytest.approx(6.0602, abs=1e-4)
    rng = np.random.default_rng(6)
    a = rng.uniform(1, 20, 1000)
    np.testing.assert_allclose(v.area_from_pressure(v.pressure(a)), a, rtol=1e-12)
    with pytest.raises(NonAdmissibleState):
        v.pressure(0.0)
    with pytest.raises(NonAdmissibleState):
        v.area_from_pressure(-v.beta * np.sqrt(5.0) - 1e-6)


def test_m_term_vanishes_for_conservative_blood():
    model = BloodVessel(alpha=1.0)
    rng = np.random.default_rng(7)
    for _ in range(100):
        U = np.array([rng.uniform(1, 10), rng.uniform(-1, 1)])
        d = rng.uniform(-1, 1, 2)
        assert np.max(np.abs(m_term(model, U, d))) <= 1e-5


def test_m_term_zero_gradient():
    assert np.array_equal(m_term(TwoLayerSWE(), [1, 0.1, 1, -0.1], np.zeros(4)), np.zeros(4))


def test_m_term_swe_matches_symbolic_oracle():
    # values from sympy differentiation of the printed matrix (g=981/100, r=9/10)
    model = TwoLayerSWE()
    np.testing.assert_allclose(m_term(model, [1, 0.1, 1, -0.1], [1, 0, 0, 0]), [0, 1.568, 0, 0], atol=1e-6)
    np.testing.assert_allclose(
        m_term(model, [0.5, 0.3, 1.5, -0.2], [1, 0.5, -1, 0.25]),
        [0, 7.4775, 0, -6.933030987654321],
        rtol=1e-6,
        atol=1e-6,
    )
    # flux-Jacobian variant: sympy gives (0, 0, 0, 0) and (0, 7.3575, 0, -6.62175)
    jac = TwoLayerSWE(flux_jacobian_diagonal=True)
    np.testing.assert_allclose(m_term(jac, [1, 0.1, 1, -0.1], [1, 0, 0, 0]), 0, atol=1e-6)
    np.testing.assert_allclose(
        m_term(jac, [0.5, 0.3, 1.5, -0.2], [1, 0.5, -1, 0.25]), [0, 7.3575, 0, -6.62175], atol=1e-6
    )


def test_m_term_nonzero_for_nonconservative_blood():
    assert np.max(np.abs(m_term(BloodVessel(alpha=4 / 3), [5.0, 0.3], [1.0, 0.5]))) > 1e-3


def test_subchar_check_swe_dam_break():
    states = np.array([[0.2, 0, 1.8, 0], [1.8, 0, 0.2, 0]])
    report = subchar_check(TwoLayerSWE(), 25.0, states)
    assert report.passed
    assert report.worst_speed_sq == pytest.approx(19.62, rel=1e-12)


def test_subchar_check_blood_rest():
    model = BloodVessel(alpha=1.0)
    report = subchar_check(model, 0.16, [[5.0, 0.0]])
    assert report.passed
    # eigenvalues of [[0, a], [beta/(2 sqrt a), 0]] are +-sqrt(beta sqrt(a)/2)
    speed = np.sqrt(BETA1 * np.sqrt(5.0) / 2)
    assert speed == pytest.approx(0.0995, abs=1e-4)
    assert report.worst_speed_sq == pytest.approx(speed**2, rel=1e-12)


def test_subchar_check_fails_for_zero_mu():
    assert not subchar_check(BloodVessel(), 0.0, [[5.0, 0.0]]).passed
    assert not subchar_check(TwoLayerSWE(), 0.0, [[1, 0, 1, 0]]).passed
