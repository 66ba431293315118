import math

import numpy as np
import pytest

from issadapt.plant import (ManipulatorParams, NumericalFailure, PlantState, coriolis_matrix, dynamics,
                            gravity_vector, kinetic_energy, linearize_manipulator, mass_matrix,
                            potential_energy, rk4_step)

P = ManipulatorParams()
E_CASE = np.array([[0.3, 0.6], [0.0, 0.0]])


def test_default_parameters():
    assert (P.m1, P.m2, P.l1, P.l2, P.lc1, P.lc2, P.g) == (10.5, 5.5, 1.1, 1.1, 0.5, 0.5, 9.8)
    assert P.I1 == pytest.approx(11 / 12) and P.I2 == pytest.approx(5.5 / 12)
    with pytest.raises(ValueError):
        ManipulatorParams(m1=-1.0)
    with pytest.raises(ValueError):
        ManipulatorParams(gravity_variant="other")


def test_mass_matrix_at_zero():
    H = mass_matrix([0.3, 0.0])
    assert H[1, 1] == pytest.approx(5.5 * 0.25 + 5.5 / 12)
    assert H[0, 1] == pytest.approx(3.025 + 5.5 * 0.25 + 5.5 / 12)
    assert H[0, 0] == pytest.approx(2.625 + 11 / 12 + 14.08 + 5.5 / 12)
    assert H[0, 0] == pytest.approx(18.08)


def test_mass_matrix_symmetric_positive_definite():
    rng = np.random.default_rng(0)
    for q in rng.uniform(-math.pi, math.pi, size=(1000, 2)):
        H = mass_matrix(q)
        assert np.array_equal(H, H.T)
        assert np.linalg.eigvalsh(H).min() > 0


def test_coriolis():
    np.testing.assert_array_equal(coriolis_matrix([0.4, 1.0], [0, 0]), np.zeros((2, 2)))
    np.testing.assert_array_equal(coriolis_matrix([0.4, 0.0], [1.0, -2.0]), np.zeros((2, 2)))
    np.testing.assert_allclose(coriolis_matrix([0, math.pi / 2], [1, 0]),
                               [[0, -3.025], [3.025, 0]], atol=1e-12)


def test_gravity():
    np.testing.assert_allclose(gravity_vector([0, 0]), [51.45 + 5.5 * 9.8 * 2.2, 5.5 * 0.5 * 9.8])
    np.testing.assert_allclose(gravity_vector([0, 0]), [170.03, 26.95])
    np.testing.assert_allclose(gravity_vector([math.pi / 2, 0]), [0, 0], atol=1e-12)
    assert gravity_vector([0, math.pi])[1] == pytest.approx(-26.95)
    central = ManipulatorParams(gravity_variant="centroid")
    assert gravity_vector([0, 0], central)[0] == pytest.approx(51.45 + 5.5 * 9.8 * 1.6)


def test_dynamics_examples():
    rng = np.random.default_rng(1)
    for _ in range(20):
        q, dq = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
        tau = coriolis_matrix(q, dq) @ dq + gravity_vector(q)
        vel, acc, one = dynamics(PlantState(q, dq), tau, np.zeros(4), P)
        np.testing.assert_allclose(acc, 0.0, atol=1e-10)
        np.testing.assert_array_equal(vel, dq)
        assert one == 1.0
    s0 = PlantState.at_rest()
    _, acc, _ = dynamics(s0, [0, 0], np.zeros(4), P)
    np.testing.assert_allclose(acc, -np.linalg.solve(mass_matrix([0, 0]), gravity_vector([0, 0])))
    _, acc, _ = dynamics(s0, gravity_vector([0, 0]), E_CASE, P)
    np.testing.assert_allclose(acc, [-(0.3 * 170.03 + 0.6 * 26.95), 0.0], atol=1e-10)
    assert acc[0] == pytest.approx(-67.179)


def test_linearized_plant():
    lin = linearize_manipulator(P)
    rng = np.random.default_rng(2)
    for xi in rng.uniform(-3, 3, size=(100, 4)):
        q, dq = xi[[0, 2]], xi[[1, 3]]
        np.testing.assert_allclose(lin.A(xi) @ mass_matrix(q), np.eye(2), atol=1e-10)
        b = lin.b(xi)
        H = mass_matrix(q)
        np.testing.assert_allclose(b, -np.linalg.solve(H, coriolis_matrix(q, dq) @ dq + gravity_vector(q)))
    xi = np.array([0.3, 0.0, -0.5, 0.0])
    np.testing.assert_allclose(lin.b(xi), -np.linalg.solve(mass_matrix(xi[[0, 2]]), gravity_vector(xi[[0, 2]])))
    np.testing.assert_allclose(lin.Q(np.zeros(4), 0.0), [-170.03, -26.95])
    assert lin.relative_degrees == (2, 2) and lin.n == 4 and lin.m == 2


def test_uncertainty_sign_convention():
    """``E Q`` in the linearized model equals the ``-E G`` term of the plant."""
    lin = linearize_manipulator(P)
    xi = np.array([0.4, 0.3, -0.2, 0.1])
    q, dq = xi[[0, 2]], xi[[1, 3]]
    u = np.array([3.0, -1.0])
    _, acc, _ = dynamics(PlantState(q, dq), u, E_CASE, P)
    np.testing.assert_allclose(acc, lin.b(xi) + lin.A(xi) @ u + E_CASE @ lin.Q(xi, 0.0), atol=1e-12)


def test_rk4_equilibrium_and_time():
    s = PlantState.at_rest([0.3, -0.4])
    tau = gravity_vector(s.q)
    s1 = rk4_step(s, tau, np.zeros(4), P, 1e-3)
    np.testing.assert_allclose(s1.q, s.q, atol=1e-15)
    np.testing.assert_allclose(s1.dq, 0.0, atol=1e-15)
    assert s1.t == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        rk4_step(s, tau, np.zeros(4), P, 0.0)


def test_rk4_free_fall_taylor():
    s = PlantState.at_rest()
    h = 1e-3
    _, acc, _ = dynamics(s, [0, 0], np.zeros(4), P)
    s1 = rk4_step(s, [0, 0], np.zeros(4), P, h)
    np.testing.assert_allclose(s1.q, 0.5 * acc * h**2, atol=1e-9)


def test_rk4_callable_torque_matches_held_torque():
    s = PlantState(np.array([0.1, 0.2]), np.array([0.3, -0.1]))
    held = rk4_step(s, [2.0, -1.0], E_CASE, P, 1e-3)
    law = rk4_step(s, lambda q1, q2, v1, v2, t: (2.0, -1.0), E_CASE, P, 1e-3)
    np.testing.assert_array_equal(held.q, law.q)
    np.testing.assert_array_equal(held.dq, law.dq)


def test_rk4_blowup():
    s = PlantState.at_rest()
    with pytest.raises(NumericalFailure):
        rk4_step(s, [1e12, 0.0], np.zeros(4), P, 1e-3)


def test_energy_conserved_without_torque():
    """Centroid variant only: the printed gravity vector has no potential."""
    p = ManipulatorParams(gravity_variant="centroid")
    s = PlantState.at_rest([0.3, -0.2])
    energy = lambda st: kinetic_energy(st.q, st.dq, p) + potential_energy(st.q, p)
    e0 = energy(s)
    scale = abs(e0)
    for _ in range(2000):
        s = rk4_step(s, [0.0, 0.0], np.zeros(4), p, 1e-3)
    assert abs(energy(s) - e0) / scale < 1e-5
    with pytest.raises(ValueError):
        potential_energy([0, 0], P)


def test_potential_gradient_is_gravity():
    p = ManipulatorParams(gravity_variant="centroid")
    q = np.array([0.4, -1.1])
    h = 1e-6
    grad = [(potential_energy(q + h * e, p) - potential_energy(q - h * e, p)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(grad, gravity_vector(q, p), rtol=1e-7)
