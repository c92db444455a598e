import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from ptstab.bounds import ExampleBounds, SecondOrderBounds
from ptstab.plant import (ChainPlant, ExamplePlant, SecondOrderPlant, check_assumptions,
                          default_grid)
from ptstab.truth import theta1_star, theta_star, true_disturbance_constants

finite = dict(allow_nan=False, allow_infinity=False)


@given(x=st.lists(st.floats(-2, 2, **finite), min_size=3, max_size=3),
       z=st.lists(st.floats(-3, 3, **finite), min_size=2, max_size=2),
       u=st.floats(-50, 50, **finite), t=st.floats(0, 0.2, **finite))
@settings(max_examples=100, deadline=None)
def test_example_rhs_matches_oracle(x, z, u, t):
    dx, dz = ExamplePlant().rhs(np.array(x), np.array(z), u, t)
    ex, ez = O.example_rhs(x, z, u, t)
    np.testing.assert_allclose(dx, [float(v) for v in ex], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(dz, [float(v) for v in ez], rtol=1e-12, atol=1e-12)


def test_example_rhs_parameters():
    p = ExamplePlant(theta_a=0.0, theta_b=0.0, theta_c=0.0, theta_d=0.0)
    dx, _ = p.rhs(np.array([0.0, 1.0, 0.0]), np.zeros(2), 0.0, 0.0)
    np.testing.assert_allclose(dx, [1.0, 0.0, 0.0])
    dx, _ = ExamplePlant(theta_d=3.0).rhs(np.zeros(3), np.zeros(2), 0.0, 0.0)
    assert dx[2] == pytest.approx(3.0)


@given(x=st.lists(st.floats(-5, 5, **finite), min_size=3, max_size=3),
       z=st.lists(st.floats(-10, 10, **finite), min_size=2, max_size=2), t=st.floats(0, 10, **finite))
@settings(max_examples=200, deadline=None)
def test_input_gain_lower_bound(x, z, t):
    # h >= 1/2 is the unknown lower bound the controller never sees
    _, _, h_lo = true_disturbance_constants(ExamplePlant())
    assert ExamplePlant().input_gain(np.array(x), np.array(z), t) >= h_lo


@given(x=st.lists(st.floats(-4, 4, **finite), min_size=3, max_size=3),
       z=st.lists(st.floats(-10, 10, **finite), min_size=2, max_size=2),
       u=st.floats(-1e3, 1e3, **finite), t=st.floats(0, 10, **finite))
@settings(max_examples=200, deadline=None)
def test_example_disturbance_bounds_hold(x, z, u, t):
    # |phi_i| <= Gamma(x1) theta sum_j phi_(i,j) |x_j| (+ Gamma phi_n0 for i = n)
    p = ExamplePlant()
    b = p.bounds
    theta, phi_n0, _ = true_disturbance_constants(p)
    x = np.array(x)
    dx, _ = p.rhs(x, np.array(z), u, t)
    h = p.input_gain(x, np.array(z), t)
    phi2 = dx[1] - (1 + x[0] ** 4) * x[2]
    phi3 = dx[2] - h * u
    g = b.Gamma(x[0])
    slack = 1e-9 * (1 + abs(phi2) + abs(phi3))
    assert abs(phi2) <= g * theta * (b.phi_bound(2, 1, x, t) * abs(x[0]) + b.phi_bound(2, 2, x, t) * abs(x[1])) + slack
    assert abs(phi3) <= g * (theta * b.phi_bound(3, 2, x, t) * abs(x[1]) + phi_n0) + slack


@given(x=st.lists(st.floats(-10, 10, **finite), min_size=2, max_size=2),
       z=st.floats(-10, 10, **finite), u=st.floats(-1e3, 1e3, **finite), t=st.floats(0, 10, **finite))
@settings(max_examples=200, deadline=None)
def test_second_order_disturbance_bounds_hold(x, z, u, t):
    p = SecondOrderPlant(theta_b=1.0, theta_d=0.5, c_beta=0.1)
    theta, phi_n0, h_lo = true_disturbance_constants(p)
    x = np.array(x)
    dx, dz = p.rhs(x, np.array([z]), u, t)
    h = p.input_gain(x, np.array([z]), t)
    assert h >= h_lo
    assert dx[0] == x[1]
    phi2 = dx[1] - h * u
    assert abs(phi2) <= p.bounds.Gamma(x[0]) * (theta * abs(x[0]) + phi_n0) * (1 + 1e-12) + 1e-12
    assert dz[0] == pytest.approx(-z + x[0])


def test_chain_plant_is_pure_integrator():
    p = ChainPlant()
    dx, dz = p.rhs(np.array([2.0, -3.0]), np.array([7.0]), 5.0, 1.0)
    np.testing.assert_array_equal(dx, [-3.0, 5.0])
    np.testing.assert_array_equal(dz, [0.0])


def test_truth_constants():
    assert true_disturbance_constants(ExamplePlant()) == (40000.0, 20000.0, 0.5)
    assert theta_star(2.0) == 7.0
    assert theta1_star(20000.0, 0.5) == 40000.0
    assert theta1_star(0.1, 0.5) == 2.0
    with pytest.raises(TypeError):
        true_disturbance_constants(object())


def test_assumptions_example_pass():
    rep = check_assumptions(ExamplePlant(), default_grid(3))
    assert rep.passed
    assert rep.sampled_points == 21 ** 3
    assert rep["A4"].note == "vacuously satisfied"
    assert rep["A5.upper"].worst_margin == pytest.approx(1.5 - 1.25 / (1 + 0.5 ** 4), rel=1e-12)
    assert "sampled, not proven" in rep.to_text()


def test_assumptions_seeded_sigma_failure():
    rep = check_assumptions(ExamplePlant(sigma=2.0), default_grid(3))
    assert not rep.passed
    a1 = rep["A1"]
    assert not a1.passed
    # the smallest phi_(i,i+1) is 1 at x1 = 0
    assert a1.worst_margin == pytest.approx(-1.0)
    assert a1.worst_sample[0][0] == 0.0
    assert all(r.passed for r in rep.results if r.name != "A1")


def test_assumptions_accepts_bounds_and_checks_shape():
    rep = check_assumptions(SecondOrderBounds(), default_grid(2, points=5))
    assert rep.passed
    with pytest.raises(ValueError, match="shape"):
        check_assumptions(SecondOrderBounds(), default_grid(3, points=2))
    with pytest.raises(ValueError):
        check_assumptions(ExampleBounds(), [])


def test_a5_lower_violation_detected():
    class Loose(ExampleBounds):
        def phitilde12(self, x1):
            return 2.0

    rep = check_assumptions(Loose(), default_grid(3, points=5))
    assert not rep["A5.lower"].passed


def test_z_matrices_are_hurwitz():
    for p in (ExamplePlant(), SecondOrderPlant()):
        assert np.all(np.linalg.eigvals(p.z_matrix()).real < 0)


def test_bounds_values_vector():
    b = ExampleBounds()
    out = b.values(np.array([0.5, 0.0, 0.0]), 0.0)
    assert out[0] == pytest.approx(1.25)
    assert out[1] == pytest.approx(1.0625)
    assert out[2] == pytest.approx(float(O.gamma_example(0.5)), rel=1e-14)
    assert math.isinf(b.Gamma(1000.0))


def test_example_rhs_hand_substitutions():
    p = ExamplePlant()
    dx, dz = p.rhs(np.zeros(3), np.zeros(2), 0.0, 0.0)
    np.testing.assert_allclose(dx, [0.0, 0.0, p.theta_d], atol=1e-15)
    np.testing.assert_allclose(dz, [0.0, 0.0], atol=1e-15)
    dx, _ = p.rhs(np.array([1.0, 0.0, 0.0]), np.zeros(2), 0.0, 0.0)
    np.testing.assert_allclose(dx, [0.0, 0.0, 2.0 * p.theta_d], atol=1e-15)


def test_example_rhs_linear_in_u():
    p = ExamplePlant()
    x, z, t = np.array([0.7, -0.3, 1.1]), np.array([0.4, -2.0]), 0.13
    d0, _ = p.rhs(x, z, 0.0, t)
    d2, _ = p.rhs(x, z, 2.0, t)
    assert d2[2] - d0[2] == pytest.approx(2.0 * p.input_gain(x, z, t), rel=1e-14)


def test_input_gain_random_samples():
    rng = np.random.default_rng(7)
    p = ExamplePlant()
    xs = rng.uniform(-5, 5, size=(100_000, 3))
    zs = rng.uniform(-10, 10, size=(100_000, 2))
    ts = rng.uniform(0, 10, size=100_000)
    h = np.array([p.input_gain(x, z, t) for x, z, t in zip(xs, zs, ts)])
    assert np.all(np.isfinite(h)) and h.min() >= 0.5


def test_appended_dynamics_eigenvalues_exact():
    ev = np.linalg.eigvals(ExamplePlant().z_matrix())
    np.testing.assert_array_equal(np.sort(ev.real), [-100.0, -100.0])
    np.testing.assert_array_equal(ev.imag, [0.0, 0.0])


def test_a5_worst_ratio_against_dense_scan():
    # the ratio (1 + x1^2)/(1 + x1^4) peaks at x1^2 = sqrt(2) - 1 with value (1 + sqrt 2)/2
    s = np.linspace(-5, 5, 100_001)
    scan = ((1 + s ** 2) / (1 + s ** 4)).max()
    exact = (1 + math.sqrt(2)) / 2
    assert scan == pytest.approx(exact, abs=1e-8)
    rep = check_assumptions(ExamplePlant(), [(np.array([math.sqrt(math.sqrt(2) - 1), 0.0, 0.0]), 0.0)])
    assert rep["A5.upper"].worst_margin == pytest.approx(1.5 - exact, abs=1e-14)
    assert rep["A4"].note == "vacuously satisfied"


def test_truth_theta_without_theta_b():
    p = ExamplePlant(theta_a=3.0, theta_b=0.0, theta_c=5.0)
    assert true_disturbance_constants(p)[0] == pytest.approx(5.0 / p.bounds.c_beta)
