import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from ptstab.bounds import ExampleBounds, SecondOrderBounds
from ptstab.lyapunov import (LyapunovCertificate, box_grid, build_Ac, example_certificate,
                             kappa, kappa_terms, load_certificate, save_certificate,
                             verify_certificate)


def _first_ineq_max_eig(cert, phi23=1.0):
    A = build_Ac(cert, [phi23], cert.gain_coeffs * phi23)
    return np.linalg.eigvalsh(cert.P @ A + A.T @ cert.P).max() / phi23


def test_example_second_inequality_spectrum():
    c = example_certificate(1.0)
    Dt = c.D_tilde
    eig = np.linalg.eigvalsh(c.P @ Dt + Dt @ c.P)
    np.testing.assert_allclose(eig, [1.0, 5.0], atol=1e-14)


def test_example_first_inequality_exact_value():
    # closed form: -8 + 2 sqrt(10), independently in high precision
    m = mp.matrix([[-10, -6], [-6, -6]])
    exact = max(mp.eigsy(m)[0])
    assert abs(exact - (-8 + 2 * mp.sqrt(10))) < mp.mpf(10) ** -30
    assert _first_ineq_max_eig(example_certificate(1.0)) == pytest.approx(float(exact), abs=1e-12)


def test_example_first_inequality_is_phi23_homogeneous():
    c = example_certificate(1.0)
    for phi23 in (1.0, 2.5, 1 + 5.0 ** 4):
        assert _first_ineq_max_eig(c, phi23) == pytest.approx(-8 + 2 * math.sqrt(10), rel=1e-12)


def test_example_constants():
    c = example_certificate(0.05)
    assert c.nu_c == pytest.approx(0.08375)
    assert c.nu_lower == pytest.approx(0.05)
    assert c.nu_upper == pytest.approx(0.25)
    assert c.lambda_max == pytest.approx(float(O.lambda_max_example()), rel=1e-14)
    assert c.lambda_max == pytest.approx(0.170711, abs=1e-6)


def test_kappa_value():
    c = example_certificate(0.05)
    k = kappa(c, 0.25, 1.0)
    assert k == pytest.approx(float(O.kappa_example()), rel=1e-14)
    assert abs(k - 0.245297) <= 1e-5
    assert kappa_terms(c, 0.25, 1.0)[0] == pytest.approx(0.375)
    with pytest.raises(ValueError):
        kappa(c, 0.0, 1.0)


def test_verify_example_grid_passes():
    rep = verify_certificate(example_certificate(0.05), ExampleBounds(), box_grid(-5, 5, 11, 3))
    assert rep.passed
    assert rep.sampled_points == 11 ** 3
    assert rep.worst_margin_first_ineq <= rep.tol
    assert "not a proof" in rep.to_text()
    assert rep.to_record()["pass"] == "true"


def test_verify_detects_bad_nu_c():
    c = example_certificate(1.0)
    bad = LyapunovCertificate(3, c.P, c.gain_coeffs, 1.7, 1.0, 5.0)
    rep = verify_certificate(bad, ExampleBounds(), box_grid(-1, 1, 3, 3))
    assert not rep.passed
    assert rep.worst_margin_first_ineq > 0


def test_verify_detects_bad_second_inequality():
    c = example_certificate(1.0)
    bad = LyapunovCertificate(3, c.P, c.gain_coeffs, 1.675, 1.5, 5.0)
    rep = verify_certificate(bad, ExampleBounds(), box_grid(-1, 1, 3, 3))
    assert not rep.passed


def test_verify_rejects_order_mismatch():
    with pytest.raises(ValueError, match="order"):
        verify_certificate(example_certificate(1.0), SecondOrderBounds(), box_grid(-1, 1, 3, 2))


def test_verify_rejects_non_finite_gains():
    c = example_certificate(1.0)
    bad = LyapunovCertificate(3, c.P, c.gain_coeffs, 1.675, 1.0, 5.0,
                              gains_fn=lambda x, t, b: np.array([np.nan, 1.0]))
    with pytest.raises(ValueError, match="non-finite"):
        verify_certificate(bad, ExampleBounds(), box_grid(-1, 1, 2, 3))


def test_invalid_certificates():
    with pytest.raises(ValueError, match="symmetric"):
        LyapunovCertificate(3, [[1, 0.5], [0, 1]], [1, 1], 1, 1, 2)
    with pytest.raises(ValueError, match="positive definite"):
        LyapunovCertificate(3, [[1, 2], [2, 1]], [1, 1], 1, 1, 2)
    with pytest.raises(ValueError, match="gain"):
        LyapunovCertificate(3, np.eye(2), [1], 1, 1, 2)
    with pytest.raises(ValueError, match="nu"):
        LyapunovCertificate(3, np.eye(2), [1, 1], 1, 2, 1)
    with pytest.raises(ValueError):
        example_certificate(0.0)


def test_build_Ac_shape_checks():
    c = example_certificate(1.0)
    A = build_Ac(c, [2.0], [3.0, 4.0])
    np.testing.assert_array_equal(A, [[0, 2], [-3, -4]])
    with pytest.raises(ValueError, match="superdiagonal"):
        build_Ac(c, [1.0, 2.0], [3.0, 4.0])


def test_save_load_round_trip(tmp_path):
    c = example_certificate(0.05)
    p = tmp_path / "cert.json"
    save_certificate(c, p)
    d = json.loads(p.read_text())
    assert d["n"] == 3
    c2 = load_certificate(p)
    np.testing.assert_array_equal(c2.P, c.P)
    np.testing.assert_array_equal(c2.gain_coeffs, c.gain_coeffs)
    assert (c2.nu_c, c2.nu_lower, c2.nu_upper) == (c.nu_c, c.nu_lower, c.nu_upper)


@given(a=st.floats(1e-3, 1e3))
@settings(max_examples=60, deadline=None)
def test_example_certificate_scales_linearly(a):
    c = example_certificate(a)
    assert _first_ineq_max_eig(c) == pytest.approx(a * (-8 + 2 * math.sqrt(10)), rel=1e-9)
    Dt = c.D_tilde
    eig = np.linalg.eigvalsh(c.P @ Dt + Dt @ c.P)
    np.testing.assert_allclose(eig, [a, 5 * a], rtol=1e-12)
    assert kappa(c, 0.25, 1.0) == pytest.approx(min(0.375, 1.675 / (2 * (2 + math.sqrt(2)))), rel=1e-12)


@given(p=st.floats(1e-4, 1e2), k=st.floats(1e-2, 1e4))
@settings(max_examples=60, deadline=None)
def test_first_order_certificate_property(p, k):
    # n = 2: 2 p (-k) <= -nu_c, and 2 p (1/2) = p in [nu_lower, nu_upper]
    c = LyapunovCertificate(2, [[p]], [k], 2 * p * k, p, p)
    rep = verify_certificate(c, SecondOrderBounds(), box_grid(-3, 3, 5, 2))
    assert rep.passed
    assert abs(rep.worst_margin_first_ineq) <= rep.tol
