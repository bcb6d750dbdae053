import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gyrostep import fields
from gyrostep.fields import (FieldError, FieldModel, catalog, check_consistency, eval_total_A,
                             eval_total_B, field_from_spec, potential_for_linear_B1)
from gyrostep.polynomial import PolyVector

import oracles

coord = st.floats(-2, 2, allow_nan=False)
point = st.tuples(coord, coord, coord).map(np.array)


def random_points(n, seed=0):
    return np.random.default_rng(seed).uniform(-2, 2, size=(n, 3))


def test_total_B_at_origin_is_strong_part_only():
    m = catalog("cubic", 1e-2)
    np.testing.assert_allclose(eval_total_B(m, np.zeros(3)), [0, 0, 100], rtol=0, atol=1e-12)


def test_total_B_cubic_field_value():
    m = catalog("cubic", 1e-2)
    x = np.array([0.3, 0.2, -1.4])
    np.testing.assert_allclose(eval_total_B(m, x) - m.b0 / m.eps_eff, [-0.48, 0.34, 0.14],
                               atol=1e-14)
    np.testing.assert_allclose(m.B1(x), oracles.cubic_B1(x), atol=1e-14)


def test_total_B_without_weak_part_is_exactly_strong_part():
    m = fields.constant_field(0.3, b0=(0, 0.6, 0.8))
    assert np.array_equal(eval_total_B(m, np.array([1.0, -2.0, 3.0])), m.b0 / m.eps_eff)


def test_total_A_examples():
    eps = 1e-2
    m = catalog("cubic", eps)
    np.testing.assert_allclose(eval_total_A(m, np.zeros(3)), m.A1(np.zeros(3)))
    expected = -(1 / (2 * eps)) * np.array([1.0, -1.0, 0.0]) + np.ones(3)
    np.testing.assert_allclose(eval_total_A(m, np.ones(3)), expected, rtol=1e-14)
    c = fields.constant_field(1.0)
    np.testing.assert_allclose(eval_total_A(c, np.array([1.0, 0, 0])), [0, 0.5, 0], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(point)
def test_total_A_curl_is_total_B(x):
    m = catalog("cubic", 0.1)
    curl = oracles.curl_fd(lambda y: eval_total_A(m, y), x, step=1e-4)
    np.testing.assert_allclose(curl, eval_total_B(m, x), atol=1e-6)


def test_potential_for_zero_matrix_vanishes():
    A1, jac = potential_for_linear_B1(np.zeros((3, 3)))
    assert A1.is_zero
    np.testing.assert_array_equal(jac(np.ones(3)), np.zeros((3, 3)))


@pytest.mark.parametrize("M", [fields.TILTED_M,
                               np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])])
def test_potential_for_linear_field_has_correct_curl(M):
    A1, jac = potential_for_linear_B1(M)
    for x in random_points(100, seed=1):
        np.testing.assert_allclose(oracles.curl_fd(A1, x), M @ x, atol=1e-6)
        np.testing.assert_allclose(jac(x), oracles.fd_jacobian(A1, x), atol=1e-8)
        # exact curl from the analytic Jacobian
        J = jac(x)
        curl = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
        np.testing.assert_allclose(curl, M @ x, atol=1e-10)


def test_potential_rejects_nonzero_trace():
    with pytest.raises(FieldError):
        potential_for_linear_B1(np.eye(3))


def test_tilted_field_matches_hand_written_formulas():
    m = catalog("tilted", 1e-4)
    for x in random_points(10, seed=2):
        np.testing.assert_allclose(m.B1(x), oracles.tilted_B1(x), atol=1e-13)
        np.testing.assert_allclose(m.phi(x), oracles.tilted_phi(x), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(m.b0, np.array([1.0, 0.0, 0.5]) / np.sqrt(1.25), atol=1e-15)
    assert m.eps_eff == pytest.approx(1e-4 / np.sqrt(1.25), rel=1e-15)


@pytest.mark.parametrize("name", ["cubic", "tilted", "constant"])
def test_builtin_fields_are_consistent(name):
    rep = check_consistency(catalog(name, 1e-2), random_points(100, seed=3), fd_step=1e-5)
    assert rep.curl_residual <= 1e-6
    assert rep.jacobian_residual <= 1e-6
    assert rep.grad_residual <= 1e-6


def test_consistency_detects_wrong_potential():
    good = catalog("cubic", 1e-2)
    bad = FieldModel(good.b0_raw, good.eps, good.B1, PolyVector(), good.E, good.phi)
    pts = random_points(50, seed=4)
    rep = check_consistency(bad, pts)
    assert rep.curl_residual == pytest.approx(max(np.abs(good.B1(p)).max() for p in pts),
                                              rel=1e-6)


def test_consistency_of_trivial_field_is_exact():
    rep = check_consistency(fields.constant_field(1.0), random_points(20))
    assert rep.max_residual <= 1e-12


@settings(max_examples=30, deadline=None)
@given(point, st.floats(1e-4, 1.0))
def test_total_B_linear_in_inverse_eps(x, eps):
    a, b = catalog("tilted", eps), catalog("tilted", eps / 2)
    np.testing.assert_allclose(eval_total_B(b, x) - b.B1(x), 2 * (eval_total_B(a, x) - a.B1(x)),
                               rtol=1e-14)


def test_unit_direction_invariant():
    for name in ("cubic", "tilted", "constant"):
        assert abs(np.linalg.norm(catalog(name, 0.5).b0) - 1) <= 1e-14


def test_unknown_catalog_name():
    with pytest.raises(FieldError):
        catalog("nope", 1e-2)


def test_inline_field_spec():
    spec = {"b0": [0, 0, 2], "B1_matrix": fields.TILTED_M.tolist(),
            "phi": [[0.5, 2, 0, 0], [0.5, 0, 2, 0]]}
    m = field_from_spec(spec, 0.1)
    assert m.eps_eff == pytest.approx(0.05)
    x = np.array([0.3, -0.2, 0.5])
    np.testing.assert_allclose(m.E(x), [-0.3, 0.2, 0.0])
    assert check_consistency(m, random_points(20)).max_residual <= 1e-6
    with pytest.raises(FieldError):
        field_from_spec({"b0": [0, 0, 1], "B2": 1}, 0.1)


def test_nonfinite_inputs_rejected():
    with pytest.raises(FieldError):
        FieldModel(np.array([0, 0, np.nan]), 0.1, PolyVector(), PolyVector(), PolyVector())
    with pytest.raises(FieldError):
        FieldModel(np.array([0, 0, 1.0]), -1.0, PolyVector(), PolyVector(), PolyVector())
