import numpy as np
import pytest

from osquant.exponential import (
    FreeL1Element,
    OutsideBallError,
    adjoint_l,
    apply_cb_bound,
    apply_l,
    combine,
    ctrl_l,
    ctrl_norm_identity,
    linearize_ball_function,
    promote,
    promote_matrix,
    rectangular_space,
    u_adjoint,
    u_apply,
    u_ctrl,
)
from osquant.hsduality import is_completely_positive
from osquant.numerics import operator_norm, random_contraction
from osquant.opspace import matrix_space


def test_promote_rejects_points_outside_ball():
    with pytest.raises(OutsideBallError, match="outside unit ball"):
        promote(matrix_space(2), 1.01 * np.eye(2).reshape(-1))
    promote(matrix_space(2), (1 + 1e-10) * np.eye(2).reshape(-1))


def test_identical_points_merge_and_norm_is_l1():
    m2 = matrix_space(2)
    a = promote(m2, np.eye(2).reshape(-1) * 0.5)
    b = promote(m2, np.diag([0.5, -0.5]).reshape(-1))
    e = combine([(2.0, a), (-1j, b), (1.0, a)])
    assert len(e.support) == 2
    assert e.norm == pytest.approx(4.0)
    assert (a + a.scale(-1)).support == ()


def test_linearize_promote_identity():
    m2 = matrix_space(2)
    rng = np.random.default_rng(0)

    def g(p):
        return (p.reshape(2, 2) @ p.reshape(2, 2)).reshape(-1)

    lin = linearize_ball_function(g, m2)
    for _ in range(5):
        x = random_contraction(rng, (2, 2)).reshape(-1)
        assert np.max(np.abs(lin(promote(m2, x)) - g(x))) <= 1e-12


def test_linearize_detects_escaping_function():
    m2 = matrix_space(2)
    lin = linearize_ball_function(lambda p: 2 * p, m2)
    with pytest.raises(OutsideBallError) as info:
        lin(promote(m2, np.eye(2).reshape(-1)))
    assert info.value.witness["outputNorm"] == pytest.approx(2.0)


def test_primitives_on_a_contraction():
    rng = np.random.default_rng(1)
    f = 0.9 * random_contraction(rng, (2, 2))
    assert np.array_equal(u_adjoint(f), f.conj().T)
    c = u_ctrl(f)
    assert np.array_equal(c[:2, :2], np.eye(2)) and np.array_equal(c[2:, 2:], f)
    assert operator_norm(c) == pytest.approx(1.0)
    ch = u_apply(f)
    x = rng.standard_normal((2, 2))
    assert np.allclose(ch(x), f @ x @ f.conj().T)
    assert is_completely_positive(ch).holds
    assert apply_cb_bound(f) == pytest.approx(operator_norm(f) ** 2, abs=1e-6)


def test_ctrl_norm_identity():
    rng = np.random.default_rng(2)
    f = random_contraction(rng, (3, 3))
    lhs, rhs = ctrl_norm_identity(f, rng.standard_normal(3), rng.standard_normal(3) + 1j)
    assert abs(lhs - rhs) <= 1e-12 * max(1, rhs)
    with pytest.raises(ValueError):
        u_ctrl(np.ones((2, 3)))


def test_lifted_primitives_are_linear_in_the_support():
    rng = np.random.default_rng(3)
    f1, f2 = random_contraction(rng, (2, 2)), random_contraction(rng, (2, 2))
    e = combine([(0.3, promote_matrix(f1)), (0.7j, promote_matrix(f2))])
    assert np.allclose(adjoint_l(e), 0.3 * f1.conj().T + 0.7j * f2.conj().T)
    assert np.allclose(ctrl_l(e), 0.3 * u_ctrl(f1) + 0.7j * u_ctrl(f2))
    ch = apply_l(e)
    assert np.allclose(ch.superop, 0.3 * u_apply(f1).superop + 0.7j * u_apply(f2).superop)


def test_rectangular_points():
    rng = np.random.default_rng(4)
    f = random_contraction(rng, (2, 3))
    e = promote_matrix(f)
    assert e.space.shape == (2, 3)
    assert np.allclose(adjoint_l(e), f.conj().T)
    with pytest.raises(ValueError):
        ctrl_l(e)
    assert rectangular_space(2, 3).dim == 6


def test_json_roundtrip():
    rng = np.random.default_rng(5)
    e = combine([(1.0, promote_matrix(random_contraction(rng, (2, 2)))),
                 (-2.0, promote_matrix(0.5 * np.eye(2)))])
    again = FreeL1Element.from_json(e.to_json())
    assert again.norm == pytest.approx(e.norm)
    assert set(again.support) == set(e.support)
