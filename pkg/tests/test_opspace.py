import math

import numpy as np
import pytest

from oracles import block_matrix, distance_to_span, trace_class_element_norm
from osquant.cbmaps import CBMap
from osquant.numerics import operator_norm, trace_norm
from osquant.opspace import (
    ConcreteSpace,
    ZeroSpace,
    check_axioms,
    coequalizer,
    column_hilbert,
    direct_sum,
    direct_sum_1,
    direct_sum_inf,
    element,
    element_from_json,
    element_to_json,
    equalizer,
    matrix_space,
    max_of,
    min_of,
    quotient_space,
    sandwich,
    space_from_json,
    trace_class,
)

RNG_SEED = 11


@pytest.fixture
def rng():
    return np.random.default_rng(RNG_SEED)


def test_matrix_space_norm_is_block_operator_norm(rng):
    m3 = matrix_space(3)
    for n in (1, 2, 3):
        x = m3.random_element(rng, n)
        assert abs(m3.norm(x).value - operator_norm(block_matrix(x, m3.basis))) < 1e-12


def test_element_rejects_bad_shapes():
    with pytest.raises(ValueError):
        element(np.zeros((2, 3, 4)), 4)
    with pytest.raises(ValueError):
        element(np.full((1, 1, 2), np.nan), 2)


def test_linearly_dependent_basis_rejected():
    with pytest.raises(ValueError):
        ConcreteSpace([np.eye(2), 2 * np.eye(2)])


def test_column_hilbert_level_n_is_column_stacking(rng):
    h = column_hilbert(3)
    x = h.random_element(rng, 2)
    # [h_ij] acts as an (n) x (n) block matrix of columns
    mat = np.zeros((2 * 3, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            mat[i * 3:(i + 1) * 3, j] = x[i, j]
    assert abs(h.norm(x).value - operator_norm(mat)) < 1e-12


def test_trace_class_level_one_is_trace_norm(rng):
    t = trace_class(3)
    x = t.random_element(rng, 1)
    est = t.norm(x)
    assert est.exact
    assert abs(est.value - trace_norm(x[0, 0].reshape(3, 3))) < 1e-12


def test_trace_class_level_two_matches_diamond_oracle(rng):
    t = trace_class(2)
    for _ in range(3):
        x = t.random_element(rng, 2)
        est = t.norm(x)
        ref = trace_class_element_norm(x, 2)
        assert est.lower <= ref * (1 + 1e-6)
        assert est.upper >= ref * (1 - 1e-6)
        assert est.gap <= 1e-6 * ref


def test_trace_class_identity_and_transpose_elements():
    # [e_ji] realizes b |-> b (cb norm 1); [e_ij] realizes b |-> b^t (cb norm 2)
    t = trace_class(2)
    x = np.zeros((2, 2, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            x[i, j, j * 2 + i] = 1
    assert abs(t.norm(x).value - 1) < 1e-6
    y = np.zeros((2, 2, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            y[i, j, i * 2 + j] = 1
    assert abs(t.norm(y).value - 2) < 1e-6


def test_sum_inf_is_max_of_components(rng):
    m2, h = matrix_space(2), column_hilbert(2)
    s = direct_sum_inf([m2, h])
    x = s.random_element(rng, 2)
    a = m2.norm(s.component(x, 0)).value
    b = h.norm(s.component(x, 1)).value
    est = s.norm(x)
    assert est.exact and abs(est.value - max(a, b)) < 1e-12


def test_sum_one_level_one_is_sum(rng):
    m2, t2 = matrix_space(2), trace_class(2)
    s = direct_sum_1([m2, t2])
    x = s.random_element(rng, 1)
    expect = operator_norm(x[0, 0, :4].reshape(2, 2)) + trace_norm(x[0, 0, 4:].reshape(2, 2))
    assert abs(s.norm(x).value - expect) < 1e-12


def test_sum_one_higher_level_interval(rng):
    s = direct_sum_1([matrix_space(2), column_hilbert(2)])
    x = s.random_element(rng, 2)
    est = s.norm(x)
    lo = max(s.spaces[0].norm(s.component(x, 0)).value, s.spaces[1].norm(s.component(x, 1)).value)
    hi = s.spaces[0].norm(s.component(x, 0)).value + s.spaces[1].norm(s.component(x, 1)).value
    assert lo - 1e-9 <= est.lower <= est.upper <= hi + 1e-9


def test_inclusions_and_projections():
    s = direct_sum_inf([matrix_space(1), matrix_space(2)])
    assert np.array_equal(s.projection(1) @ s.inclusion(1), np.eye(4))
    assert not np.any(s.projection(0) @ s.inclusion(1))


def test_quotient_norm_matches_distance(rng):
    m2 = matrix_space(2)
    kernel = np.eye(4)[[0]]
    q = quotient_space(m2, kernel)
    for _ in range(3):
        z = q.random_element(rng, 1)
        x = q.lift(z)[0, 0].reshape(2, 2)
        ref = distance_to_span(x, np.array([np.diag([1.0, 0.0])]))
        est = q.norm(z)
        assert est.lower - 1e-6 <= ref <= est.upper + 1e-6
        assert est.gap <= 1e-7


def test_quotient_by_everything_is_zero():
    assert isinstance(quotient_space(matrix_space(1), [[1.0]]), ZeroSpace)


def test_min_max_level_one_agree_with_base(rng):
    m2 = matrix_space(2)
    x = m2.random_element(rng, 1)
    base = m2.norm(x).value
    for sp in (min_of(m2), max_of(m2)):
        est = sp.norm(x)
        assert est.contains(base, 1e-9)


def test_min_below_max_at_level_two(rng):
    m2 = matrix_space(2)
    lo_space, hi_space = min_of(m2), max_of(m2)
    x = m2.random_element(rng, 2)
    assert lo_space.norm(x).lower <= m2.norm(x).value + 1e-4
    assert m2.norm(x).value <= hi_space.norm(x).upper + 1e-4


def test_min_rejects_seminorm():
    from osquant.opspace import BallParam, min_quant

    zero_ball = BallParam(1, 2, [], lambda blocks: np.zeros((1, 1, 2)), [])
    with pytest.raises(ValueError, match="not a norm"):
        min_quant(lambda v: abs(v[0]), zero_ball, 2)


def test_direct_sum_and_sandwich_helpers(rng):
    x = rng.standard_normal((1, 1, 3))
    y = rng.standard_normal((2, 2, 3))
    s = direct_sum(x, y)
    assert s.shape == (3, 3, 3) and not np.any(s[0, 1:])
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2))
    z = sandwich(a, y, b)
    assert np.allclose(z[:, :, 0], a @ y[:, :, 0] @ b)


def test_equalizer_and_coequalizer():
    m2 = matrix_space(2)
    ident = CBMap(m2, m2, np.eye(4))
    diag = np.diag([1.0, 0.0, 0.0, 1.0])
    proj = CBMap(m2, m2, diag)
    eq = equalizer(ident, proj)
    assert eq.dim == 2
    assert equalizer(ident, ident) is m2
    co = coequalizer(ident, proj)
    assert co.dim == 2
    assert coequalizer(ident, ident) is m2


def test_json_roundtrips(rng):
    spaces = [matrix_space(2), trace_class(2), column_hilbert(2),
              direct_sum_inf([matrix_space(1), trace_class(2)]),
              direct_sum_1([matrix_space(2), column_hilbert(1)]),
              quotient_space(matrix_space(2), np.eye(4)[[0]]), min_of(matrix_space(2))]
    for s in spaces:
        again = space_from_json(s.to_json())
        assert again.to_json() == s.to_json()
    x = matrix_space(2).random_element(rng, 2)
    assert np.array_equal(element_from_json(element_to_json(x), 4), x)
    with pytest.raises(ValueError):
        space_from_json({"kind": "nope"})


@pytest.mark.parametrize("factory", [lambda: matrix_space(2), lambda: column_hilbert(3),
                                     lambda: direct_sum_inf([matrix_space(2), column_hilbert(2)])])
def test_axioms_on_exact_spaces(factory):
    rep = check_axioms(factory(), samples=10, max_level=3)
    assert rep.holds, rep.to_json()


def test_axiom_checker_needs_two_levels():
    with pytest.raises(ValueError):
        check_axioms(matrix_space(1), samples=1, max_level=1)
