import math

import numpy as np
import pytest

from osquant.numerics import (
    NormEstimate,
    NotHermitianError,
    ObjectiveDivergedError,
    OptimizerConfig,
    cmatrix_from_json,
    cmatrix_to_json,
    maximize_multilinear_norm,
    maximize_over_unit_ball,
    min_eigenvalue,
    operator_norm,
    polar_maximizer,
    random_contraction,
    restart_rng,
    trace_norm,
)


def test_operator_and_trace_norm_against_eigenvalues():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    evals = np.linalg.eigvalsh(a @ a.conj().T)
    assert abs(operator_norm(a) - math.sqrt(evals.max())) < 1e-12
    assert abs(trace_norm(a) - np.sqrt(np.clip(evals, 0, None)).sum()) < 1e-12


def test_empty_matrices_have_zero_norm():
    assert operator_norm(np.zeros((0, 3))) == 0.0
    assert trace_norm(np.zeros((0, 0))) == 0.0


def test_min_eigenvalue_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        min_eigenvalue([[0, 1], [0, 0]])
    assert min_eigenvalue(np.diag([3.0, -2.0])) == -2.0


def test_polar_maximizer_attains_trace_norm():
    rng = np.random.default_rng(5)
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = polar_maximizer(g)
    assert operator_norm(b) <= 1 + 1e-12
    assert abs(np.real(np.sum(b * g)) - trace_norm(g)) < 1e-12


def test_random_contraction_is_partial_isometry():
    c = random_contraction(np.random.default_rng(0), (2, 4))
    assert abs(operator_norm(c) - 1) < 1e-12


def test_restart_streams_are_independent_of_count():
    a = restart_rng(7, 3).standard_normal(4)
    b = restart_rng(7, 3).standard_normal(4)
    c = restart_rng(7, 4).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_cmatrix_json_roundtrip_is_exact():
    m = np.array([[1 / 3 + 2j, -0.1], [1e-300, np.pi * 1j]])
    assert np.array_equal(cmatrix_from_json(cmatrix_to_json(m)), m)
    with pytest.raises(ValueError):
        cmatrix_from_json({"rows": 2, "cols": 2, "data": [[0, 0]]})


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(seed=-1)


def test_norm_estimate_value_and_json():
    e = NormEstimate(1.0, math.inf)
    assert e.value == 1.0 and e.to_json()["upper"] is None
    x = NormEstimate.exact_value(2.5)
    assert x.gap == 0 and x.contains(2.5)


def test_ball_maximizer_finds_linear_functional_norm():
    # sup of |<a, x>| over the Euclidean ball is ||a||_2
    a = np.array([3.0, 4.0j])
    est = maximize_over_unit_ball(lambda x: abs(np.vdot(a, x)), np.linalg.norm, 2,
                                  OptimizerConfig(restarts=4))
    assert abs(est.lower - 5.0) < 1e-6


def test_ball_maximizer_rejects_divergence():
    with pytest.raises(ObjectiveDivergedError):
        maximize_over_unit_ball(lambda x: math.nan, np.linalg.norm, 2)


def test_multilinear_ascent_matches_svd():
    # sup over contractions a, b of ||a m b|| is ||m||
    rng = np.random.default_rng(2)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    res = maximize_multilinear_norm(lambda bl: bl[0] @ m @ bl[1], [(2, 3), (3, 2)], OptimizerConfig(restarts=3))
    assert abs(res.value - operator_norm(m)) < 1e-9
