import numpy as np
import pytest

from osquant.hsduality import (
    Channel,
    adjunction_defect,
    apply_unitary,
    as_cbmap,
    cb_norm_of_channel,
    cc_iff_cp_suite,
    commutation_matrix,
    compose,
    from_function,
    from_kraus,
    hs_correspondence_suite,
    identity_channel,
    is_completely_positive,
    is_positive,
    is_trace_preserving,
    is_unital,
    measure_basis,
    random_cptp,
    random_unitary,
    state_prep,
    tensor,
    trace_pairing,
    transpose,
    transpose_channel,
    unvec,
    vec,
)
from osquant.numerics import OptimizerConfig

CFG = OptimizerConfig(seed=5, restarts=6)


def test_vec_is_column_stacking():
    x = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vec(x), [1, 3, 2, 4])
    assert np.array_equal(unvec(vec(x), 2), x)
    k = commutation_matrix(3)
    y = np.arange(9).reshape(3, 3)
    assert np.array_equal(k @ vec(y), vec(y.T))


def test_kraus_channel_acts_by_conjugation():
    rng = np.random.default_rng(0)
    kr = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.allclose(from_kraus([kr])(x), kr @ x @ kr.conj().T, atol=1e-13)


def test_transpose_of_kraus_channel_is_heisenberg_conjugation():
    # tr(K x K^dagger b) = tr(x K^dagger b K)
    rng = np.random.default_rng(1)
    kr = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    psi = from_kraus([kr])
    phi = transpose(psi)
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert phi.picture == "heisenberg"
    assert np.allclose(phi(b), kr.conj().T @ b @ kr, atol=1e-13)
    assert adjunction_defect(psi, phi) < 1e-13
    back = transpose(phi)
    assert np.array_equal(back.superop, psi.superop)


def test_transpose_of_non_hermitian_preserving_map():
    # x |-> a x for non-Hermitian a: pairing adjoint is b |-> b a
    a = np.array([[0, 1j], [2, 0]])
    psi = from_function(lambda x: a @ x, 2, 2)
    phi = transpose(psi)
    b = np.array([[1, 2j], [0, 3]])
    assert np.allclose(phi(b), b @ a)
    assert trace_pairing(psi(np.eye(2)), b) == pytest.approx(trace_pairing(np.eye(2), phi(b)))


def test_choi_of_transpose_has_eigenvalue_minus_one():
    c = transpose_channel(2).choi()
    assert abs(np.linalg.eigvalsh(c)[0] + 1) < 1e-12
    v = is_completely_positive(transpose_channel(2))
    assert v.fails and abs(v.value + 1) < 1e-10


def test_predicates_on_standard_channels():
    ident = identity_channel(3)
    assert is_completely_positive(ident).holds
    assert is_trace_preserving(ident).holds and is_unital(ident).holds
    meas = measure_basis(3)
    assert is_trace_preserving(meas).holds and is_unital(meas).holds
    prep = state_prep(np.diag([0.25, 0.75]))
    assert is_trace_preserving(prep).holds and not is_unital(prep).holds
    assert is_positive(transpose_channel(2), CFG).status == "inconclusive"
    neg = from_function(lambda x: -x, 2, 2)
    assert is_positive(neg, CFG).fails


def test_constructor_errors():
    with pytest.raises(ValueError, match="not unitary"):
        apply_unitary([[1, 1], [0, 1]])
    with pytest.raises(ValueError, match="not a density matrix"):
        state_prep(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        Channel(2, 2, np.eye(3))
    with pytest.raises(ValueError):
        compose(identity_channel(2), identity_channel(3))


def test_tensor_and_compose():
    rng = np.random.default_rng(3)
    a, b = random_cptp(rng, 2, 2), random_cptp(rng, 2, 3)
    x = rng.standard_normal((2, 2))
    y = rng.standard_normal((2, 2))
    assert np.allclose(tensor(a, b)(np.kron(x, y)), np.kron(a(x), b(y)), atol=1e-12)
    u = random_unitary(rng, 2)
    both = compose(apply_unitary(u), apply_unitary(u.conj().T))
    assert np.allclose(both.superop, np.eye(4), atol=1e-12)


def test_random_cptp_is_cptp():
    rng = np.random.default_rng(4)
    for d1, d2 in [(1, 2), (2, 3), (3, 2)]:
        phi = random_cptp(rng, d1, d2)
        assert is_completely_positive(phi).holds and is_trace_preserving(phi).holds


def test_as_cbmap_spaces_and_action():
    rng = np.random.default_rng(6)
    phi = random_cptp(rng, 2, 3)
    u = as_cbmap(phi)
    assert u.domain.kind == "traceClass" and u.codomain.kind == "traceClass"
    x = rng.standard_normal((2, 2))
    assert np.allclose(u(x.reshape(-1)).reshape(3, 3), phi(x), atol=1e-13)
    h = as_cbmap(transpose(phi))
    assert h.domain.to_json() == {"kind": "matrix", "k": 3}


def test_hs_suite_on_identity_and_random_channel():
    rep = hs_correspondence_suite(identity_channel(2), CFG)
    assert rep["allAgree"] and rep["pairingDefect"] == 0
    rep = hs_correspondence_suite(random_cptp(np.random.default_rng(7), 2, 2), CFG)
    assert rep["allAgree"]
    assert rep["cbLower"]["maxDifference"] <= 2e-4


def test_cc_iff_cp_on_transpose_and_unitary():
    rep = cc_iff_cp_suite(transpose_channel(2), CFG)
    assert rep["cp"] == "fails" and rep["completeContraction"] == "fails" and rep["agree"]
    u = random_unitary(np.random.default_rng(2), 2)
    rep = cc_iff_cp_suite(apply_unitary(u), CFG)
    assert rep["agree"] and rep["cp"] == "holds"
    with pytest.raises(ValueError, match="neither unital nor TP"):
        cc_iff_cp_suite(from_function(lambda x: 2 * x, 2, 2), CFG)


def test_cb_norm_of_channel_is_one_for_cptp():
    phi = random_cptp(np.random.default_rng(10), 2, 2)
    est = cb_norm_of_channel(phi, CFG)
    assert abs(est.lower - 1) < 1e-6 and est.upper <= 1 + 1e-6


def test_json_roundtrip():
    phi = random_cptp(np.random.default_rng(12), 2, 3)
    again = Channel.from_json(phi.to_json())
    assert np.array_equal(again.superop, phi.superop)
    assert phi.choi_json()["convention"] == "col-stacking"
