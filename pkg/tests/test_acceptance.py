"""Acceptance criteria, one test per criterion.

Run with ``pytest -v tests/test_acceptance.py``; the terminal summary lists a
PASS/FAIL line per criterion.  ``python3 tests/test_acceptance.py`` does the same
without pytest's collection.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_registry import RESULTS  # noqa: E402
from osquant.cbmaps import CBMap, cb_norm_lower, transpose_map  # noqa: E402
from osquant.chu import (  # noqa: E402
    ChuMorphism,
    dual,
    from_channel,
    hs_object,
    morphism_valid,
    polarity_report,
    same_object,
    tensor_hs,
)
from osquant.exponential import (  # noqa: E402
    apply_cb_bound,
    linearize_ball_function,
    promote,
    rectangular_space,
    u_adjoint,
    u_ctrl,
)
from osquant.hsduality import (  # noqa: E402
    apply_unitary,
    cc_iff_cp_suite,
    compose,
    from_function,
    hs_correspondence_suite,
    is_completely_positive,
    random_cptp,
    random_unitary,
    transpose_channel,
)
from osquant.numerics import OptimizerConfig, operator_norm, trace_norm  # noqa: E402
from osquant.opspace import (  # noqa: E402
    check_axioms,
    column_hilbert,
    direct_sum_1,
    direct_sum_inf,
    matrix_space,
    max_of,
    min_of,
    quotient_space,
    trace_class,
)
from osquant.switch import build_switch, switch_jcb_certificate, switch_mb_witness  # noqa: E402
from osquant.tensors import projective_and_haagerup, projective_norm  # noqa: E402

SEED = 20240601
CFG = OptimizerConfig(seed=SEED)


def _rng(offset):
    return np.random.default_rng(SEED + offset)


def _kron_assemble(v, d1, d2):
    # x_ij (x) y_kl sits at row i d2 + k, column j d2 + l
    return np.einsum("ijkl->ikjl", v.reshape(d1, d1, d2, d2)).reshape(d1 * d2, d1 * d2)


def test_01_switch_mb_witness():
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for d, n in ((2, 2), (3, 3), (4, 4)):
        rep = switch_mb_witness(build_switch(d), n)
        worst = max(worst, abs(rep["mbLower"] - n))
        ok &= rep["witnessNorm"] <= 1 + 1e-12
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1e-9 and elapsed < 5
    RESULTS.record(1, "switch mb witness equals n", ok, f"max |value - n| = {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_02_switch_jcb():
    t0 = time.perf_counter()
    cert = switch_jcb_certificate(build_switch(2), 2, OptimizerConfig(seed=SEED, restarts=16))
    elapsed = time.perf_counter() - t0
    ok = abs(cert["jcbLower"] - 1) <= 1e-4 and not cert["violation"] and elapsed < 60
    RESULTS.record(2, "switch jointly completely contractive", ok,
                   f"jcb lower = {cert['jcbLower']:.12f}, {elapsed:.2f}s")
    assert ok


def test_03_transpose_inadmissible():
    lam = float(np.linalg.eigvalsh(transpose_channel(2).choi())[0])
    est = cb_norm_lower(transpose_map(2), 2, CFG)
    ok = abs(lam + 1) <= 1e-10 and abs(est.lower - 2) <= 1e-9
    RESULTS.record(3, "transpose: Choi eigenvalue -1, cb norm 2", ok,
                   f"lambda_min = {lam:.12f}, cb lower = {est.lower:.12f}")
    assert ok


def test_04_hs_correspondence():
    rng = _rng(4)
    t0 = time.perf_counter()
    worst_pair, worst_cb, agree = 0.0, 0.0, True
    for i in range(30):
        d1, d2 = 1 + i % 3, 1 + (i // 3) % 3
        rep = hs_correspondence_suite(random_cptp(rng, d1, d2), CFG)
        worst_pair = max(worst_pair, rep["pairingDefect"])
        worst_cb = max(worst_cb, rep["cbLower"]["maxDifference"])
        agree &= rep["allAgree"] and rep["cp"]["agree"] and rep["tpUnital"]["agree"]
    elapsed = time.perf_counter() - t0
    ok = agree and worst_pair <= 1e-10 and worst_cb <= 2e-4 and elapsed < 120
    RESULTS.record(4, "HS correspondence on 30 CPTP channels", ok,
                   f"pairing defect {worst_pair:.1e}, cb lower diff {worst_cb:.1e}, {elapsed:.1f}s")
    assert ok


def _unital_cp(rng):
    w = rng.dirichlet(np.ones(3))
    us = [random_unitary(rng, 2) for _ in range(3)]
    return from_function(lambda x: sum(p * u @ x @ u.conj().T for p, u in zip(w, us)), 2, 2)


def _unital_non_cp(rng):
    while True:
        p = rng.uniform(0.6, 1.0)
        u, v = random_unitary(rng, 2), random_unitary(rng, 2)
        phi = from_function(lambda x: (1 - p) * u @ x @ u.conj().T + p * (v @ x @ v.conj().T).T, 2, 2)
        if np.linalg.eigvalsh(phi.choi())[0] < -0.1:
            return phi


def test_05_cc_iff_cp():
    rng = _rng(5)
    maps = [_unital_cp(rng) for _ in range(10)] + [_unital_non_cp(rng) for _ in range(10)]
    reps = [cc_iff_cp_suite(phi, CFG) for phi in maps]
    agree = sum(r["agree"] for r in reps)
    by_construction = all(r["cp"] == "holds" for r in reps[:10]) and all(r["cp"] == "fails" for r in reps[10:])
    ok = agree == 20 and by_construction
    RESULTS.record(5, "CP iff complete contraction on 20 unital maps", ok, f"{agree}/20 verdicts agree")
    assert ok


def test_06_projective_trace_class():
    rng = _rng(6)
    t2 = trace_class(2)
    t0 = time.perf_counter()
    contained, worst_rel = 0, 0.0
    for _ in range(20):
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        est = projective_norm(t2, t2, v, CFG)
        ref = trace_norm(_kron_assemble(v, 2, 2))
        contained += est.contains(ref, 1e-9 * ref)
        worst_rel = max(worst_rel, est.gap / ref)
    elapsed = time.perf_counter() - t0
    ok = contained == 20 and worst_rel <= 0.05 and elapsed < 180
    RESULTS.record(6, "T2 (x)^ T2 norm equals trace norm", ok,
                   f"{contained}/20 contained, max relative gap {worst_rel:.1e}, {elapsed:.1f}s")
    assert ok


def test_07_elementary_tensors():
    rng = _rng(7)
    m2 = matrix_space(2)
    good = 0
    for _ in range(20):
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        est = projective_norm(m2, m2, np.kron(x, y), CFG)
        good += est.contains(operator_norm(x.reshape(2, 2)) * operator_norm(y.reshape(2, 2)), 1e-3)
    ok = good == 20
    RESULTS.record(7, "projective norm of x (x) y is ||x|| ||y||", ok, f"{good}/20 contained")
    assert ok


def test_08_haagerup_below_projective():
    rng = _rng(8)
    m2 = matrix_space(2)
    worst = -np.inf
    for _ in range(20):
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        proj, haag = projective_and_haagerup(m2, m2, v, CFG)
        worst = max(worst, haag.upper - proj.upper)
    ok = worst <= 1e-6
    RESULTS.record(8, "Haagerup upper <= projective upper", ok, f"max(h - proj) = {worst:.2e}")
    assert ok


def _axiom_spaces():
    m2 = matrix_space(2)
    return {
        "M_2": m2,
        "T_2": trace_class(2),
        "H_c(3)": column_hilbert(3),
        "MIN(M_2)": min_of(m2),
        "MAX(M_2)": max_of(m2),
        "l1(M_2, H_c(2))": direct_sum_1([m2, column_hilbert(2)]),
        "linf(M_2, T_2)": direct_sum_inf([m2, trace_class(2)]),
        "M_2 / span(e_11)": quotient_space(m2, np.eye(4)[[0]]),
    }


def test_09_operator_space_axioms():
    bad = []
    worst = 0.0
    for name, space in _axiom_spaces().items():
        rep = check_axioms(space, samples=50, max_level=3, config=CFG, seed=SEED)
        worst = max(worst, rep.m1_defect, rep.m2_defect)
        if not rep.holds:
            bad.append(name)
    ok = not bad
    RESULTS.record(9, "M1/M2 on 8 spaces, 50 samples each", ok,
                   f"worst certified defect {worst:.1e}" + (f", failing: {bad}" if bad else ""))
    assert ok


def test_10_min_max_sandwich():
    rng = _rng(10)
    m2 = matrix_space(2)
    lo_space, hi_space = min_of(m2), max_of(m2)
    good = 0
    for _ in range(20):
        x = m2.random_element(rng, 2)
        mid = m2.norm(x).value
        good += lo_space.norm(x, CFG).lower <= mid + 1e-4 and mid <= hi_space.norm(x, CFG).upper + 1e-4
    ok = good == 20
    RESULTS.record(10, "MIN <= concrete <= MAX at level 2", ok, f"{good}/20 consistent")
    assert ok


def test_11_chu_model():
    rng = _rng(11)
    h2 = hs_object(2)
    involution = same_object(dual(dual(h2)), h2)
    valid = invalid = 0
    for _ in range(10):
        m = from_channel(random_cptp(rng, 2, 2))
        valid += morphism_valid(m, h2, h2, CFG).holds
        noise = 1e-3 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        bad = ChuMorphism(m.forward, CBMap(m.backward.domain, m.backward.codomain, m.backward.coeffs + noise))
        invalid += morphism_valid(bad, h2, h2, CFG).fails
    t = tensor_hs(h2, h2, CFG)
    tensor_ok = same_object(t, hs_object(4)) and t.meta["identification"]["pairingDefect"] <= 1e-10
    expected = {
        "P:2": "T(H_P)", "P:2 * R:2": "T(H_P) ⊗^ T(H_R) ≅ T(H_P ⊗ H_R)", "P:2 + R:2": "T(H_P) ⊕¹ T(H_R)",
        "N:2": "B(H_N)", "N:2 % M:2": "B(H_N) ⊗̄ B(H_M) ≅ B(H_N ⊗ H_M)", "N:2 & M:2": "B(H_N) ⊕^∞ B(H_M)",
    }
    rows = sum(polarity_report(f, CFG)[1]["row"]["space"] == row for f, row in expected.items())
    ok = involution and valid == 10 and invalid == 10 and tensor_ok and rows == 6
    RESULTS.record(11, "Chu model", ok,
                   f"involution {involution}, valid {valid}/10, invalid {invalid}/10, "
                   f"tensorHS {tensor_ok}, rows {rows}/6")
    assert ok


def _random_ball_matrix(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return g / operator_norm(g) * rng.uniform(0.0, 1.0)


def test_12_exponential_discipline():
    rng = _rng(12)
    m2 = matrix_space(2)
    target = rectangular_space(4, 4)

    def g(p):
        return u_ctrl(p.reshape(2, 2)).reshape(-1)

    lin = linearize_ball_function(g, target)
    worst_lin = 0.0
    for _ in range(50):
        x = _random_ball_matrix(rng, 2).reshape(-1)
        worst_lin = max(worst_lin, float(np.max(np.abs(lin(promote(m2, x)) - g(x)))))
    worst_ball = 0.0
    for _ in range(50):
        f = _random_ball_matrix(rng, 2)
        if rng.uniform() < 0.2:
            f = f / operator_norm(f)
        worst_ball = max(worst_ball, operator_norm(u_adjoint(f)) - 1, operator_norm(u_ctrl(f)) - 1,
                         apply_cb_bound(f) - 1)
    ok = worst_lin <= 1e-9 and worst_ball <= 1e-9
    RESULTS.record(12, "exponential discipline", ok,
                   f"linearize-promote defect {worst_lin:.1e}, max norm excess {worst_ball:.1e}")
    assert ok


DETERMINISM_COMMANDS = [
    (["switch", "demo", "--dim", "3", "--n", "3"], None),
    (["cbnorm", "--max-level", "2"], {"map": {"preset": "transpose", "k": 2}}),
    (["channel", "hs-suite"], {"channel": {"preset": "random", "d": 2}}),
    (["tensor-norm", "--kind", "proj"], {"left": {"kind": "traceClass", "k": 2},
                                         "right": {"kind": "traceClass", "k": 2},
                                         "element": [[0.5, -0.25], [0, 1], [1, 0], [0.125, 0]] * 4}),
    (["jcb", "--max-level", "1", "--restarts", "4"], {"bilinear": {"preset": "switch", "dim": 2}}),
    (["chu", "interpret", "--formula", "(P:2 * R:2) + N:2~"], None),
    (["verify-axioms", "--samples", "4"], {"space": {"kind": "traceClass", "k": 2}}),
]


def _run_reports(workdir: Path, tag: str) -> list[bytes]:
    out = []
    for i, (argv, payload) in enumerate(DETERMINISM_COMMANDS):
        args = [sys.executable, "-m", "osquant", *argv, "--seed", str(SEED), "--no-timestamp"]
        if payload is not None:
            src = workdir / f"in{i}.json"
            src.write_text(json.dumps(payload))
            args += ["--input", str(src)]
        dest = workdir / f"{tag}{i}.json"
        subprocess.run(args + ["--output", str(dest)], check=False, capture_output=True)
        out.append(dest.read_bytes())
    return out


def test_13_determinism(tmp_path):
    first = _run_reports(tmp_path, "a")
    second = _run_reports(tmp_path, "b")
    same = sum(a == b for a, b in zip(first, second))
    ok = same == len(DETERMINISM_COMMANDS)
    RESULTS.record(13, "byte-identical reports across runs", ok, f"{same}/{len(DETERMINISM_COMMANDS)} identical")
    assert ok


if __name__ == "__main__":
    import tempfile

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for fn in tests:
        try:
            if fn.__code__.co_argcount:
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
        except AssertionError:
            pass
    for line in RESULTS.lines():
        print(line)
    sys.exit(0 if all(ok for _, ok, _ in RESULTS.entries.values()) else 1)
