"""The quantum switch ``u(f, g) = p0 (x) fg + p1 (x) gf`` on ``B(H) x B(H)``.

It is a complete contraction on the projective tensor product but its
multiplicatively bounded norm is at least ``n`` for every ``n <= dim H``, so it
does not factor through the Haagerup tensor product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import OptimizerConfig, cmatrix_to_json, operator_norm, vector_to_json
from .opspace import DEFAULT_CONFIG, matrix_space
from .tensors import BilinearMap, haagerup_factorization_test, jcb_norm

MAX_DIM = 6


@dataclass
class SwitchInstance:
    dim_h: int
    bilinear: BilinearMap

    def __call__(self, f, g) -> np.ndarray:
        d = self.dim_h
        out = self.bilinear(np.asarray(f, dtype=complex).reshape(-1), np.asarray(g, dtype=complex).reshape(-1))
        return out.reshape(2 * d, 2 * d)


def switch_matrix(f, g) -> np.ndarray:
    """Direct formula, used as an independent reference."""
    f, g = np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    return np.kron(p0, f @ g) + np.kron(p1, g @ f)


def build_switch(d: int) -> SwitchInstance:
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > MAX_DIM:
        raise ValueError(f"dim H is capped at {MAX_DIM}")
    k = 2 * d
    coeffs = np.zeros((k * k, d ** 4), dtype=complex)
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    col = (a * d + b) * d * d + (c * d + e)
                    # e_ab e_ce = [b == c] e_ae in the p0 block
                    if b == c:
                        coeffs[a * k + e, col] += 1
                    # e_ce e_ab = [e == a] e_cb in the p1 block
                    if e == a:
                        coeffs[(d + c) * k + (d + b), col] += 1
    inst = SwitchInstance(d, BilinearMap(matrix_space(d), matrix_space(d), matrix_space(k), coeffs))
    eye = np.eye(d)
    if operator_norm(inst(eye, eye) - np.eye(k)) > 1e-12:
        raise AssertionError("switch does not send (id, id) to the identity")
    return inst


def switch_jcb_certificate(s: SwitchInstance, max_level: int = 2, config: OptimizerConfig | None = None,
                           scale: float = 1.0) -> dict:
    u = s.bilinear if scale == 1.0 else BilinearMap(s.bilinear.left, s.bilinear.right, s.bilinear.target,
                                                    scale * s.bilinear.coeffs)
    est = jcb_norm(u, max_level, config or DEFAULT_CONFIG)
    violated = est.lower > 1 + 1e-6
    return {"dimH": s.dim_h, "maxLevel": max_level, "jcbLower": est.lower,
            "violation": violated, "witness": est.witness if violated else None,
            "verdict": "violation found" if violated else "consistent with ||qsw||_cb = 1"}


def mb_witness(d: int, n: int):
    """``f = [e_ji]`` on the first n basis vectors and ``k = |1> (x) v_1`` in the first block."""
    if n > d:
        raise ValueError("n must not exceed dim H")
    if n < 1:
        raise ValueError("n must be >= 1")
    f = np.zeros((n, n, d * d), dtype=complex)
    for i in range(n):
        for j in range(n):
            f[i, j, j * d + i] = 1
    k = np.zeros(n * 2 * d, dtype=complex)
    k[d] = 1  # block 0, qubit |1>, first basis vector of H
    return f, k


def switch_mb_witness(s: SwitchInstance, n: int) -> dict:
    d = s.dim_h
    f, k = mb_witness(d, n)
    big = s.bilinear.row_column(f, f)
    mat = s.bilinear.target.assemble(big)
    value = float(np.linalg.norm(mat @ k))
    f_norm = operator_norm(matrix_space(d).assemble(f))
    k_norm = float(np.linalg.norm(k))
    if f_norm > 1 + 1e-12 or abs(k_norm - 1) > 1e-15:
        raise AssertionError("witness left the unit ball")
    if abs(value - n) > 1e-9:
        raise AssertionError(f"witness value {value} differs from {n}")
    return {"dimH": d, "n": n, "mbLower": value, "witnessNorm": f_norm,
            "witnessF": cmatrix_to_json(matrix_space(d).assemble(f)), "witnessK": vector_to_json(k),
            "verdict": "obstructed" if value > 1 + 1e-9 else "no obstruction at this level"}


def no_haagerup_factorization(s: SwitchInstance, config: OptimizerConfig | None = None) -> dict:
    d = s.dim_h
    witnesses = [mb_witness(d, n)[0] for n in range(1, d + 1)]
    pairs = [(f, f) for f in witnesses]
    best_witness = switch_mb_witness(s, d)
    report = haagerup_factorization_test(s.bilinear, config or DEFAULT_CONFIG, witnesses=pairs)
    mb_lower = max(best_witness["mbLower"], 0.0 if math.isnan(report.mb_lower) else report.mb_lower)
    out = {"dimH": d, "n": d, "factorization": report.to_json()}
    if report.found:
        out.update({"verdict": "factorized", "mbLower": None})
    else:
        out.update({"verdict": "obstructed", "mbLower": mb_lower,
                    "witnessF": best_witness["witnessF"], "witnessK": best_witness["witnessK"]})
    return out
