"""Chu objects over operator spaces at finite dimension.

An object is a triple ``(X, Y, d)`` with ``d: X x Y -> C`` jointly completely
contractive.  The Hilbert-Schmidt objects ``(T_d, M_d, tr)`` carry the quantum
content: morphisms between them are exactly the pairs ``(phi, phi^t)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cbmaps import CBMap, Verdict, is_complete_contraction
from .hsduality import HEISENBERG, Channel, as_cbmap, commutation_matrix, transpose
from .numerics import OptimizerConfig, operator_norm, random_complex, restart_rng, trace_norm
from .opspace import (DEFAULT_CONFIG, OperatorSpace, direct_sum_1, direct_sum_inf, matrix_space, scalars,
                      trace_class)
from .tensors import BilinearMap, jcb_norm, projective_norm

ADJOINT_TOL = 1e-10
JCC_SLACK = 1e-6


class PolarityError(ValueError):
    pass


@dataclass
class ChuObject:
    left: OperatorSpace
    right: OperatorSpace
    pairing: BilinearMap
    # ("T", d) for (T_d, M_d, tr), ("B", d) for its dual
    hs: tuple | None = None
    meta: dict = field(default_factory=dict)

    def pair(self, x, y) -> complex:
        return complex(self.pairing(x, y)[0])

    @property
    def pairing_matrix(self) -> np.ndarray:
        """``D[i, j] = d(e_i, e_j)``."""
        return self.pairing.coeffs.reshape(self.left.dim, self.right.dim)

    def to_json(self) -> dict:
        out = {"left": self.left.to_json(), "right": self.right.to_json()}
        if self.hs is not None:
            out["hs"] = {"side": self.hs[0], "d": self.hs[1]}
        return out


def pairing_from_matrix(left: OperatorSpace, right: OperatorSpace, mat) -> BilinearMap:
    mat = np.asarray(mat, dtype=complex)
    return BilinearMap(left, right, scalars(), mat.reshape(1, -1))


def dual(a: ChuObject) -> ChuObject:
    hs = None if a.hs is None else ({"T": "B", "B": "T"}[a.hs[0]], a.hs[1])
    return ChuObject(a.right, a.left, pairing_from_matrix(a.right, a.left, a.pairing_matrix.T), hs)


def verify_jcc(a: ChuObject, max_level: int = 2, config: OptimizerConfig | None = None) -> Verdict:
    est = jcb_norm(a.pairing, max_level, config or DEFAULT_CONFIG)
    if est.lower > 1 + JCC_SLACK:
        return Verdict("fails", est.lower, est.witness, "pairing is not jointly completely contractive")
    return Verdict("holds", est.lower, {}, f"no violation up to level {max_level}")


def trace_pairing_matrix(d: int) -> np.ndarray:
    mat = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            mat[a * d + b, b * d + a] = 1
    return mat


@lru_cache(maxsize=None)
def _hs_jcc(d: int, max_level: int) -> Verdict:
    t, m = trace_class(d), matrix_space(d)
    obj = ChuObject(t, m, pairing_from_matrix(t, m, trace_pairing_matrix(d)), ("T", d))
    return verify_jcc(obj, max_level)


def hs_object(d: int, verify: bool = True) -> ChuObject:
    if d < 1:
        raise ValueError("d must be >= 1")
    t, m = trace_class(d), matrix_space(d)
    obj = ChuObject(t, m, pairing_from_matrix(t, m, trace_pairing_matrix(d)), ("T", d))
    if verify:
        v = _hs_jcc(d, 2)
        obj.meta["jcc"] = v.to_json()
        if v.fails:
            raise AssertionError("trace pairing failed the jcc check")
    return obj


def same_object(a: ChuObject, b: ChuObject) -> bool:
    return (a.left.to_json() == b.left.to_json() and a.right.to_json() == b.right.to_json()
            and a.pairing.coeffs.shape == b.pairing.coeffs.shape
            and np.array_equal(a.pairing.coeffs, b.pairing.coeffs))


# ---------------------------------------------------------------------------
# morphisms
# ---------------------------------------------------------------------------


@dataclass
class ChuMorphism:
    forward: CBMap  # X1 -> X2
    backward: CBMap  # Y2 -> Y1

    def dual(self) -> "ChuMorphism":
        return ChuMorphism(self.backward, self.forward)


def from_channel(phi: Channel) -> ChuMorphism:
    """``(phi, phi^t)`` between HS objects; ``phi`` is taken in the Schrodinger picture."""
    fwd = as_cbmap(phi, "schrodinger")
    bwd = as_cbmap(transpose(phi), HEISENBERG)
    return ChuMorphism(fwd, bwd)


def adjointness_defect(m: ChuMorphism, a: ChuObject, b: ChuObject) -> tuple[float, tuple[int, int]]:
    """Largest ``|d2(f e_i, e_j) - d1(e_i, g e_j)|`` over basis pairs and where it occurs."""
    lhs = m.forward.coeffs.T @ b.pairing_matrix
    rhs = a.pairing_matrix @ m.backward.coeffs
    diff = np.abs(lhs - rhs)
    i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return float(diff[i, j]), (int(i), int(j))


def _check_alignment(m: ChuMorphism, a: ChuObject, b: ChuObject) -> None:
    if (m.forward.domain.dim != a.left.dim or m.forward.codomain.dim != b.left.dim
            or m.backward.domain.dim != b.right.dim or m.backward.codomain.dim != a.right.dim):
        raise ValueError("misaligned dimensions between morphism and objects")


def _expected_backward(m: ChuMorphism, a: ChuObject, b: ChuObject) -> np.ndarray | None:
    if a.hs is None or b.hs is None or a.hs[0] != "T" or b.hs[0] != "T":
        return None
    d1, d2 = a.hs[1], b.hs[1]
    superop = commutation_matrix(d2) @ m.forward.coeffs @ commutation_matrix(d1)
    return as_cbmap(transpose(Channel(d1, d2, superop)), HEISENBERG).coeffs


def morphism_valid(m: ChuMorphism, a: ChuObject, b: ChuObject, config: OptimizerConfig | None = None,
                   max_level: int = 2) -> Verdict:
    _check_alignment(m, a, b)
    defect, (i, j) = adjointness_defect(m, a, b)
    if defect > ADJOINT_TOL:
        return Verdict("fails", defect, {"leftBasis": i, "rightBasis": j, "defect": defect},
                       "d2(f(x), y) != d1(x, g(y)) on a basis pair")
    expected = _expected_backward(m, a, b)
    if expected is not None:
        gap = float(np.max(np.abs(expected - m.backward.coeffs)))
        if gap > ADJOINT_TOL:
            idx = np.unravel_index(int(np.argmax(np.abs(expected - m.backward.coeffs))), expected.shape)
            return Verdict("fails", gap, {"entry": [int(idx[0]), int(idx[1])]}, "g differs from the transpose of f")
    cf = is_complete_contraction(m.forward, max_level, config)
    cg = is_complete_contraction(m.backward, max_level, config)
    for name, v in (("forward", cf), ("backward", cg)):
        if v.fails:
            return Verdict("fails", v.value, {"map": name, **v.witness}, f"{name} map is not a complete contraction")
    if cf.holds and cg.holds:
        return Verdict("holds", defect, {}, "adjoint pair of complete contractions")
    return Verdict("inconclusive", max(cf.value, cg.value), {}, "adjoint pair; contraction not certified")


# ---------------------------------------------------------------------------
# multiplicative and additive structure
# ---------------------------------------------------------------------------


def kron_reindex(d1: int, d2: int) -> np.ndarray:
    """Permutation sending tensor coordinates of ``M_d1 (x) M_d2`` to entries of the Kronecker product.

    ``x_ij (x) y_kl`` has tensor coordinate ``(i d1 + j) d2^2 + (k d2 + l)`` and lands
    at row ``i d2 + k``, column ``j d2 + l``.
    """
    d = d1 * d2
    perm = np.zeros((d * d, d * d))
    for i in range(d1):
        for j in range(d1):
            for k in range(d2):
                for l in range(d2):
                    src = (i * d1 + j) * d2 * d2 + (k * d2 + l)
                    perm[(i * d2 + k) * d + (j * d2 + l), src] = 1
    return perm


def _check_star_isomorphism(d1: int, d2: int, perm: np.ndarray, rng, samples: int) -> float:
    # a bijective *-homomorphism between matrix algebras is completely isometric
    worst = 0.0
    for _ in range(samples):
        x1, x2 = random_complex(rng, (d1, d1)), random_complex(rng, (d1, d1))
        y1, y2 = random_complex(rng, (d2, d2)), random_complex(rng, (d2, d2))

        def image(x, y):
            return (perm @ np.kron(x.reshape(-1), y.reshape(-1))).reshape(d1 * d2, d1 * d2)

        worst = max(worst,
                    operator_norm(image(x1, y1) @ image(x2, y2) - image(x1 @ x2, y1 @ y2)),
                    operator_norm(image(x1, y1).conj().T - image(x1.conj().T, y1.conj().T)))
    return worst


def tensor_hs(a: ChuObject, b: ChuObject, config: OptimizerConfig | None = None, samples: int = 2,
              check_norms: bool = True) -> ChuObject:
    if a.hs is None or b.hs is None or a.hs[0] != "T" or b.hs[0] != "T":
        raise ValueError("spatial tensor only realized for HS objects")
    d1, d2 = a.hs[1], b.hs[1]
    out = hs_object(d1 * d2)
    perm = kron_reindex(d1, d2)
    # both identifications use the same reindexing; the pairing must factor through it
    product = np.kron(a.pairing_matrix, b.pairing_matrix)
    pulled = perm.T @ out.pairing_matrix @ perm
    pairing_defect = float(np.max(np.abs(pulled - product)))
    rng = restart_rng((config or DEFAULT_CONFIG).seed, 77)
    star_defect = _check_star_isomorphism(d1, d2, perm, rng, max(samples, 1))
    trace_side = []
    if check_norms:
        for _ in range(samples):
            v = random_complex(rng, (d1 * d1 * d2 * d2,))
            est = projective_norm(a.left, b.left, v, config)
            target = trace_norm((perm @ v).reshape(d1 * d2, d1 * d2))
            trace_side.append({"lower": est.lower, "upper": est.upper, "traceNorm": target,
                               "contained": est.lower - 1e-6 <= target <= est.upper + 1e-6})
    out.meta["identification"] = {
        "reindex": "row i*d2+k, column j*d2+l",
        "pairingDefect": pairing_defect,
        "starDefect": star_defect,
        "traceSide": trace_side,
    }
    if pairing_defect > ADJOINT_TOL or star_defect > 1e-9:
        raise AssertionError("tensor identification failed verification")
    return out


def additive_sum(a: ChuObject, b: ChuObject, kind: str, verify_level: int = 1,
                 config: OptimizerConfig | None = None) -> ChuObject:
    if kind == "plus":
        left, right = direct_sum_1([a.left, b.left]), direct_sum_inf([a.right, b.right])
    elif kind == "with":
        left, right = direct_sum_inf([a.left, b.left]), direct_sum_1([a.right, b.right])
    else:
        raise ValueError("kind must be 'plus' or 'with'")
    mat = np.zeros((left.dim, right.dim), dtype=complex)
    mat[:a.left.dim, :a.right.dim] = a.pairing_matrix
    mat[a.left.dim:, a.right.dim:] = b.pairing_matrix
    obj = ChuObject(left, right, pairing_from_matrix(left, right, mat))
    if verify_level > 0:
        v = verify_jcc(obj, verify_level, config)
        obj.meta["jcc"] = v.to_json()
        if v.fails:
            raise AssertionError("summed pairing failed the jcc check")
    return obj


# ---------------------------------------------------------------------------
# polarized formulas
# ---------------------------------------------------------------------------

SYMBOLS = {"*": "⊗", "%": "⅋", "+": "⊕", "&": "&"}
POSITIVE_OPS = {"*", "+"}
ROWS = {
    "atom+": ("P", "T(H_P)"),
    "atom-": ("N", "B(H_N)"),
    "*": ("P ⊗ R", "T(H_P) ⊗^ T(H_R) ≅ T(H_P ⊗ H_R)"),
    "+": ("P ⊕ R", "T(H_P) ⊕¹ T(H_R)"),
    "%": ("N ⅋ M", "B(H_N) ⊗̄ B(H_M) ≅ B(H_N ⊗ H_M)"),
    "&": ("N & M", "B(H_N) ⊕^∞ B(H_M)"),
}


@dataclass
class Formula:
    op: str  # "atom", "~", or a connective
    args: tuple = ()
    name: str = ""
    dim: int = 0
    pos: int = 0

    def __str__(self):
        if self.op == "atom":
            return f"{self.name}:{self.dim}"
        if self.op == "~":
            return f"{self.args[0]}~"
        return f"({self.args[0]} {self.op} {self.args[1]})"


def atom_is_positive(name: str) -> bool:
    return name[0] not in "NM"


_TOKEN = re.compile(r"\s*(?:(?P<atom>[A-Za-z][A-Za-z0-9_]*)\s*:\s*(?P<dim>\d+)|(?P<sym>[*%+&~()]))")


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected input at position {pos}: {text[pos:pos + 8]!r}")
        start = m.start(m.lastgroup) if m.lastgroup else pos
        if m.group("atom"):
            out.append(("atom", m.group("atom"), int(m.group("dim")), start))
        else:
            out.append(("sym", m.group("sym"), 0, start))
        pos = m.end()
    return out


def parse_formula(text: str) -> Formula:
    """Additive connectives bind looser than multiplicative ones; ``~`` is postfix."""
    toks = _tokenize(text)
    i = 0

    def peek():
        return toks[i] if i < len(toks) else None

    def take():
        nonlocal i
        i += 1
        return toks[i - 1]

    def primary():
        t = peek()
        if t is None:
            raise ValueError(f"unexpected end of formula at position {len(text)}")
        if t[0] == "atom":
            take()
            if t[2] < 1:
                raise ValueError(f"dimension must be >= 1 at position {t[3]}")
            node = Formula("atom", name=t[1], dim=t[2], pos=t[3])
        elif t[1] == "(":
            take()
            node = additive()
            close = peek()
            if close is None or close[1] != ")":
                where = len(text) if close is None else close[3]
                raise ValueError(f"expected ')' at position {where}")
            take()
        else:
            raise ValueError(f"unexpected {t[1]!r} at position {t[3]}")
        while peek() is not None and peek()[1] == "~":
            node = Formula("~", (node,), pos=take()[3])
        return node

    def binary(sub, ops):
        node = sub()
        while peek() is not None and peek()[0] == "sym" and peek()[1] in ops:
            t = take()
            node = Formula(t[1], (node, sub()), pos=t[3])
        return node

    def multiplicative():
        return binary(primary, {"*", "%"})

    def additive():
        return binary(multiplicative, {"+", "&"})

    tree = additive()
    if peek() is not None:
        raise ValueError(f"unexpected {peek()[1]!r} at position {peek()[3]}")
    return tree


def polarity(f: Formula) -> bool:
    """True for positive; raises on ill-polarized input."""
    if f.op == "atom":
        return atom_is_positive(f.name)
    if f.op == "~":
        return not polarity(f.args[0])
    want = f.op in POSITIVE_OPS
    for side, arg in zip(("left", "right"), f.args):
        if polarity(arg) != want:
            need = "positive" if want else "negative"
            raise PolarityError(f"ill-polarized formula: {SYMBOLS[f.op]} at position {f.pos} "
                                f"needs {need} operands, {side} operand {arg} is not")
    return want


def interpret(f: Formula, config: OptimizerConfig | None = None) -> ChuObject:
    if f.op == "atom":
        obj = hs_object(f.dim)
        return obj if atom_is_positive(f.name) else dual(obj)
    if f.op == "~":
        return dual(interpret(f.args[0], config))
    a, b = (interpret(x, config) for x in f.args)
    if f.op == "*":
        return tensor_hs(a, b, config, check_norms=False)
    if f.op == "%":
        return dual(tensor_hs(dual(a), dual(b), config, check_norms=False))
    return additive_sum(a, b, "plus" if f.op == "+" else "with", config=config)


def table_row(f: Formula) -> dict:
    if f.op == "atom":
        key = "atom+" if atom_is_positive(f.name) else "atom-"
    elif f.op == "~":
        inner = table_row(f.args[0])
        return {"connective": "~", "formula": f"({inner['formula']})^⊥", "space": f"dual of {inner['space']}"}
    else:
        key = f.op
    formula, space = ROWS[key]
    return {"connective": key if f.op != "atom" else "atom", "formula": formula, "space": space}


def _subformulas(f: Formula):
    yield f
    for a in f.args:
        yield from _subformulas(a)


def polarity_report(text: str, config: OptimizerConfig | None = None) -> tuple[ChuObject, dict]:
    tree = parse_formula(text)
    positive = polarity(tree)
    obj = interpret(tree, config)
    rows = []
    for sub in _subformulas(tree):
        row = table_row(sub)
        if row not in rows:
            rows.append(row)
    report = {"formula": text, "parsed": str(tree), "polarity": "positive" if positive else "negative",
              "picture": "schrodinger" if positive else "heisenberg", "row": table_row(tree),
              "rows": rows, "object": obj.to_json()}
    return obj, report
