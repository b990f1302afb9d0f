"""Finitely supported elements of the free l1 space on a unit ball.

An element is a formal sum ``sum_i c_i delta_{x_i}`` of points ``x_i`` in the closed
unit ball of an operator space; its norm is ``sum |c_i|`` after merging
identical points.  Any function from one unit ball to another extends
linearly to these sums, which is how the three nonlinear primitives below
(adjoint, controlled, apply) become linear maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cbmaps import CBMap, cb_upper
from .hsduality import HEISENBERG, Channel, as_cbmap, from_kraus, transpose
from .numerics import as_cmatrix, complex_from_json, complex_to_json, operator_norm, vector_from_json, vector_to_json
from .opspace import ConcreteSpace, OperatorSpace, element, space_from_json

BALL_SLACK = 1e-9
ESCAPE_TOL = 1e-6


class OutsideBallError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def rectangular_space(rows: int, cols: int) -> ConcreteSpace:
    """``B(C^cols, C^rows)`` with row-major matrix-unit coordinates."""
    d = max(rows, cols)
    basis = np.zeros((rows * cols, d, d), dtype=complex)
    for a in range(rows):
        for b in range(cols):
            basis[a * cols + b, a, b] = 1
    space = ConcreteSpace(basis, d, label=f"B({cols},{rows})")
    space.shape = (rows, cols)
    return space


def level_one_norm(space: OperatorSpace, point) -> float:
    return space.norm(np.asarray(point, dtype=complex).reshape(1, 1, -1)).value


@dataclass(frozen=True)
class FreeL1Element:
    space: OperatorSpace
    support: tuple  # ((point tuple, coeff), ...) with distinct points

    @property
    def norm(self) -> float:
        return float(sum(abs(c) for _, c in self.support))

    def points(self):
        return [np.array(p, dtype=complex) for p, _ in self.support]

    def __add__(self, other: "FreeL1Element") -> "FreeL1Element":
        return combine([(1.0, self), (1.0, other)])

    def scale(self, s: complex) -> "FreeL1Element":
        return FreeL1Element(self.space, tuple((p, s * c) for p, c in self.support if s * c != 0))

    def to_json(self) -> dict:
        return {"space": self.space.to_json(),
                "support": [{"point": vector_to_json(p), "coeff": complex_to_json(c)} for p, c in self.support]}

    @classmethod
    def from_json(cls, obj: dict) -> "FreeL1Element":
        space = space_from_json(obj["space"])
        terms = [(promote(space, vector_from_json(t["point"])), complex_from_json(t["coeff"]))
                 for t in obj["support"]]
        return combine([(c, e) for e, c in terms]) if terms else FreeL1Element(space, ())


def _key(point) -> tuple:
    # exact coordinate equality decides whether two points coincide
    return tuple(complex(z) for z in np.asarray(point, dtype=complex).reshape(-1))


def promote(space: OperatorSpace, x) -> FreeL1Element:
    """``delta_x`` for a point of the closed unit ball."""
    v = np.asarray(x, dtype=complex).reshape(-1)
    if v.size != space.dim:
        raise ValueError(f"point has {v.size} coordinates, space has dimension {space.dim}")
    nrm = level_one_norm(space, v)
    if nrm > 1 + BALL_SLACK:
        raise OutsideBallError("outside unit ball", {"norm": nrm})
    return FreeL1Element(space, ((_key(v), 1.0 + 0j),))


def combine(terms) -> FreeL1Element:
    """``sum_i s_i e_i`` merging identical points."""
    terms = list(terms)
    space = terms[0][1].space
    acc: dict = {}
    for s, e in terms:
        for p, c in e.support:
            acc[p] = acc.get(p, 0) + s * c
    return FreeL1Element(space, tuple((p, c) for p, c in acc.items() if c != 0))


def linearize_ball_function(g: Callable, target: OperatorSpace) -> Callable[[FreeL1Element], np.ndarray]:
    """Extend ``g: Ball(X) -> Ball(Y)`` to ``sum c_i delta_x_i |-> sum c_i g(x_i)``.

    ``g`` takes and returns coordinate vectors; every evaluation is checked to
    stay in the target ball.
    """

    def apply(e: FreeL1Element) -> np.ndarray:
        out = np.zeros(target.dim, dtype=complex)
        for p, c in e.support:
            y = np.asarray(g(np.array(p, dtype=complex)), dtype=complex).reshape(-1)
            nrm = level_one_norm(target, y)
            if nrm > 1 + ESCAPE_TOL:
                raise OutsideBallError("function output escapes the unit ball",
                                       {"point": vector_to_json(p), "outputNorm": nrm})
            out += c * y
        return out

    return apply


# ---------------------------------------------------------------------------
# the three primitives on contractions
# ---------------------------------------------------------------------------

P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def u_adjoint(f) -> np.ndarray:
    return as_cmatrix(f).conj().T


def u_ctrl(f) -> np.ndarray:
    """``|0><0| (x) 1 + |1><1| (x) f`` on ``C^2 (x) H``."""
    f = as_cmatrix(f)
    if f.shape[0] != f.shape[1]:
        raise ValueError("controlled operator must be square")
    return np.kron(P0, np.eye(f.shape[0])) + np.kron(P1, f)


def u_apply(f) -> Channel:
    """The map ``t |-> f t f^dagger``."""
    return from_kraus([as_cmatrix(f)])


def apply_cb_bound(f) -> float:
    """Factorization bound on the cb norm of ``t |-> f t f^dagger`` between trace classes."""
    return cb_upper(as_cbmap(transpose(u_apply(f)), HEISENBERG))


def ctrl_norm_identity(f, h0, h1) -> tuple[float, float]:
    """Both sides of ``||U(f) k||^2 = ||h0||^2 + ||f h1||^2`` for ``k = |0> h0 + |1> h1``."""
    f = as_cmatrix(f)
    k = np.concatenate([np.asarray(h0, dtype=complex), np.asarray(h1, dtype=complex)])
    lhs = float(np.linalg.norm(u_ctrl(f) @ k) ** 2)
    rhs = float(np.linalg.norm(h0) ** 2 + np.linalg.norm(f @ np.asarray(h1, dtype=complex)) ** 2)
    return lhs, rhs


def _square_side(space: OperatorSpace) -> int:
    rows, cols = getattr(space, "shape", (None, None))
    if rows is None:
        k = int(round(math.sqrt(space.dim)))
        rows = cols = k
    return rows, cols


def adjoint_l(e: FreeL1Element) -> np.ndarray:
    rows, cols = _square_side(e.space)
    target = rectangular_space(cols, rows)

    def g(p):
        return u_adjoint(p.reshape(rows, cols)).reshape(-1)

    return linearize_ball_function(g, target)(e).reshape(cols, rows)


def ctrl_l(e: FreeL1Element) -> np.ndarray:
    rows, cols = _square_side(e.space)
    if rows != cols:
        raise ValueError("controlled operator must be square")
    target = rectangular_space(2 * rows, 2 * rows)

    def g(p):
        return u_ctrl(p.reshape(rows, cols)).reshape(-1)

    return linearize_ball_function(g, target)(e).reshape(2 * rows, 2 * rows)


def apply_l(e: FreeL1Element) -> Channel:
    """Linear combination of the channels ``t |-> f t f^dagger``; each summand is checked."""
    rows, cols = _square_side(e.space)
    total = np.zeros((rows * rows, cols * cols), dtype=complex)
    for p, c in e.support:
        f = np.array(p, dtype=complex).reshape(rows, cols)
        bound = apply_cb_bound(f)
        if bound > 1 + ESCAPE_TOL:
            raise OutsideBallError("apply output escapes the unit ball", {"cbBound": bound})
        total += c * u_apply(f).superop
    return Channel(cols, rows, total)


def matrix_ball_point(f) -> tuple[ConcreteSpace, np.ndarray]:
    """The space ``B(C^cols, C^rows)`` for ``f`` and its coordinates."""
    f = as_cmatrix(f)
    return rectangular_space(*f.shape), f.reshape(-1)


def promote_matrix(f) -> FreeL1Element:
    space, coords = matrix_ball_point(f)
    if operator_norm(f) > 1 + BALL_SLACK:
        raise OutsideBallError("outside unit ball", {"norm": operator_norm(f)})
    return promote(space, coords)
