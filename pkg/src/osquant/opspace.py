"""Finite-dimensional operator spaces as families of matrix norms.

An element of ``M_n(X)`` is stored as a complex array of shape ``(n, n, dim)``:
entry ``[i, j]`` holds the coordinates of ``x_ij`` over the space's basis.

Every space can describe two convex sets by multilinear parametrizations
(:class:`BallParam`): its own unit ball at level ``n`` and the unit ball of
``M_n(X*)`` in dual coordinates (``phi(x) = sum_c phi_c x_c``).  Either may be
``None`` when no parametrization is known.  The norm of ``x`` in ``M_n(X)`` is
the sup of ``||[phi_kl(x_ij)]||`` over that dual ball (the matrix level ``n``
suffices), which is what the default :meth:`OperatorSpace.norm` maximizes.
Spaces whose norms are exact SVD computations override it.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .numerics import (
    NormEstimate,
    OptimizerConfig,
    cmatrix_from_json,
    cmatrix_to_json,
    maximize_multilinear_norm,
    operator_norm,
    restart_rng,
    random_contraction,
    trace_norm,
)

DEFAULT_CONFIG = OptimizerConfig()
RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# element helpers
# ---------------------------------------------------------------------------


def element(coords, dim: int | None = None) -> np.ndarray:
    x = np.asarray(coords, dtype=complex)
    if x.ndim == 1:
        x = x.reshape(1, 1, -1)
    if x.ndim != 3 or x.shape[0] != x.shape[1]:
        raise ValueError(f"element matrix must have shape (n, n, dim), got {x.shape}")
    if dim is not None and x.shape[2] != dim:
        raise ValueError(f"element has {x.shape[2]} coordinates, space has dimension {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("element has non-finite coordinates")
    return x


def direct_sum(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    m, n, d = x.shape[0], y.shape[0], x.shape[2]
    out = np.zeros((m + n, m + n, d), dtype=complex)
    out[:m, :m] = x
    out[m:, m:] = y
    return out


def sandwich(alpha: np.ndarray, x: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``alpha x beta`` for scalar matrices alpha (p x n), beta (n x q)."""
    return np.einsum("ik,...klc,lj->...ijc", alpha, x, beta)


def pad_square(x: np.ndarray) -> np.ndarray:
    """Embed a rectangular element matrix (p, q, dim) into a square one with zeros."""
    p, q = x.shape[:2]
    k = max(p, q)
    out = np.zeros((k, k, x.shape[2]), dtype=complex)
    out[:p, :q] = x
    return out


# ---------------------------------------------------------------------------
# multilinear parametrizations
# ---------------------------------------------------------------------------


@dataclass
class BallParam:
    """A set of elements given as a multilinear image of contraction blocks.

    ``element(blocks)`` returns coordinates of shape ``(..., n, n, dim)`` and
    must broadcast over a leading batch axis on any single block.  The image
    is the unit ball itself or a subset whose closed absolutely convex hull
    is the ball, which is all the sup computations need.
    """

    n: int
    dim: int
    shapes: list
    element: Callable[[list], np.ndarray]
    seeds: list = field(default_factory=list)

    @property
    def nblocks(self) -> int:
        return len(self.shapes)


def mapped_ball(param: BallParam | None, matrix: np.ndarray) -> BallParam | None:
    """Push a parametrization through a coordinate map ``c -> matrix @ c``."""
    if param is None:
        return None
    mat = np.asarray(matrix, dtype=complex)
    return BallParam(
        param.n,
        mat.shape[0],
        list(param.shapes),
        lambda blocks: np.einsum("dc,...c->...d", mat, param.element(blocks)),
        list(param.seeds),
    )


def product_ball(params: Sequence[BallParam]) -> BallParam:
    """Cartesian product: coordinates concatenate (the l-infinity ball)."""
    n = params[0].n
    offsets = np.cumsum([0] + [len(p.shapes) for p in params])

    def elem(blocks):
        parts = [p.element(blocks[offsets[i]: offsets[i + 1]]) for i, p in enumerate(params)]
        batch = np.broadcast_shapes(*[q.shape[:-3] for q in parts])
        parts = [np.broadcast_to(q, batch + q.shape[-3:]) for q in parts]
        return np.concatenate(parts, axis=-1)

    seeds = []
    if all(p.seeds for p in params):
        for combo in itertools.islice(itertools.product(*[p.seeds for p in params]), 4):
            seeds.append([b for s in combo for b in s])
    return BallParam(n, sum(p.dim for p in params), [s for p in params for s in p.shapes], elem, seeds)


def factorized_ball(params: Sequence[BallParam], n: int) -> BallParam:
    """``(alpha_l x_l beta_l)_l`` with ``[alpha_1 .. alpha_L]`` and ``[beta_1; ..; beta_L]`` contractions.

    With one inner factor per component this parametrizes the unit ball of the
    l1 operator-space sum (its absolutely matrix-convex hull of the union).
    """
    ks = [p.n for p in params]
    total = sum(ks)
    inner = [len(p.shapes) for p in params]
    offsets = np.cumsum([2] + inner)

    def elem(blocks):
        alpha, beta = blocks[0], blocks[1]
        parts, pos = [], 0
        for i, p in enumerate(params):
            x = p.element(blocks[offsets[i]: offsets[i + 1]])
            a = alpha[..., :, pos: pos + ks[i]]
            b = beta[..., pos: pos + ks[i], :]
            parts.append(np.einsum("...ik,...klc,...lj->...ijc", a, x, b))
            pos += ks[i]
        batch = np.broadcast_shapes(*[q.shape[:-3] for q in parts])
        parts = [np.broadcast_to(q, batch + q.shape[-3:]) for q in parts]
        return np.concatenate(parts, axis=-1)

    shapes = [(n, total), (total, n)] + [s for p in params for s in p.shapes]
    return BallParam(n, sum(p.dim for p in params), shapes, elem)


def diagonal_ball(param1: BallParam, n: int, terms: int) -> BallParam:
    """``alpha diag(x_1, .., x_N) beta`` with level-1 ball elements ``x_t``.

    This is the unit ball of ``M_n`` of the maximal operator space structure.
    """
    k = len(param1.shapes)

    def elem(blocks):
        alpha, beta = blocks[0], blocks[1]
        xs = [param1.element(blocks[2 + t * k: 2 + (t + 1) * k])[..., 0, 0, :] for t in range(terms)]
        batch = np.broadcast_shapes(alpha.shape[:-2], beta.shape[:-2], *[x.shape[:-1] for x in xs])
        xs = np.stack([np.broadcast_to(x, batch + x.shape[-1:]) for x in xs], axis=-2)
        return np.einsum("...it,...tj,...tc->...ijc", alpha, beta, xs)

    shapes = [(n, terms), (terms, n)] + list(param1.shapes) * terms
    return BallParam(n, param1.dim, shapes, elem)


@dataclass
class Normer:
    """``||y||_n = sup over blocks of operator_norm(matrix(y, blocks))``."""

    shapes: list
    matrix: Callable[[np.ndarray, list], np.ndarray]
    seeds: list = field(default_factory=list)


def pairing_normer(dual: BallParam) -> Normer:
    n = dual.n

    def matrix(y, blocks):
        f = dual.element(blocks)
        m = y.shape[-2]
        out = np.einsum("...klc,...ijc->...ikjl", f, y)
        return out.reshape(out.shape[:-4] + (m * n, m * n))

    return Normer(list(dual.shapes), matrix, list(dual.seeds))


def _fill_seeds(seeds_a, shapes_b, seeds_b, config):
    """Combine seeds for two block groups; missing ones get a fixed random contraction."""
    if not seeds_a and not seeds_b:
        return []
    rng = restart_rng(config.seed, 2**20)
    filler_b = [random_contraction(rng, s) for s in shapes_b]
    out = []
    for sa in seeds_a or [None]:
        for sb in seeds_b or [filler_b]:
            if sa is None:
                continue
            out.append(list(sa) + list(sb))
    return out


def sup_over(normers: Sequence[Normer], y_of_blocks, y_shapes, y_seeds, config) -> tuple[float, dict]:
    """Maximize ``||matrix(y(blocks_y), blocks_n)||`` over all blocks, all normers."""
    best_val, best_w = 0.0, {}
    for idx, nm in enumerate(normers):
        ny = len(y_shapes)

        def build(blocks, nm=nm):
            return nm.matrix(y_of_blocks(blocks[:ny]), blocks[ny:])

        seeds = _fill_seeds(y_seeds, nm.shapes, nm.seeds, config)
        res = maximize_multilinear_norm(build, list(y_shapes) + list(nm.shapes), config, seeds)
        if res.value > best_val or idx == 0:
            best_val = res.value
            best_w = {"normer": idx, "blocks": [cmatrix_to_json(b) for b in res.blocks],
                      "converged": res.converged}
    return best_val, best_w


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


class OperatorSpace:
    """Base class: a coordinate space with matrix norms at every level."""

    kind = "abstract"
    exact = False

    def __init__(self, dim: int):
        self.dim = int(dim)

    # parametrized sets -------------------------------------------------
    def ball(self, n: int) -> BallParam | None:
        return None

    def dual_ball(self, n: int) -> BallParam | None:
        return None

    def normers(self, n: int) -> list[Normer]:
        d = self.dual_ball(n)
        return [] if d is None else [pairing_normer(d)]

    # norms --------------------------------------------------------------
    def upper_bound(self, x: np.ndarray) -> float:
        return math.inf

    def norm(self, x, config: OptimizerConfig | None = None) -> NormEstimate:
        x = element(x, self.dim)
        config = config or DEFAULT_CONFIG
        if self.dim == 0 or not np.any(x):
            return NormEstimate.exact_value(0.0)
        normers = self.normers(x.shape[0])
        if not normers:
            raise NotImplementedError(f"{self.kind} space has no norm oracle at level {x.shape[0]}")
        val, w = sup_over(normers, lambda _b: x, [], [], config)
        up = self.upper_bound(x)
        exact = all(not nm.shapes for nm in normers)
        if exact:
            up = val
        return NormEstimate(val, max(up, val), w, bool(w.get("converged", True)), exact)

    def norm_value(self, x, config: OptimizerConfig | None = None) -> float:
        return self.norm(x, config).value

    def zero(self, n: int = 1) -> np.ndarray:
        return np.zeros((n, n, self.dim), dtype=complex)

    def random_element(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return rng.standard_normal((n, n, self.dim)) + 1j * rng.standard_normal((n, n, self.dim))

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class ConcreteSpace(OperatorSpace):
    """Subspace of ``B(C^d)`` spanned by ``basis``; norms are operator norms."""

    kind = "concrete"
    exact = True

    def __init__(self, basis, ambient_dim: int | None = None, label: str = ""):
        b = np.asarray(basis, dtype=complex)
        if b.size == 0:
            d = int(ambient_dim or 0)
            b = np.zeros((0, d, d), dtype=complex)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError("basis must be a list of square matrices of equal size")
        super().__init__(b.shape[0])
        self.basis = b
        self.ambient_dim = b.shape[1]
        self.label = label
        if self.dim:
            flat = b.reshape(self.dim, -1)
            gram = flat.conj() @ flat.T
            if np.linalg.eigvalsh(gram)[0] <= 1e-10:
                raise ValueError("basis is not linearly independent")
        self._pattern = self._unit_pattern()

    def _unit_pattern(self):
        # a basis of matrix units filling a full rows x cols block admits an exact ball
        pos = []
        for m in self.basis:
            nz = np.argwhere(np.abs(m) > 0)
            if len(nz) != 1 or m[tuple(nz[0])] != 1:
                return None
            pos.append(tuple(nz[0]))
        rows = sorted({p[0] for p in pos})
        cols = sorted({p[1] for p in pos})
        if len(pos) != len(rows) * len(cols) or len(set(pos)) != len(pos):
            return None
        index = np.zeros((len(rows), len(cols)), dtype=int)
        for c, (r, k) in enumerate(pos):
            index[rows.index(r), cols.index(k)] = c
        return rows, cols, index

    def assemble(self, x: np.ndarray) -> np.ndarray:
        n, d = x.shape[-2], self.ambient_dim
        a = np.einsum("...ijc,cab->...iajb", x, self.basis)
        return a.reshape(x.shape[:-3] + (x.shape[-3] * d, n * d))

    def normers(self, n):
        return [Normer([], lambda y, _b: self.assemble(y))]

    def norm(self, x, config=None) -> NormEstimate:
        x = element(x, self.dim)
        if self.dim == 0:
            return NormEstimate.exact_value(0.0)
        return NormEstimate.exact_value(operator_norm(self.assemble(x)))

    def ball(self, n):
        if self._pattern is None or self.dim == 0:
            return None
        rows, cols, index = self._pattern
        r, c = len(rows), len(cols)
        inv = np.argsort(index.reshape(-1))

        def elem(blocks):
            b = blocks[0]
            b = b.reshape(b.shape[:-2] + (n, r, n, c))
            b = np.moveaxis(b, -2, -3)  # (..., n, n, r, c)
            flat = b.reshape(b.shape[:-2] + (r * c,))
            return flat[..., inv]

        seeds = [[np.eye(n * r, n * c, dtype=complex)]]
        if r == c:
            swap = np.zeros((n, r, n, c), dtype=complex)
            for i in range(min(n, c)):
                for a in range(min(r, n)):
                    swap[i, a, a, i] = 1
            seeds.append([swap.reshape(n * r, n * c)])
        return BallParam(n, self.dim, [(n * r, n * c)], elem, seeds)

    def dual_ball(self, n):
        if self.dim == 0:
            return None
        d = self.ambient_dim
        basis = self.basis

        def elem(blocks):
            p, q = blocks
            return np.einsum("...ai,cab,...bj->...ijc", p, basis, q)

        eye = np.eye(d, n, dtype=complex)
        return BallParam(n, self.dim, [(d, n), (d, n)], elem, [[eye, eye]])

    def coords_of(self, a) -> np.ndarray:
        """Coordinates of an ambient matrix lying in the span (least squares)."""
        flat = self.basis.reshape(self.dim, -1).T
        sol, *_ = np.linalg.lstsq(flat, np.asarray(a, dtype=complex).reshape(-1), rcond=None)
        return sol

    def to_json(self):
        short = getattr(self, "short_json", None)
        if short is not None:
            return dict(short)
        return {"kind": "concrete", "ambientDim": self.ambient_dim,
                "basis": [cmatrix_to_json(m) for m in self.basis], "label": self.label}


def matrix_units(k: int) -> np.ndarray:
    out = np.zeros((k * k, k, k), dtype=complex)
    for c in range(k * k):
        out[c, c // k, c % k] = 1
    return out


def matrix_space(k: int) -> ConcreteSpace:
    """``M_k`` with basis ``e_ij`` in row-major order."""
    if k < 0:
        raise ValueError("k must be >= 0")
    space = ConcreteSpace(matrix_units(k), k, label=f"M_{k}")
    space.short_json = {"kind": "matrix", "k": k}
    return space


def scalars() -> ConcreteSpace:
    return matrix_space(1)


def column_hilbert(d: int) -> ConcreteSpace:
    """Column Hilbert space of dimension d inside ``B(C^(d+1))``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    basis = np.zeros((d, d + 1, d + 1), dtype=complex)
    for i in range(d):
        basis[i, i + 1, 0] = 1
    space = ConcreteSpace(basis, d + 1, label=f"H_c({d})")
    space.short_json = {"kind": "columnHilbert", "d": d}
    return space


def transpose_permutation(k: int) -> np.ndarray:
    """Coordinate permutation sending ``e_ab`` to ``e_ba`` (row-major units)."""
    perm = np.zeros((k * k, k * k))
    for a in range(k):
        for b in range(k):
            perm[b * k + a, a * k + b] = 1
    return perm


class DualSpace(OperatorSpace):
    """Operator dual of ``base``: ``M_n(X*) = CB(X, M_n)``.

    Coordinates ``f`` act by ``f(x) = f @ pairing @ x``.
    """

    kind = "dual"

    def __init__(self, base: OperatorSpace, pairing=None, label: str = ""):
        super().__init__(base.dim)
        self.base = base
        self.pairing = np.eye(base.dim) if pairing is None else np.asarray(pairing, dtype=complex)
        self._to_dual_coords = np.linalg.inv(self.pairing).T
        self.label = label

    def functional_coords(self, f: np.ndarray) -> np.ndarray:
        """Convert to plain dual coordinates ``phi`` with ``phi(x) = sum phi_c x_c``."""
        return np.einsum("...c,cd->...d", f, self.pairing)

    def ball(self, n):
        return mapped_ball(self.base.dual_ball(n), self._to_dual_coords)

    def dual_ball(self, n):
        return mapped_ball(self.base.ball(n), self.pairing)

    def normers(self, n):
        b = self.dual_ball(n)
        return [] if b is None else [pairing_normer(b)]

    def upper_bound(self, f):
        if not isinstance(self.base, ConcreteSpace):
            return math.inf
        return cb_upper_from_functionals(self.base, self.functional_coords(f))

    def pair(self, f, x) -> complex:
        return complex(np.asarray(f).reshape(-1) @ self.pairing @ np.asarray(x).reshape(-1))

    def to_json(self):
        return {"kind": "dual", "base": self.base.to_json(), "label": self.label}


class TraceClassSpace(DualSpace):
    """``T_k``: coordinates are the matrix entries of ``t``; pairing ``tr(t b)``."""

    kind = "traceClass"

    def __init__(self, k: int):
        self.k = k
        super().__init__(matrix_space(k), transpose_permutation(k), label=f"T_{k}")

    def norm(self, x, config=None):
        x = element(x, self.dim)
        if x.shape[0] == 1 and self.k:
            v = trace_norm(x[0, 0].reshape(self.k, self.k))
            return NormEstimate.exact_value(v, note="level 1 = trace norm")
        return super().norm(x, config)

    def matrix(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=complex).reshape(self.k, self.k)

    def to_json(self):
        return {"kind": "traceClass", "k": self.k}


def trace_class(k: int) -> TraceClassSpace:
    if k < 1:
        raise ValueError("k must be >= 1")
    return TraceClassSpace(k)


# ---------------------------------------------------------------------------
# Haagerup-type upper bound for maps into M_n
# ---------------------------------------------------------------------------


def kraus_like(phi_units: np.ndarray):
    """Split a map ``M_d -> M_n`` given by ``phi_units[a, b] = Phi(e_ab)`` as ``sum_t A_t a B_t``."""
    d = phi_units.shape[0]
    n_out, n_in = phi_units.shape[2], phi_units.shape[3]
    # C[(i, a), (b, j)] = Phi(e_ab)_ij
    c = np.einsum("abij->iabj", phi_units).reshape(n_out * d, d * n_in)
    u, s, vh = np.linalg.svd(c)
    keep = s > RANK_TOL * max(s[0], 1e-300) if s.size else s > 0
    r = int(np.sum(keep))
    a_t = (u[:, :r] * np.sqrt(s[:r])).T.reshape(r, n_out, d)
    b_t = (vh[:r].T * np.sqrt(s[:r])).T.reshape(r, d, n_in)
    return a_t, b_t


def _mixed_cost(a_t, b_t, low):
    """Cost of the factorization with terms remixed by ``low`` (and its inverse on the right)."""
    a2 = np.einsum("sia,st->tia", a_t, low)
    b2 = np.einsum("ts,sai->tai", np.linalg.inv(low), b_t)
    ra = np.concatenate(list(a2), axis=1)  # [A_1 .. A_r]
    rb = np.concatenate(list(b2), axis=0)  # [B_1; ..; B_r]
    return operator_norm(ra) * operator_norm(rb), a2, b2


def haagerup_factorization(a_t: np.ndarray, b_t: np.ndarray, optimize: bool = True):
    """Best ``||[A_1..A_r]|| ||[B_1;..;B_r]||`` over remixings ``A G``, ``G^-1 B``.

    The optimal Gram matrix ``P = G G*`` solves a small semidefinite program;
    the returned value is re-evaluated exactly on the remixed factors, so it is
    a genuine factorization bound whatever the solver accuracy.
    """
    r = a_t.shape[0]
    if r == 0:
        return 0.0, a_t, b_t
    best = _mixed_cost(a_t, b_t, np.eye(r))
    if not optimize or r == 1:
        return best
    import cvxpy as cp

    k_a, k_b = a_t.shape[2], b_t.shape[1]
    ra = np.concatenate(list(a_t), axis=1)
    rb = np.concatenate(list(b_t), axis=0)
    scale_a, scale_b = max(operator_norm(ra), 1e-300), max(operator_norm(rb), 1e-300)
    ra, rb = ra / scale_a, rb / scale_b
    p = cp.Variable((r, r), hermitian=True)
    t = cp.Variable()
    lhs = ra @ cp.kron(p, np.eye(k_a)) @ ra.conj().T
    m = rb.shape[1]
    big = cp.bmat([[t * np.eye(m), rb.conj().T], [rb, cp.kron(p, np.eye(k_b))]])
    cons = [(lhs + lhs.H) / 2 << np.eye(ra.shape[0]), (big + big.H) / 2 >> 0, p >> 0]
    try:
        with warnings.catch_warnings():
            # inaccurate solves are fine: the bound is re-evaluated exactly below
            warnings.simplefilter("ignore")
            cp.Problem(cp.Minimize(t), cons).solve(solver=cp.CLARABEL)
    except (cp.error.SolverError, ValueError):
        return best
    if p.value is None:
        return best
    pv = (p.value + p.value.conj().T) / 2
    w, v = np.linalg.eigh(pv)
    if w[-1] <= 0:
        return best
    w = np.maximum(w, w[-1] * 1e-13)
    low = v * np.sqrt(w)
    try:
        cand = _mixed_cost(a_t, b_t, low)
    except np.linalg.LinAlgError:
        return best
    return cand if cand[0] < best[0] else best


def haagerup_bound(a_t: np.ndarray, b_t: np.ndarray, optimize: bool = True) -> float:
    """Upper bound on the cb norm of ``a |-> sum_t A_t a B_t``."""
    return haagerup_factorization(a_t, b_t, optimize)[0]


def cb_upper_from_functionals(base: ConcreteSpace, phi: np.ndarray) -> float:
    """Upper bound on ``||phi||_{M_n(X*)}`` for concrete ``X`` via an extension to ``M_d``."""
    n, d = phi.shape[0], base.ambient_dim
    if not np.any(phi):
        return 0.0
    flat = base.basis.reshape(base.dim, -1).T
    pinv = np.linalg.pinv(flat)  # coords of the orthogonal projection onto the span
    # Phi(e_ab)_ij = sum_c phi_ijc coords_c(e_ab)
    units = pinv.T.reshape(d, d, base.dim)
    phi_units = np.einsum("abc,ijc->abij", units, phi)
    a_t, b_t = kraus_like(phi_units)
    return haagerup_bound(a_t, b_t)


# ---------------------------------------------------------------------------
# sums, subspaces, quotients
# ---------------------------------------------------------------------------


class ZeroSpace(OperatorSpace):
    kind = "zero"
    exact = True

    def __init__(self):
        super().__init__(0)

    def norm(self, x, config=None):
        return NormEstimate.exact_value(0.0)

    def to_json(self):
        return {"kind": "zero"}


class _Sum(OperatorSpace):
    def __init__(self, spaces: Sequence[OperatorSpace]):
        self.spaces = list(spaces)
        super().__init__(sum(s.dim for s in self.spaces))
        self.offsets = np.cumsum([0] + [s.dim for s in self.spaces])

    def component(self, x: np.ndarray, k: int) -> np.ndarray:
        return x[..., self.offsets[k]: self.offsets[k + 1]]

    def inclusion(self, k: int) -> np.ndarray:
        m = np.zeros((self.dim, self.spaces[k].dim))
        m[self.offsets[k]: self.offsets[k + 1]] = np.eye(self.spaces[k].dim)
        return m

    def projection(self, k: int) -> np.ndarray:
        return self.inclusion(k).T


class SumInfSpace(_Sum):
    """l-infinity direct sum: ``M_n(X + Y) = M_n(X) (+)_inf M_n(Y)``."""

    kind = "sumInf"

    def __init__(self, spaces):
        super().__init__(spaces)
        self.exact = all(s.exact for s in self.spaces)

    def norm(self, x, config=None):
        x = element(x, self.dim)
        if not self.spaces:
            return NormEstimate.exact_value(0.0)
        ests = [s.norm(self.component(x, k), config) for k, s in enumerate(self.spaces)]
        k = int(np.argmax([e.lower for e in ests]))
        return NormEstimate(
            max(e.lower for e in ests), max(e.upper for e in ests),
            {"component": k, "inner": ests[k].witness},
            all(e.converged for e in ests), all(e.exact for e in ests),
        )

    def normers(self, n):
        out = []
        for k, s in enumerate(self.spaces):
            for nm in s.normers(n):
                out.append(Normer(nm.shapes,
                                  lambda y, b, nm=nm, k=k: nm.matrix(self.component(y, k), b),
                                  nm.seeds))
        return out

    def ball(self, n):
        parts = [s.ball(n) for s in self.spaces]
        return None if not parts or any(p is None for p in parts) else product_ball(parts)

    def dual_ball(self, n):
        parts = [s.dual_ball(n) for s in self.spaces]
        return None if not parts or any(p is None for p in parts) else factorized_ball(parts, n)

    def to_json(self):
        return {"kind": "sumInf", "spaces": [s.to_json() for s in self.spaces]}


class Sum1Space(_Sum):
    """l1 direct sum, normed at higher levels as the predual of the l-infinity sum of duals."""

    kind = "sum1"

    def norm(self, x, config=None):
        x = element(x, self.dim)
        if not self.spaces or not np.any(x):
            return NormEstimate.exact_value(0.0)
        ests = [s.norm(self.component(x, k), config) for k, s in enumerate(self.spaces)]
        upper = sum(e.upper for e in ests)
        if x.shape[0] == 1:
            return NormEstimate(sum(e.lower for e in ests), upper, {"components": len(ests)},
                                all(e.converged for e in ests), all(e.exact for e in ests))
        est = super().norm(x, config)
        return NormEstimate(est.lower, max(upper, est.lower), est.witness, est.converged)

    def ball(self, n):
        parts = [s.ball(n) for s in self.spaces]
        return None if not parts or any(p is None for p in parts) else factorized_ball(parts, n)

    def dual_ball(self, n):
        parts = [s.dual_ball(n) for s in self.spaces]
        return None if not parts or any(p is None for p in parts) else product_ball(parts)

    def to_json(self):
        return {"kind": "sum1", "spaces": [s.to_json() for s in self.spaces]}


def direct_sum_inf(spaces: Sequence[OperatorSpace]) -> OperatorSpace:
    return SumInfSpace(spaces) if spaces else ZeroSpace()


def direct_sum_1(spaces: Sequence[OperatorSpace]) -> OperatorSpace:
    return Sum1Space(spaces) if spaces else ZeroSpace()


def _orthonormal_columns(vectors: np.ndarray, tol: float = RANK_TOL):
    v = np.asarray(vectors, dtype=complex)
    if v.size == 0:
        return v.reshape(v.shape[0] if v.ndim == 2 else 0, 0)
    u, s, _ = np.linalg.svd(v, full_matrices=True)
    r = int(np.sum(s > tol * max(s[0], 1e-300))) if s.size and s[0] > 0 else 0
    return u[:, :r], u[:, r:]


class SubspaceSpace(OperatorSpace):
    """Subspace of ``parent`` spanned by the columns of ``embedding`` with inherited norms."""

    kind = "subspace"

    def __init__(self, parent: OperatorSpace, embedding):
        emb = np.asarray(embedding, dtype=complex).reshape(parent.dim, -1)
        super().__init__(emb.shape[1])
        self.parent = parent
        self.embedding = emb
        self.exact = parent.exact

    def embed(self, x):
        return np.einsum("dc,...c->...d", self.embedding, x)

    def norm(self, x, config=None):
        x = element(x, self.dim)
        if self.dim == 0:
            return NormEstimate.exact_value(0.0)
        return self.parent.norm(self.embed(x), config)

    def normers(self, n):
        return [Normer(nm.shapes, lambda y, b, nm=nm: nm.matrix(self.embed(y), b), nm.seeds)
                for nm in self.parent.normers(n)]

    def dual_ball(self, n):
        # restrictions of completely contractive functionals fill the dual ball
        return mapped_ball(self.parent.dual_ball(n), self.embedding.T)

    def to_json(self):
        return {"kind": "subspace", "parent": self.parent.to_json(),
                "embedding": cmatrix_to_json(self.embedding)}


class QuotientSpace(OperatorSpace):
    """``X / N`` with ``M_n(X/N) = M_n(X) / M_n(N)``.

    Coordinates are taken over an orthonormal complement of ``N`` inside the
    coordinate space of ``X``; :meth:`lift` gives the canonical representative.
    """

    kind = "quotient"

    def __init__(self, parent: OperatorSpace, kernel):
        ker = np.asarray(kernel, dtype=complex).reshape(-1, parent.dim) if np.size(kernel) else \
            np.zeros((0, parent.dim), dtype=complex)
        self.parent = parent
        if ker.shape[0]:
            span, comp = _orthonormal_columns(ker.T)
        else:
            span, comp = np.zeros((parent.dim, 0), dtype=complex), np.eye(parent.dim, dtype=complex)
        self.kernel = span
        self.complement = comp
        super().__init__(comp.shape[1])

    def lift(self, z):
        return np.einsum("dc,...c->...d", self.complement, z)

    def quotient_map(self) -> np.ndarray:
        return self.complement.conj().T

    def ball(self, n):
        return mapped_ball(self.parent.ball(n), self.quotient_map())

    def norm(self, z, config=None):
        z = element(z, self.dim)
        if self.dim == 0 or not np.any(z):
            return NormEstimate.exact_value(0.0)
        x = self.lift(z)
        if self.kernel.shape[1] == 0:
            return self.parent.norm(x, config)
        if isinstance(self.parent, ConcreteSpace):
            return _concrete_quotient_norm(self.parent, self.kernel, x)
        return _generic_quotient_norm(self.parent, self.kernel, x, config or DEFAULT_CONFIG)

    def to_json(self):
        return {"kind": "quotient", "parent": self.parent.to_json(),
                "kernel": cmatrix_to_json(self.kernel.T) if self.kernel.size else None}


def _concrete_quotient_norm(parent: ConcreteSpace, kernel: np.ndarray, x: np.ndarray) -> NormEstimate:
    """Distance from ``x`` to ``M_n(N)``: primal point for the upper bound, dual witness for the lower."""
    import cvxpy as cp

    n = x.shape[0]
    a0 = parent.assemble(x)
    size = a0.shape[0]
    gens = []
    for i in range(n):
        for j in range(n):
            for t in range(kernel.shape[1]):
                e = np.zeros((n, n, parent.dim), dtype=complex)
                e[i, j] = kernel[:, t]
                gens.append(parent.assemble(e))
    gens = np.array(gens)
    flat = gens.reshape(len(gens), -1).T  # (size^2, g)

    y = cp.Variable(len(gens), complex=True)
    t = cp.Variable()
    a = a0 + cp.reshape(flat @ y, (size, size), order="C")
    eye = np.eye(size)
    big = cp.bmat([[t * eye, a], [cp.conj(a).T, t * eye]])
    con = [(big + cp.conj(big).T) / 2 >> 0]
    prob = cp.Problem(cp.Minimize(t), con)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            prob.solve(solver=cp.SCS, eps=1e-9)
    yv = np.asarray(y.value).reshape(-1) if y.value is not None else np.zeros(len(gens))
    upper = operator_norm(a0 + (flat @ yv).reshape(size, size))
    lower = _quotient_dual_lower(a0, flat, size)
    lower = float(min(lower, upper))
    return NormEstimate(lower, float(upper), {"representative": cmatrix_to_json(a0)}, True,
                        bool(upper - lower <= 1e-9), note="primal/dual witnesses")


def _quotient_dual_lower(a0: np.ndarray, flat: np.ndarray, size: int) -> float:
    """``sup |<z, a0>|`` over trace-norm contractions ``z`` annihilating the kernel blocks."""
    import cvxpy as cp

    z = cp.Variable((size, size), complex=True)
    p = cp.Variable((size, size), hermitian=True)
    q = cp.Variable((size, size), hermitian=True)
    zv = cp.reshape(z, (size * size,), order="C")
    cons = [cp.bmat([[p, z], [z.H, q]]) >> 0, cp.real(cp.trace(p) + cp.trace(q)) <= 2]
    if flat.shape[1]:
        cons.append(flat.conj().T @ zv == 0)
    prob = cp.Problem(cp.Maximize(cp.real(cp.sum(cp.multiply(np.conj(a0), z)))), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            return 0.0
    if z.value is None:
        return 0.0
    # exact annihilation and exact trace norm turn the solver output into a certificate
    zf = np.asarray(z.value).reshape(-1)
    if flat.shape[1]:
        basis, _ = np.linalg.qr(flat)
        zf = zf - basis @ (basis.conj().T @ zf)
    zm = zf.reshape(size, size)
    tn = trace_norm(zm)
    return abs(np.vdot(zm, a0)) / tn if tn > 0 else 0.0


def _generic_quotient_norm(parent, kernel, x, config) -> NormEstimate:
    n, k = x.shape[0], kernel.shape[1]

    def shifted(v):
        y = (v[: n * n * k] + 1j * v[n * n * k:]).reshape(n, n, k)
        return x + np.einsum("dt,ijt->ijd", kernel, y)

    def obj(v):
        return parent.norm(shifted(v), config).value

    res = scipy.optimize.minimize(obj, np.zeros(2 * n * n * k), method="Powell",
                                  options={"maxiter": 2000, "xtol": 1e-8, "ftol": 1e-12})
    best = parent.norm(shifted(res.x), config)
    return NormEstimate(0.0, best.upper if math.isfinite(best.upper) else best.value,
                        {"representative_shift": list(map(float, res.x))}, bool(res.success),
                        note="upper from searched representative")


def quotient_space(parent: OperatorSpace, kernel) -> OperatorSpace:
    ker = np.asarray(kernel, dtype=complex)
    if ker.size and ker.reshape(-1, parent.dim).shape[1] != parent.dim:
        raise ValueError("kernel vectors must live in the parent coordinate space")
    q = QuotientSpace(parent, ker)
    return ZeroSpace() if q.dim == 0 else q


# ---------------------------------------------------------------------------
# quantizations
# ---------------------------------------------------------------------------


class MinSpace(OperatorSpace):
    """Smallest operator space structure on a normed space.

    ``dual_ball1`` parametrizes the unit ball of the dual normed space at level 1.
    """

    kind = "min"

    def __init__(self, dim: int, base_norm: Callable[[np.ndarray], float], dual_ball1: BallParam,
                 ball1: BallParam | None = None, label: str = ""):
        super().__init__(dim)
        self.base_norm = base_norm
        self.dual_ball1 = dual_ball1
        self.ball1 = ball1
        self.label = label
        _check_norm(self)

    def normers(self, n):
        d1 = self.dual_ball1

        def matrix(y, blocks):
            f = d1.element(blocks)[..., 0, 0, :]
            return np.einsum("...c,...ijc->...ij", f, y)

        return [Normer(list(d1.shapes), matrix, list(d1.seeds))]

    def upper_bound(self, x):
        # |phi(x_ij)| <= ||x_ij|| entrywise, and the operator norm is monotone on moduli
        return operator_norm(np.array([[self.base_norm(x[i, j]) for j in range(x.shape[1])]
                                       for i in range(x.shape[0])]))

    def norm(self, x, config=None):
        x = element(x, self.dim)
        if x.shape[0] == 1:
            return NormEstimate.exact_value(self.base_norm(x[0, 0]))
        return super().norm(x, config)

    def ball(self, n):
        return None

    def dual_ball(self, n):
        return diagonal_ball(self.dual_ball1, n, n * n)

    def to_json(self):
        out = {"kind": "min", "dim": self.dim, "label": self.label}
        if getattr(self, "source", None) is not None:
            out["base"] = self.source.to_json()
        return out


class MaxSpace(OperatorSpace):
    """Largest operator space structure on a normed space.

    Upper bounds come from explicit factorizations ``x = alpha diag(x_t) beta``
    with ``||x_t|| <= 1``.  Lower bounds evaluate ``||(id (x) T)(x)||`` for maps
    ``T`` normalized by their (estimated) Banach norm; the identity and, for
    square matrix coordinates, the transpose are always among them.
    """

    kind = "max"

    def __init__(self, dim: int, base_norm: Callable[[np.ndarray], float], ball1: BallParam,
                 dual_ball1: BallParam | None = None, label: str = ""):
        super().__init__(dim)
        self.base_norm = base_norm
        self.ball1 = ball1
        self.dual_ball1 = dual_ball1
        self.label = label
        _check_norm(self)

    def ball(self, n):
        return diagonal_ball(self.ball1, n, n * n)

    def banach_norm_of_map(self, t: np.ndarray, config) -> float:
        """``sup ||t(g)||`` over the level-1 ball, for ``t`` of shape (p, q, dim)."""
        b1 = self.ball1

        def build(blocks):
            g = b1.element(blocks)[..., 0, 0, :]
            return np.einsum("pqc,...c->...pq", t, g)

        return maximize_multilinear_norm(build, b1.shapes, config, b1.seeds).value

    def _candidate_maps(self, config):
        k = int(round(math.sqrt(self.dim)))
        maps = [("identity", None)]
        if k * k == self.dim:
            maps.append(("transpose", transpose_permutation(k)))
        rng = restart_rng(config.seed, 2**21)
        for r in range(config.restarts):
            maps.append((f"random{r}", rng.standard_normal((self.dim, self.dim))
                         + 1j * rng.standard_normal((self.dim, self.dim))))
        return maps

    def norm(self, x, config=None):
        x = element(x, self.dim)
        config = config or DEFAULT_CONFIG
        if not np.any(x):
            return NormEstimate.exact_value(0.0)
        if x.shape[0] == 1:
            return NormEstimate.exact_value(self.base_norm(x[0, 0]))
        upper, fact = self.factorization_upper(x)
        lower, which = 0.0, None
        k = int(round(math.sqrt(self.dim)))
        for name, perm in self._candidate_maps(config):
            y = x if perm is None else np.einsum("dc,ijc->ijd", perm, x)
            # the map sends coordinates to a k x k matrix when possible, else a row
            if k * k == self.dim:
                t = (np.eye(self.dim) if perm is None else perm).reshape(self.dim, k, k)
                t = np.moveaxis(t, 0, -1)
                yk = y.reshape(y.shape[:2] + (k, k))
                mat = np.einsum("ijab->iajb", yk).reshape(x.shape[0] * k, x.shape[0] * k)
            else:
                t = (np.eye(self.dim) if perm is None else perm).reshape(self.dim, 1, self.dim)
                t = np.moveaxis(t, 0, -1)
                mat = np.einsum("ijc->icj", y).reshape(x.shape[0], x.shape[0] * self.dim)
            bn = self.banach_norm_of_map(t, config)
            if bn <= 0:
                continue
            val = operator_norm(mat) / bn
            if val > lower:
                lower, which = val, name
        lower = min(lower, upper)
        return NormEstimate(lower, upper, {"map": which, "factorization": fact}, True,
                            note="lower bound normalizes by an estimated Banach norm")

    def factorization_upper(self, x: np.ndarray):
        """Weighted factorization through ``diag(x_ij / ||x_ij||)``."""
        n = x.shape[0]
        s = np.array([[self.base_norm(x[i, j]) for j in range(n)] for i in range(n)])
        mask = s > 0

        def cost(logw):
            w = np.exp(logw.reshape(n, n))
            a = np.where(mask, w ** 2, 0.0)
            b = np.where(mask, s ** 2 / np.where(mask, w ** 2, 1.0), 0.0)
            return math.sqrt(a.sum(axis=1).max() * b.sum(axis=0).max())

        x0 = np.log(np.sqrt(np.where(mask, s, 1.0))).reshape(-1)
        best = cost(x0)
        res = scipy.optimize.minimize(cost, x0, method="Powell",
                                      options={"maxiter": 4000, "xtol": 1e-10, "ftol": 1e-14})
        return min(best, cost(res.x)), {"weights": "optimized", "terms": int(mask.sum())}

    def to_json(self):
        out = {"kind": "max", "dim": self.dim, "label": self.label}
        if getattr(self, "source", None) is not None:
            out["base"] = self.source.to_json()
        return out


def _check_norm(space):
    # a degenerate base norm vanishes on some nonzero coordinate vector
    for c in range(space.dim):
        e = np.zeros(space.dim, dtype=complex)
        e[c] = 1
        if not space.base_norm(e) > 0:
            raise ValueError("not a norm")


def min_quant(base_norm, dual_ball1: BallParam, dim: int | None = None, ball1=None, label="") -> MinSpace:
    return MinSpace(dual_ball1.dim if dim is None else dim, base_norm, dual_ball1, ball1, label)


def max_quant(base_norm, ball1: BallParam, dim: int | None = None, dual_ball1=None, label="") -> MaxSpace:
    return MaxSpace(ball1.dim if dim is None else dim, base_norm, ball1, dual_ball1, label)


def level_one_norm(space: OperatorSpace) -> Callable[[np.ndarray], float]:
    return lambda v: space.norm(np.asarray(v, dtype=complex).reshape(1, 1, -1)).value


def min_of(space: OperatorSpace) -> MinSpace:
    """``MIN`` of the normed space underlying ``space``."""
    out = MinSpace(space.dim, level_one_norm(space), space.dual_ball(1), space.ball(1),
                   label=f"MIN({getattr(space, 'label', space.kind)})")
    out.source = space
    return out


def max_of(space: OperatorSpace) -> MaxSpace:
    """``MAX`` of the normed space underlying ``space``."""
    out = MaxSpace(space.dim, level_one_norm(space), space.ball(1), space.dual_ball(1),
                   label=f"MAX({getattr(space, 'label', space.kind)})")
    out.source = space
    return out


# ---------------------------------------------------------------------------
# equalizers and coequalizers (maps only need ``domain``, ``codomain``, ``coeffs``)
# ---------------------------------------------------------------------------


def null_space(a: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return np.eye(a.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(a)
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return vh[r:].conj().T


def equalizer(f, g) -> OperatorSpace:
    """``{x : f(x) = g(x)}`` as a subspace of the common domain."""
    if f.coeffs.shape != g.coeffs.shape:
        raise ValueError("maps must share domain and codomain")
    basis = null_space(f.coeffs - g.coeffs)
    if basis.shape[1] == 0:
        return ZeroSpace()
    if basis.shape[1] == f.domain.dim:
        return f.domain
    return SubspaceSpace(f.domain, basis)


def coequalizer(f, g) -> OperatorSpace:
    """Codomain modulo the image of ``f - g``."""
    if f.coeffs.shape != g.coeffs.shape:
        raise ValueError("maps must share domain and codomain")
    diff = f.coeffs - g.coeffs
    if not np.any(np.abs(diff) > 0):
        return f.codomain
    span, _ = _orthonormal_columns(diff)
    return quotient_space(f.codomain, span.T)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def element_to_json(x) -> dict:
    x = element(x)
    return {"level": int(x.shape[0]),
            "coords": [[[[float(f"{z.real:.17g}"), float(f"{z.imag:.17g}")] for z in x[i, j]]
                        for j in range(x.shape[1])] for i in range(x.shape[0])]}


def element_from_json(obj: dict, dim: int | None = None) -> np.ndarray:
    try:
        n, coords = int(obj["level"]), obj["coords"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"element needs level and coords: {exc}") from None
    arr = np.array(coords, dtype=float)
    if arr.ndim != 4 or arr.shape[:2] != (n, n) or arr.shape[3] != 2:
        raise ValueError(f"coords must be an n x n array of [re, im] vectors, got shape {arr.shape}")
    return element(arr[..., 0] + 1j * arr[..., 1], dim)


def space_from_json(obj: dict) -> OperatorSpace:
    kind = obj.get("kind")
    if kind == "matrix":
        return matrix_space(int(obj["k"]))
    if kind == "traceClass":
        return trace_class(int(obj["k"]))
    if kind == "columnHilbert":
        return column_hilbert(int(obj["d"]))
    if kind == "zero":
        return ZeroSpace()
    if kind == "concrete":
        basis = [cmatrix_from_json(m) for m in obj["basis"]]
        return ConcreteSpace(np.array(basis) if basis else [], obj.get("ambientDim"), obj.get("label", ""))
    if kind == "dual":
        return DualSpace(space_from_json(obj["base"]))
    if kind == "sumInf":
        return direct_sum_inf([space_from_json(s) for s in obj["spaces"]])
    if kind == "sum1":
        return direct_sum_1([space_from_json(s) for s in obj["spaces"]])
    if kind == "subspace":
        return SubspaceSpace(space_from_json(obj["parent"]), cmatrix_from_json(obj["embedding"]))
    if kind == "quotient":
        ker = obj.get("kernel")
        parent = space_from_json(obj["parent"])
        return quotient_space(parent, cmatrix_from_json(ker) if ker else np.zeros((0, parent.dim)))
    if kind in ("min", "max"):
        base = space_from_json(obj["base"])
        return min_of(base) if kind == "min" else max_of(base)
    raise ValueError(f"unknown space kind {kind!r}")


# ---------------------------------------------------------------------------
# axiom sweep
# ---------------------------------------------------------------------------


@dataclass
class AxiomReport:
    space: str
    samples: int
    m1_defect: float  # worst excess of a certified bound over the other side
    m2_defect: float
    witness: dict

    @property
    def holds(self) -> bool:
        return self.m1_defect <= AXIOM_TOL and self.m2_defect <= AXIOM_TOL

    def to_json(self) -> dict:
        return {"space": self.space, "samples": self.samples, "m1Defect": self.m1_defect,
                "m2Defect": self.m2_defect, "holds": self.holds, "witness": self.witness}


AXIOM_TOL = 1e-6


def check_axioms(space: OperatorSpace, samples: int = 50, max_level: int = 3,
                 config: OptimizerConfig | None = None, seed: int = 0) -> AxiomReport:
    """Look for contradictions between norm intervals and the two matrix-norm axioms.

    A defect is positive only when certified bounds violate the axiom: for the
    direct sum, ``lower(x+y) > max(upper)`` or ``upper(x+y) < max(lower)``; for the
    sandwich, ``lower(a x b) > ||a|| upper(x) ||b||``.  Both are relative to the
    larger side.
    """
    if max_level < 2:
        raise ValueError("max_level must be >= 2 to form direct sums")
    config = config or DEFAULT_CONFIG
    rng = np.random.default_rng(seed)
    m1 = m2 = 0.0
    wit: dict = {}
    for s in range(samples):
        n = int(rng.integers(1, max_level))
        m = int(rng.integers(1, max_level - n + 1))
        x, y = space.random_element(rng, n), space.random_element(rng, m)
        ex, ey, es = space.norm(x, config), space.norm(y, config), space.norm(direct_sum(x, y), config)
        hi = max(ex.upper, ey.upper)
        lo = max(ex.lower, ey.lower)
        scale = max(lo, 1e-300)
        d1 = max(es.lower - hi, lo - es.upper) / scale
        if d1 > m1:
            m1, wit = d1, {"axiom": "M1", "sample": s, "levels": [n, m]}
        k = int(rng.integers(1, max_level + 1))
        alpha = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
        beta = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        bound = operator_norm(alpha) * ex.upper * operator_norm(beta)
        ez = space.norm(sandwich(alpha, x, beta), config)
        d2 = (ez.lower - bound) / max(bound, 1e-300) if math.isfinite(bound) else 0.0
        if d2 > m2:
            m2, wit = d2, {"axiom": "M2", "sample": s, "levels": [n, k]}
    label = getattr(space, "label", "") or space.kind
    return AxiomReport(label, samples, float(max(m1, 0.0)), float(max(m2, 0.0)), wit)
