"""Projective and Haagerup tensor norms and bounded bilinear maps.

Tensor coordinates over ``X (x) Y`` use the Kronecker order: coordinate
``cx * Y.dim + cy`` multiplies ``e_cx (x) f_cy``.  At level ``n`` an element is an
array of shape ``(n, n, X.dim * Y.dim)``.  The tensor of two element matrices
``x`` (level p) and ``y`` (level q) has entry ``x_ij (x) y_kl`` at row ``(i, k)``
and column ``(j, l)``, i.e. row ``i * q + k`` and column ``j * q + l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cbmaps import CBMap, Verdict, cb_norm_lower, cb_upper
from .numerics import (
    NormEstimate,
    OptimizerConfig,
    cmatrix_to_json,
    maximize_multilinear_norm,
    operator_norm,
    restart_rng,
    trace_norm,
)
from .opspace import (
    DEFAULT_CONFIG,
    BallParam,
    ConcreteSpace,
    Normer,
    OperatorSpace,
    TraceClassSpace,
    _fill_seeds,
    element,
    element_to_json,
    haagerup_factorization,
    matrix_space,
    pad_square,
    trace_class,
)

# ---------------------------------------------------------------------------
# elementary operations on tensor coordinates
# ---------------------------------------------------------------------------


def tensor_elements(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``x (x) y`` with rows ``(i, k)`` and columns ``(j, l)``."""
    p, q = x.shape[-3], y.shape[-3]
    t = np.einsum("...ija,...klb->...ikjlab", x, y)
    return t.reshape(t.shape[:-6] + (p * q, p * q, x.shape[-1] * y.shape[-1]))


def odot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-times-column tensor ``[sum_t x_it (x) y_tj]`` for x (n, r, a), y (r, n, b)."""
    t = np.einsum("...ita,...tjb->...ijab", x, y)
    return t.reshape(t.shape[:-2] + (x.shape[-1] * y.shape[-1],))


def split_coords(v: np.ndarray, dx: int, dy: int) -> np.ndarray:
    return v.reshape(v.shape[:-1] + (dx, dy))


def _rect_norm(space: OperatorSpace, x: np.ndarray, config) -> NormEstimate:
    return space.norm(pad_square(x), config)


def _upper_of(space: OperatorSpace, x: np.ndarray, config) -> float:
    est = _rect_norm(space, x, config)
    return est.upper if math.isfinite(est.upper) else math.inf


# ---------------------------------------------------------------------------
# frames: element matrices holding every basis vector once
# ---------------------------------------------------------------------------


def frames(space: OperatorSpace) -> list[tuple[str, np.ndarray]]:
    """Candidate placements of the basis into one element matrix."""
    m = space.dim
    out = []
    col = np.zeros((m, m, m), dtype=complex)
    row = np.zeros((m, m, m), dtype=complex)
    diag = np.zeros((m, m, m), dtype=complex)
    for c in range(m):
        col[c, 0, c] = 1
        row[0, c, c] = 1
        diag[c, c, c] = 1
    out += [("column", col), ("row", row), ("diagonal", diag)]
    k = int(round(math.sqrt(m)))
    if k * k == m and k > 1:
        same = np.zeros((k, k, m), dtype=complex)
        swapped = np.zeros((k, k, m), dtype=complex)
        for a in range(k):
            for b in range(k):
                same[a, b, a * k + b] = 1
                swapped[b, a, a * k + b] = 1
        out += [("units", same), ("transposed-units", swapped)]
    return out


def _placement(frame: np.ndarray) -> list[tuple[int, int]]:
    pos = []
    for c in range(frame.shape[2]):
        nz = np.argwhere(np.abs(frame[:, :, c]) > 0)
        pos.append(tuple(nz[0]))
    return pos


def _frame_terms(v: np.ndarray, fx: np.ndarray, fy: np.ndarray, dx: int, dy: int):
    """Split ``v = sum_t alpha_t (fx (x) fy) beta_t`` by an SVD of the rearranged coefficients."""
    n = v.shape[0]
    p, q = fx.shape[0], fy.shape[0]
    px, py = _placement(fx), _placement(fy)
    vv = split_coords(v, dx, dy)
    big = np.zeros((n, p, q, p, q, n), dtype=complex)  # (a, i, k), (j, l, b)
    for cx, (i, j) in enumerate(px):
        for cy, (k, l) in enumerate(py):
            big[:, i, k, j, l, :] = vv[:, :, cx, cy]
    mat = big.reshape(n * p * q, p * q * n)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    keep = s > 1e-13 * max(s[0], 1e-300) if s.size else s > 0
    r = int(np.sum(keep))
    if r == 0:
        return np.zeros((0, n, p * q)), np.zeros((0, p * q, n))
    a_t = (u[:, :r] * np.sqrt(s[:r])).T.reshape(r, n, p * q)
    b_t = (vh[:r].T * np.sqrt(s[:r])).T.reshape(r, p * q, n)
    return a_t, b_t


def _kron_split(v: np.ndarray, dx: int, dy: int, p: int, q: int):
    """``v = sum_t sigma_t x_t (x) y_t`` with x_t level p and y_t level q (n = p q)."""
    vv = split_coords(v, dx, dy).reshape(p, q, p, q, dx, dy)  # (i,k),(j,l)
    mat = np.einsum("ikjlab->ijaklb", vv).reshape(p * p * dx, q * q * dy)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    terms = []
    for t in range(len(s)):
        if s[t] <= 1e-13 * s[0]:
            break
        terms.append((s[t], u[:, t].reshape(p, p, dx), vh[t].reshape(q, q, dy)))
    return terms


# ---------------------------------------------------------------------------
# projective norm
# ---------------------------------------------------------------------------


@dataclass
class Factorization:
    value: float
    kind: str
    data: dict = field(default_factory=dict)


def _projective_upper(x_space, y_space, v, config):
    n = v.shape[0]
    dx, dy = x_space.dim, y_space.dim
    cands: list[Factorization] = []
    for p in range(1, n + 1):
        if n % p:
            continue
        q = n // p
        terms = _kron_split(v, dx, dy, p, q)
        total = 0.0
        for s, xt, yt in terms:
            total += s * x_space.norm(xt, config).upper * y_space.norm(yt, config).upper
        cands.append(Factorization(total, "kronecker", {"p": p, "q": q, "terms": len(terms)}))
    fx_list = [(name, f, x_space.norm(f, config).upper) for name, f in frames(x_space)]
    fy_list = [(name, f, y_space.norm(f, config).upper) for name, f in frames(y_space)]
    fx_list = [t for t in fx_list if math.isfinite(t[2])]
    fy_list = [t for t in fy_list if math.isfinite(t[2])]
    # rank frames by a cheap proxy so only the promising pairs reach the SDP
    scored = []
    for nx, fx, ux in fx_list:
        for ny, fy, uy in fy_list:
            a_t, b_t = _frame_terms(v, fx, fy, dx, dy)
            proxy = ux * uy * sum(np.linalg.norm(a) * np.linalg.norm(b) for a, b in zip(a_t, b_t))
            scored.append((proxy, nx, fx, ux, ny, fy, uy, a_t, b_t))
    scored.sort(key=lambda t: t[0])
    for proxy, nx, fx, ux, ny, fy, uy, a_t, b_t in scored[:2]:
        val, a2, b2 = haagerup_factorization(a_t, b_t)
        cands.append(Factorization(ux * uy * val, "frame",
                                   {"frames": [nx, ny], "alpha": a2, "beta": b2, "fx": fx, "fy": fy}))
    return min(cands, key=lambda f: f.value) if cands else Factorization(math.inf, "none")


def _min_type_normers(x_space, y_space, p: int, q: int) -> list[Normer]:
    """``v |-> [(phi (x) psi)(v_ab)]`` for phi, psi in dual unit balls (jointly contractive)."""
    bx, by = x_space.dual_ball(p), y_space.dual_ball(q)
    if bx is None or by is None:
        return []
    dx, dy = x_space.dim, y_space.dim
    nx = bx.nblocks

    def matrix(v, blocks):
        f = bx.element(blocks[:nx])
        g = by.element(blocks[nx:])
        vv = split_coords(v, dx, dy)
        out = np.einsum("...ija,...klb,...xyab->...xikyjl", f, g, vv)
        sh = out.shape
        return out.reshape(sh[:-6] + (sh[-6] * p * q, sh[-3] * p * q))

    seeds = []
    if bx.seeds and by.seeds:
        seeds = [list(bx.seeds[0]) + list(by.seeds[0])]
    return [Normer(list(bx.shapes) + list(by.shapes), matrix, seeds)]


def _kronecker_matrix(x_space: ConcreteSpace, y_space: ConcreteSpace, v: np.ndarray) -> np.ndarray:
    """Assemble ``v`` through ``e_a (x) f_b |-> B_a (x) B'_b``."""
    n = v.shape[-3]
    vv = split_coords(v, x_space.dim, y_space.dim)
    blocks = np.einsum("...ijab,apq,brs->...iprjqs", vv, x_space.basis, y_space.basis)
    d = x_space.ambient_dim * y_space.ambient_dim
    return blocks.reshape(blocks.shape[:-6] + (n * d, n * d))


def _trace_class_image(x_space: TraceClassSpace, y_space: TraceClassSpace, v: np.ndarray) -> np.ndarray:
    """``s (x) t |-> kron(s, t)`` into ``T_(kl)`` coordinates."""
    k, l = x_space.k, y_space.k
    vv = split_coords(v, x_space.dim, y_space.dim).reshape(v.shape[:-1] + (k, k, l, l))
    out = np.einsum("...acbd->...abcd", vv)
    return out.reshape(v.shape[:-1] + (k * l * k * l,))


def _twisted_products(x_space: ConcreteSpace, y_space: ConcreteSpace):
    """``(x (x) 1) W (1 (x) y)`` for contractions W: multiplicatively contractive test maps."""
    d1, d2 = x_space.ambient_dim, y_space.ambient_dim
    size = d1 * d2
    xb = np.einsum("apq,rs->aprqs", x_space.basis, np.eye(d2)).reshape(x_space.dim, size, size)
    yb = np.einsum("pq,brs->bprqs", np.eye(d1), y_space.basis).reshape(y_space.dim, size, size)

    def images(w):
        # images[..., a, b] = X_a W Y_b
        return np.einsum("apq,...qr,brs->...abps", xb, w, yb)

    seeds = [np.eye(size, dtype=complex)]
    if d1 == d2:
        swap = np.zeros((d1, d2, d1, d2))
        for i in range(d1):
            for j in range(d2):
                swap[i, j, j, i] = 1
        seeds.append(swap.reshape(size, size).astype(complex))
    return size, images, seeds


def projective_norm(x_space: OperatorSpace, y_space: OperatorSpace, v, config: OptimizerConfig | None = None
                    ) -> NormEstimate:
    """Interval for ``||v||`` in ``M_n(X (x)^ Y)``."""
    config = config or DEFAULT_CONFIG
    v = element(v, x_space.dim * y_space.dim)
    if not np.any(v):
        return NormEstimate.exact_value(0.0)
    up = _projective_upper(x_space, y_space, v, config)
    lower, which = _projective_lower(x_space, y_space, v, config)
    lower = min(lower, up.value)
    w = {"testMap": which, "factorization": {"kind": up.kind,
                                             **{k: val for k, val in up.data.items()
                                                if k in ("p", "q", "terms", "frames")}}}
    return NormEstimate(lower, up.value, w, True, bool(up.value - lower <= 1e-9 * max(1.0, up.value)))


def _projective_lower(x_space, y_space, v, config):
    n = v.shape[0]
    best, which = 0.0, None
    if isinstance(x_space, ConcreteSpace) and isinstance(y_space, ConcreteSpace):
        val = operator_norm(_kronecker_matrix(x_space, y_space, v))
        best, which = val, "kronecker"
        size, images, seeds = _twisted_products(x_space, y_space)
        vv = split_coords(v, x_space.dim, y_space.dim)

        def build(blocks):
            im = images(blocks[0])
            out = np.einsum("ijab,...abps->...ipjs", vv, im)
            sh = out.shape
            return out.reshape(sh[:-4] + (n * size, n * size))

        res = maximize_multilinear_norm(build, [(size, size)], config, [[s] for s in seeds])
        if res.value > best:
            best, which = res.value, "twisted-product"
    if isinstance(x_space, TraceClassSpace) and isinstance(y_space, TraceClassSpace):
        target = trace_class(x_space.k * y_space.k)
        img = _trace_class_image(x_space, y_space, v)
        val = target.norm(img, config).lower
        if val > best:
            best, which = val, "trace-class-identification"
    for p, q in ((1, 1), (n, n)):
        for nm in _min_type_normers(x_space, y_space, p, q):
            res = maximize_multilinear_norm(lambda b, nm=nm: nm.matrix(v, b), nm.shapes, config, nm.seeds)
            if res.value > best:
                best, which = res.value, f"dual-ball-pair-{p}x{q}"
    return best, which


# ---------------------------------------------------------------------------
# Haagerup norm
# ---------------------------------------------------------------------------


def _require_concrete(*spaces):
    for s in spaces:
        if not isinstance(s, ConcreteSpace):
            raise ValueError("exact norms required")


def _odot_blocks(xh: np.ndarray, yh: np.ndarray, x_space: ConcreteSpace, y_space: ConcreteSpace):
    """Express ``x (.) y`` as remixable terms: column blocks of x, row blocks of y."""
    r = xh.shape[1]
    ax = np.einsum("itc,cab->iatb", xh, x_space.basis)
    n, dx = xh.shape[0], x_space.ambient_dim
    ax = ax.reshape(n * dx, r, dx)
    a_t = np.moveaxis(ax, 1, 0)  # (r, n dx, dx)
    by = np.einsum("tjc,cab->tajb", yh, y_space.basis)
    dy = y_space.ambient_dim
    b_t = by.reshape(r, dy, n * dy)
    return a_t, b_t


def haagerup_upper(x_space, y_space, z, config=None, projective: Factorization | None = None) -> Factorization:
    _require_concrete(x_space, y_space)
    n, dx, dy = z.shape[0], x_space.dim, y_space.dim
    zz = split_coords(z, dx, dy)
    mat = np.einsum("ijab->iajb", zz).reshape(n * dx, n * dy)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    r = int(np.sum(s > 1e-13 * max(s[0], 1e-300))) if s.size else 0
    cands = []
    if r:
        xh = (u[:, :r] * np.sqrt(s[:r])).reshape(n, dx, r).transpose(0, 2, 1)
        yh = (vh[:r].T * np.sqrt(s[:r])).T.reshape(r, n, dy)
        a_t, b_t = _odot_blocks(xh, yh, x_space, y_space)
        val, _, _ = haagerup_factorization(a_t, b_t)
        cands.append(Factorization(val, "svd", {"r": r}))
    if projective is not None and projective.kind == "frame":
        val = _converted_frame(x_space, y_space, projective)
        cands.append(Factorization(val, "from-projective", {}))
    elif projective is not None and projective.kind == "kronecker":
        # x (x) y = (x (x) 1)(.)(1 (x) y) gives the same termwise bound
        cands.append(Factorization(projective.value, "from-projective", {}))
    return min(cands, key=lambda f: f.value) if cands else Factorization(0.0, "zero")


def _converted_frame(x_space, y_space, fac: Factorization) -> float:
    """``alpha (x (x) y) beta = (alpha (x (x) 1)) (.) ((1 (x) y) beta)`` evaluated exactly."""
    a_t, b_t, fx, fy = fac.data["alpha"], fac.data["beta"], fac.data["fx"], fac.data["fy"]
    p, q = fx.shape[0], fy.shape[0]
    r, n = a_t.shape[0], a_t.shape[1]
    al = a_t.reshape(r, n, p, q)
    be = b_t.reshape(r, p, q, n)
    xh = np.einsum("taik,ijc->atjkc", al, fx).reshape(n, r * p * q, x_space.dim)
    yh = np.einsum("klc,tjlb->tjkbc", fy, be).reshape(r * p * q, n, y_space.dim)
    nx = operator_norm(x_space.assemble(pad_square(xh)))
    ny = operator_norm(y_space.assemble(pad_square(yh)))
    return nx * ny


def haagerup_norm(x_space: OperatorSpace, y_space: OperatorSpace, z, config: OptimizerConfig | None = None,
                  projective: Factorization | None = None) -> NormEstimate:
    _require_concrete(x_space, y_space)
    config = config or DEFAULT_CONFIG
    z = element(z, x_space.dim * y_space.dim)
    if not np.any(z):
        return NormEstimate.exact_value(0.0)
    if projective is None:
        projective = _projective_upper(x_space, y_space, z, config)
    up = haagerup_upper(x_space, y_space, z, config, projective)
    n = z.shape[0]
    best, which = operator_norm(_kronecker_matrix(x_space, y_space, z)), "kronecker"
    size, images, seeds = _twisted_products(x_space, y_space)
    zz = split_coords(z, x_space.dim, y_space.dim)

    def build(blocks):
        out = np.einsum("ijab,...abps->...ipjs", zz, images(blocks[0]))
        sh = out.shape
        return out.reshape(sh[:-4] + (n * size, n * size))

    res = maximize_multilinear_norm(build, [(size, size)], config, [[s] for s in seeds])
    if res.value > best:
        best, which = res.value, "twisted-product"
    best = min(best, up.value)
    return NormEstimate(best, up.value, {"testMap": which, "factorization": up.kind}, True,
                        bool(up.value - best <= 1e-9 * max(1.0, up.value)))


def projective_and_haagerup(x_space, y_space, v, config=None) -> tuple[NormEstimate, NormEstimate]:
    """Both norms, sharing the projective factorization so that h-upper <= projective-upper."""
    config = config or DEFAULT_CONFIG
    v = element(v, x_space.dim * y_space.dim)
    fac = _projective_upper(x_space, y_space, v, config)
    proj = projective_norm(x_space, y_space, v, config)
    if fac.value < proj.upper:
        proj = NormEstimate(proj.lower, fac.value, proj.witness, proj.converged, proj.exact)
    return proj, haagerup_norm(x_space, y_space, v, config, fac)


# ---------------------------------------------------------------------------
# bilinear maps
# ---------------------------------------------------------------------------


class BilinearMap:
    """``u(x, y) = coeffs @ kron(x, y)`` on coordinates."""

    def __init__(self, left: OperatorSpace, right: OperatorSpace, target: OperatorSpace, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.size == 0:
            c = np.zeros((target.dim, left.dim * right.dim), dtype=complex)
        if c.shape != (target.dim, left.dim * right.dim):
            raise ValueError(f"coeffs must be {target.dim} x {left.dim * right.dim}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs have non-finite entries")
        self.left, self.right, self.target, self.coeffs = left, right, target, c

    def __call__(self, x, y) -> np.ndarray:
        return self.coeffs @ np.kron(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))

    def jointly(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``[u(x_ij, y_kl)]_{(i,k),(j,l)}``."""
        return np.einsum("dc,...c->...d", self.coeffs, tensor_elements(x, y))

    def row_column(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``u_(n)(x, y) = [sum_k u(x_ik, y_kj)]``."""
        return np.einsum("dc,...c->...d", self.coeffs, odot(x, y))

    def to_json(self) -> dict:
        return {"left": self.left.to_json(), "right": self.right.to_json(),
                "target": self.target.to_json(), "coeffs": cmatrix_to_json(self.coeffs)}


def multiplication_map(k: int) -> BilinearMap:
    m = matrix_space(k)
    coeffs = np.zeros((k * k, k ** 4), dtype=complex)
    for a in range(k):
        for b in range(k):
            for c in range(k):
                coeffs[a * k + c, (a * k + b) * k * k + (b * k + c)] = 1
    return BilinearMap(m, m, m, coeffs)


def scalar_multiplication() -> BilinearMap:
    c = matrix_space(1)
    return BilinearMap(c, c, c, [[1.0]])


def _bilinear_sup(u: BilinearMap, n: int, m: int, mode: str, config, seeds=()) -> tuple[float, dict]:
    bx, by = u.left.ball(n), u.right.ball(m)
    if bx is None or by is None:
        raise NotImplementedError("bilinear norms need unit-ball parametrizations of both factors")
    level = n * m if mode == "joint" else n
    normers = u.target.normers(level)
    nx, ny = bx.nblocks, by.nblocks
    best, wit = -1.0, {}
    for nm in normers:
        def build(blocks, nm=nm):
            x = bx.element(blocks[:nx])
            y = by.element(blocks[nx:nx + ny])
            w = u.jointly(x, y) if mode == "joint" else u.row_column(x, y)
            return nm.matrix(w, blocks[nx + ny:])

        base = []
        for sx in bx.seeds or [None]:
            for sy in by.seeds or [None]:
                if sx is not None and sy is not None:
                    base.append(list(sx) + list(sy))
        all_seeds = _fill_seeds(base, nm.shapes, nm.seeds, config)
        res = maximize_multilinear_norm(build, list(bx.shapes) + list(by.shapes) + list(nm.shapes),
                                        config, all_seeds)
        if res.value > best:
            x = bx.element(res.blocks[:nx])
            y = by.element(res.blocks[nx:nx + ny])
            best, wit = res.value, {"levels": [n, m], "x": element_to_json(x), "y": element_to_json(y)}
    for x, y in seeds:
        w = u.jointly(x, y) if mode == "joint" else u.row_column(x, y)
        nxv = u.left.norm(x, config).upper
        nyv = u.right.norm(y, config).upper
        val = u.target.norm(w, config).lower / (nxv * nyv) if nxv * nyv > 0 else 0.0
        if val > best:
            best, wit = val, {"levels": [x.shape[0], y.shape[0]], "x": element_to_json(x),
                              "y": element_to_json(y), "source": "supplied witness"}
    return best, wit


def jcb_norm(u: BilinearMap, max_level: int = 2, config: OptimizerConfig | None = None) -> NormEstimate:
    """Lower bound on the jointly completely bounded norm over levels ``n, m <= max_level``."""
    config = config or DEFAULT_CONFIG
    if not np.any(u.coeffs):
        return NormEstimate.exact_value(0.0)
    best, wit = 0.0, {}
    for n in range(1, max_level + 1):
        for m in range(1, max_level + 1):
            val, w = _bilinear_sup(u, n, m, "joint", config)
            if val > best:
                best, wit = val, w
    return NormEstimate(best, math.inf, wit, True)


def mb_norm(u: BilinearMap, max_level: int = 2, config: OptimizerConfig | None = None,
            witnesses=()) -> NormEstimate:
    """Lower bound on the multiplicatively bounded norm over levels ``n <= max_level``.

    ``witnesses`` are extra ``(x, y)`` element pairs evaluated exactly.
    """
    config = config or DEFAULT_CONFIG
    if not np.any(u.coeffs):
        return NormEstimate.exact_value(0.0)
    best, wit = 0.0, {}
    for n in range(1, max_level + 1):
        extra = [(x, y) for x, y in witnesses if x.shape[0] == n]
        val, w = _bilinear_sup(u, n, n, "row", config, extra)
        if val > best:
            best, wit = val, w
    return NormEstimate(best, math.inf, wit, True)


# ---------------------------------------------------------------------------
# the projective tensor product as an operator space
# ---------------------------------------------------------------------------


class ProjTensorSpace(OperatorSpace):
    kind = "projTensor"

    def __init__(self, left: OperatorSpace, right: OperatorSpace):
        super().__init__(left.dim * right.dim)
        self.left, self.right = left, right

    def norm(self, v, config=None):
        return projective_norm(self.left, self.right, v, config)

    def ball(self, n):
        """``alpha (x (x) y) beta`` with inner levels ``p = q = n``."""
        bx, by = self.left.ball(n), self.right.ball(n)
        if bx is None or by is None:
            return None
        nx, ny = bx.nblocks, by.nblocks
        inner = n * n

        def elem(blocks):
            alpha, beta = blocks[0], blocks[-1]
            t = tensor_elements(bx.element(blocks[1:1 + nx]), by.element(blocks[1 + nx:1 + nx + ny]))
            return np.einsum("...ik,...klc,...lj->...ijc", alpha, t, beta)

        shapes = [(n, inner)] + list(bx.shapes) + list(by.shapes) + [(inner, n)]
        seeds = []
        if bx.seeds and by.seeds:
            e = np.zeros((n, inner), dtype=complex)
            e[:, :n] = np.eye(n)
            seeds.append([e] + list(bx.seeds[0]) + list(by.seeds[0]) + [e.T.copy()])
        return BallParam(n, self.dim, shapes, elem, seeds)

    def to_json(self):
        return {"kind": "projTensor", "left": self.left.to_json(), "right": self.right.to_json()}


def linearize(u: BilinearMap) -> CBMap:
    return CBMap(ProjTensorSpace(u.left, u.right), u.target, u.coeffs)


# ---------------------------------------------------------------------------
# product factorizations through a Hilbert space
# ---------------------------------------------------------------------------


def _padded_target(rows: int, cols: int) -> ConcreteSpace:
    """Rectangular matrices ``rows x cols`` embedded in ``M_max``."""
    d = max(rows, cols)
    basis = np.zeros((rows * cols, d, d), dtype=complex)
    for a in range(rows):
        for b in range(cols):
            basis[a * cols + b, a, b] = 1
    return ConcreteSpace(basis, d)


def _als(tensor4, r, rng, init_b=None, iters=300):
    """Alternating least squares for ``T[a, b] = L[a] @ R[b]`` with L: (k x r), R: (r x k)."""
    da, db, k, _ = tensor4.shape
    rmat = init_b if init_b is not None else rng.standard_normal((db, r, k)) + 1j * rng.standard_normal((db, r, k))
    # T[a] as one wide matrix [T[a,1] .. T[a,db]] and T[., b] as one tall matrix
    wide = np.concatenate([tensor4[:, b] for b in range(db)], axis=2)  # (da, k, db k)
    tall = np.concatenate([tensor4[a] for a in range(da)], axis=1)  # (db, da k, k)
    lmat = None
    for _ in range(iters):
        rcat = np.concatenate(list(rmat), axis=1)  # (r, db k)
        lmat = np.linalg.lstsq(rcat.T, wide.transpose(2, 0, 1).reshape(db * k, da * k), rcond=None)[0]
        lmat = lmat.reshape(r, da, k).transpose(1, 2, 0)
        lcat = np.concatenate(list(lmat), axis=0)  # (da k, r)
        rmat = np.linalg.lstsq(lcat, tall.transpose(1, 0, 2).reshape(da * k, db * k), rcond=None)[0]
        rmat = rmat.reshape(r, db, k).transpose(1, 0, 2)
    resid = np.max(np.abs(np.einsum("akr,brl->abkl", lmat, rmat) - tensor4))
    return lmat, rmat, float(resid)


@dataclass
class FactorizationReport:
    found: bool
    inner_dim: int = 0
    residual: float = math.inf
    cb_bounds: tuple = ()
    mb_lower: float = math.nan
    psi1: np.ndarray | None = None
    psi2: np.ndarray | None = None
    reason: str = ""

    def to_json(self) -> dict:
        out = {"found": self.found, "innerDim": self.inner_dim, "reason": self.reason}
        if self.found:
            out.update({"residual": self.residual, "cbUpperBounds": list(self.cb_bounds),
                        "psi1": cmatrix_to_json(self.psi1), "psi2": cmatrix_to_json(self.psi2)})
        else:
            out["mbLowerBound"] = None if math.isnan(self.mb_lower) else self.mb_lower
        return out


def haagerup_factorization_test(u: BilinearMap, config: OptimizerConfig | None = None, max_inner: int | None = None,
                                witnesses=()) -> FactorizationReport:
    """Look for complete contractions ``psi1, psi2`` with ``u(x, y) = psi1(x) psi2(y)``."""
    config = config or DEFAULT_CONFIG
    if not isinstance(u.target, ConcreteSpace):
        raise ValueError("target must be a concrete matrix space")
    k = u.target.ambient_dim
    da, db = u.left.dim, u.right.dim
    images = np.einsum("dc,dpq->cpq", u.coeffs, u.target.basis).reshape(da, db, k, k)
    if not np.any(images):
        psi1 = np.zeros((k, da))
        psi2 = np.zeros((k, db))
        return FactorizationReport(True, 1, 0.0, (0.0, 0.0), math.nan, psi1, psi2, "zero map")
    # an mb norm above 1 already rules out every contractive product form
    mb = mb_norm(u, min(k, 2), config, witnesses)
    if mb.lower > 1 + 1e-6:
        return FactorizationReport(False, 0, math.inf, (), mb.lower, None, None,
                                   "mb norm exceeds 1, so no contractive product form exists")
    max_inner = max_inner or k * max(da, db)
    for r in range(1, max_inner + 1):
        inits = []
        if isinstance(u.right, ConcreteSpace) and u.right.ambient_dim == r and r == k:
            inits.append(u.right.basis.copy())
        for restart in range(config.restarts):
            inits.append(None)
        for idx, init in enumerate(inits):
            rng = restart_rng(config.seed, 5000 + 97 * r + idx)
            lmat, rmat, resid = _als(images, r, rng, init, iters=60 if init is None else 2)
            if resid > 1e-6:
                continue
            for gauge in _gauges(lmat, rmat):
                lg = np.einsum("akr,rs->aks", lmat, gauge)
                rg = np.einsum("rs,bsk->brk", np.linalg.inv(gauge), rmat)
                ok, bounds, lg, rg = _balance_and_certify(u, lg, rg, k, r)
                if ok:
                    return FactorizationReport(True, r, resid, bounds, math.nan,
                                               lg.reshape(da, -1).T, rg.reshape(db, -1).T,
                                               "product form with completely contractive factors")
    return FactorizationReport(False, 0, math.inf, (), mb.lower, None, None, "no contractive product form found")


def _inv_sqrt(h):
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    w = np.maximum(w, w[-1] * 1e-14)
    return (v / np.sqrt(w)) @ v.conj().T


def _gauges(lmat, rmat):
    """Inner-space changes of basis to try: none, and whitening from either side."""
    r = lmat.shape[2]
    out = [np.eye(r, dtype=complex)]
    gl = np.einsum("akr,aks->rs", lmat.conj(), lmat)
    gr = np.einsum("brk,bsk->rs", rmat, rmat.conj())
    try:
        out.append(_inv_sqrt(gl))
        out.append(np.linalg.inv(_inv_sqrt(gr)))
    except np.linalg.LinAlgError:
        pass
    return out


def _balance_and_certify(u, lmat, rmat, k, r):
    """Rescale the pair so both cb bounds agree, then certify each is <= 1."""
    t1, t2 = _padded_target(k, r), _padded_target(r, k)
    psi1 = CBMap(u.left, t1, lmat.reshape(lmat.shape[0], -1).T)
    psi2 = CBMap(u.right, t2, rmat.reshape(rmat.shape[0], -1).T)
    c1, c2 = cb_upper(psi1), cb_upper(psi2)
    if not (math.isfinite(c1) and math.isfinite(c2)) or c1 == 0 or c2 == 0:
        return False, (c1, c2), lmat, rmat
    s = math.sqrt(c2 / c1)
    lmat, rmat = lmat * s, rmat / s
    bounds = (c1 * s, c2 / s)
    return bool(max(bounds) <= 1 + 1e-6), bounds, lmat, rmat
