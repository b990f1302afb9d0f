"""Linear maps between operator spaces and their completely bounded norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    NormEstimate,
    OptimizerConfig,
    as_cmatrix,
    cmatrix_from_json,
    cmatrix_to_json,
    maximize_multilinear_norm,
    maximize_over_unit_ball,
    operator_norm,
    restart_rng,
)
from .opspace import (
    DEFAULT_CONFIG,
    ConcreteSpace,
    DualSpace,
    OperatorSpace,
    _fill_seeds,
    element,
    element_to_json,
    haagerup_bound,
    kraus_like,
    matrix_space,
    space_from_json,
    transpose_permutation,
)

CONTRACTION_SLACK = 1e-6
# a cb norm into M_k (or a subspace of it) is attained at matrix level k
SMITH_REASON = "cb norm into a subspace of M_k is attained at level k"


@dataclass
class Verdict:
    status: str  # "holds", "fails" or "inconclusive"
    value: float = math.nan
    witness: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    @property
    def fails(self) -> bool:
        return self.status == "fails"

    def to_json(self) -> dict:
        return {"status": self.status,
                "value": None if math.isnan(self.value) else float(f"{self.value:.17g}"),
                "reason": self.reason, "witness": self.witness}


def same_space(a: OperatorSpace, b: OperatorSpace) -> bool:
    if a is b:
        return True
    if a.dim != b.dim or a.kind != b.kind:
        return False
    try:
        return a.to_json() == b.to_json()
    except (AttributeError, NotImplementedError):
        return False


class CBMap:
    """Linear map given by its action on basis coordinates (``codomain.dim x domain.dim``)."""

    def __init__(self, domain: OperatorSpace, codomain: OperatorSpace, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.size == 0:
            c = np.zeros((codomain.dim, domain.dim), dtype=complex)
        c = c.reshape(codomain.dim, domain.dim) if c.ndim != 2 else c
        if c.shape != (codomain.dim, domain.dim):
            raise ValueError(f"coeffs must be {codomain.dim} x {domain.dim}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs have non-finite entries")
        self.domain, self.codomain, self.coeffs = domain, codomain, c

    def __call__(self, v) -> np.ndarray:
        return self.coeffs @ np.asarray(v, dtype=complex)

    def amplify(self, n: int, x) -> np.ndarray:
        x = element(x, self.domain.dim)
        if x.shape[0] != n:
            raise ValueError(f"element has level {x.shape[0]}, expected {n}")
        return np.einsum("dc,...ijc->...ijd", self.coeffs, x)

    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(), "codomain": self.codomain.to_json(),
                "coeffs": cmatrix_to_json(self.coeffs) if self.coeffs.size else None}

    @classmethod
    def from_json(cls, obj: dict) -> "CBMap":
        dom, cod = space_from_json(obj["domain"]), space_from_json(obj["codomain"])
        c = obj.get("coeffs")
        return cls(dom, cod, cmatrix_from_json(c) if c else np.zeros((cod.dim, dom.dim)))

    def __repr__(self):
        return f"CBMap({self.domain!r} -> {self.codomain!r})"


def identity_map(space: OperatorSpace) -> CBMap:
    return CBMap(space, space, np.eye(space.dim))


def zero_map(domain: OperatorSpace, codomain: OperatorSpace) -> CBMap:
    return CBMap(domain, codomain, np.zeros((codomain.dim, domain.dim)))


def transpose_map(k: int) -> CBMap:
    m = matrix_space(k)
    return CBMap(m, m, transpose_permutation(k))


def compose(u: CBMap, v: CBMap) -> CBMap:
    """``u o v``."""
    if u.domain.dim != v.codomain.dim or not same_space(u.domain, v.codomain):
        raise ValueError("compose: domain of u must equal codomain of v")
    return CBMap(v.domain, u.codomain, u.coeffs @ v.coeffs)


def scaled(u: CBMap, s: complex) -> CBMap:
    return CBMap(u.domain, u.codomain, s * u.coeffs)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def smith_level(u: CBMap) -> int | None:
    if isinstance(u.codomain, ConcreteSpace):
        return u.codomain.ambient_dim
    return None


def adjoint_map(u: CBMap) -> CBMap | None:
    """For ``u: X* -> Y*`` between duals, the predual map ``Y -> X`` (same cb norm)."""
    dom, cod = u.domain, u.codomain
    if not (isinstance(dom, DualSpace) and isinstance(cod, DualSpace)):
        return None
    # (u f)(y) = f(u_* y):  (C f) G_Y y = f G_X (u_* y)
    coeffs = np.linalg.solve(dom.pairing, u.coeffs.T @ cod.pairing)
    return CBMap(cod.base, dom.base, coeffs)


def cb_upper(u: CBMap) -> float:
    """Factorization bound when both spaces sit concretely in matrix algebras.

    Maps between duals of concrete spaces are bounded through their predual map.
    """
    pre = adjoint_map(u)
    if pre is not None:
        return cb_upper(pre)
    if not (isinstance(u.domain, ConcreteSpace) and isinstance(u.codomain, ConcreteSpace)):
        return math.inf
    if u.domain.dim == 0 or u.codomain.dim == 0 or not np.any(u.coeffs):
        return 0.0
    dom, cod = u.domain, u.codomain
    d = dom.ambient_dim
    flat = dom.basis.reshape(dom.dim, -1).T
    units = np.linalg.pinv(flat).T.reshape(d, d, dom.dim)
    # Phi(e_ab) = sum_c' (u coords(e_ab))_c' B_c'
    images = np.einsum("abc,ec,eij->abij", units, u.coeffs, cod.basis)
    a_t, b_t = kraus_like(images)
    best = haagerup_bound(a_t, b_t)
    if images.shape[2] == images.shape[3]:
        best = min(best, hermitian_split_bound(images))
    return best


def hermitian_split_bound(images: np.ndarray) -> float:
    """Bound from ``Phi = Phi_+ - Phi_-`` with both parts completely positive.

    ``images[a, b] = Phi(e_ab)``.  Only applies when the Choi matrix is
    Hermitian; the value is ``||Phi_+(1) + Phi_-(1)||``.
    """
    d, k = images.shape[0], images.shape[2]
    choi = np.einsum("abij->aibj", images).reshape(d * k, d * k)
    if np.linalg.norm(choi - choi.conj().T) > 1e-12 * max(1.0, np.linalg.norm(choi)):
        return math.inf
    w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
    absolute = (v * np.abs(w)) @ v.conj().T
    # sum over the input index a of the block (a, a) is Phi_+(1) + Phi_-(1)
    blocks = absolute.reshape(d, k, d, k)
    return operator_norm(np.einsum("aiaj->ij", blocks))



def amplified_norm(u: CBMap, n: int, config: OptimizerConfig | None = None,
                   cap: float = math.inf) -> NormEstimate:
    """Estimate ``||u_n||`` from below; ``cap`` (or a factorization bound) is the upper side."""
    if n < 1:
        raise ValueError("level must be >= 1")
    config = config or DEFAULT_CONFIG
    upper = min(cap, cb_upper(u))
    if u.domain.dim == 0 or u.codomain.dim == 0 or not np.any(u.coeffs):
        return NormEstimate.exact_value(0.0)
    ball = u.domain.ball(n)
    normers = u.codomain.normers(n)
    if ball is not None and normers:
        best, best_blocks, conv = -1.0, None, True
        for nm in normers:
            ny = ball.nblocks

            def build(blocks, nm=nm):
                return nm.matrix(np.einsum("dc,...ijc->...ijd", u.coeffs, ball.element(blocks[:ny])),
                                 blocks[ny:])

            seeds = _fill_seeds(ball.seeds, nm.shapes, nm.seeds, config)
            res = maximize_multilinear_norm(build, list(ball.shapes) + list(nm.shapes), config, seeds)
            if res.value > best:
                best, best_blocks, conv = res.value, res.blocks[:ny], res.converged
        x = ball.element(best_blocks)
        witness = {"level": n, "element": element_to_json(x)}
        return NormEstimate(best, max(upper, best), witness, conv)

    def objective(v):
        y = u.amplify(n, v.reshape(n, n, -1))
        return u.codomain.norm(y, config).value

    def ball_norm(v):
        return u.domain.norm(v.reshape(n, n, -1), config).value

    est = maximize_over_unit_ball(objective, ball_norm, n * n * u.domain.dim, config, upper=upper)
    pt = np.array([complex(*p) for p in est.witness["point"]]).reshape(n, n, -1)
    return NormEstimate(est.lower, max(upper, est.lower), {"level": n, "element": element_to_json(pt)},
                        est.converged, note="derivative-free search")


def cb_norm_lower(u: CBMap, max_level: int = 3, config: OptimizerConfig | None = None) -> NormEstimate:
    """Max of the amplified norms up to ``max_level`` (capped at the exactness level)."""
    if max_level < 1:
        raise ValueError("maxLevel must be >= 1")
    config = config or DEFAULT_CONFIG
    if not np.any(u.coeffs):
        return NormEstimate.exact_value(0.0, note="zero map")
    cap_level = smith_level(u)
    top = max_level if cap_level is None else min(max_level, cap_level)
    best = None
    for n in range(1, top + 1):
        est = amplified_norm(u, n, config)
        if best is None or est.lower > best.lower:
            best = est
    upper = best.upper
    reached = cap_level is not None and max_level >= cap_level
    exact = reached and math.isfinite(upper) and upper - best.lower <= CONTRACTION_SLACK * max(1.0, upper)
    note = SMITH_REASON if reached else ""
    if exact:
        return NormEstimate(best.lower, best.lower, best.witness, True, True, note)
    return NormEstimate(best.lower, upper, best.witness, best.converged, False, note)


def is_complete_contraction(u: CBMap, max_level: int = 3, config: OptimizerConfig | None = None) -> Verdict:
    est = cb_norm_lower(u, max_level, config)
    if est.lower > 1 + CONTRACTION_SLACK:
        return Verdict("fails", est.lower, est.witness, "witness with ||u_n(x)|| > ||x||")
    if est.upper <= 1 + CONTRACTION_SLACK:
        reason = est.note or "factorization bound <= 1"
        return Verdict("holds", est.lower, est.witness, reason)
    return Verdict("inconclusive", est.lower, est.witness, "no violation found below the level cap")


def _maps_basis_onto_itself(u: CBMap) -> bool:
    dom, cod = u.domain, u.codomain
    if not (isinstance(dom, ConcreteSpace) and isinstance(cod, ConcreteSpace)):
        return False
    if dom.ambient_dim != cod.ambient_dim:
        return False
    images = np.einsum("dc,dab->cab", u.coeffs, cod.basis)
    return bool(np.allclose(images, dom.basis, atol=1e-12))


def is_complete_isometry(u: CBMap, max_level: int = 3, config: OptimizerConfig | None = None,
                         tol: float = CONTRACTION_SLACK) -> Verdict:
    config = config or DEFAULT_CONFIG
    if same_space(u.domain, u.codomain) and np.allclose(u.coeffs, np.eye(u.domain.dim), atol=1e-12):
        return Verdict("holds", 1.0, {}, "identity")
    if _maps_basis_onto_itself(u):
        return Verdict("holds", 1.0, {}, "basis images coincide in the ambient algebra")
    contraction = is_complete_contraction(u, max_level, config)
    if contraction.fails:
        return Verdict("fails", contraction.value, contraction.witness, contraction.reason)
    for n in range(1, max_level + 1):
        for r in range(config.restarts):
            rng = restart_rng(config.seed, 1000 * n + r)
            x = rng.standard_normal((n, n, u.domain.dim)) + 1j * rng.standard_normal((n, n, u.domain.dim))
            nx = u.domain.norm(x, config).value
            ny = u.codomain.norm(u.amplify(n, x), config).value
            if nx > 0 and abs(ny - nx) > tol * nx:
                return Verdict("fails", ny / nx, {"level": n, "element": element_to_json(x / nx)},
                               "norm changed on a sampled element")
    return Verdict("inconclusive", 1.0, {}, "no norm change found on sampled elements")


def from_matrix_function(domain: OperatorSpace, codomain: OperatorSpace, fn) -> CBMap:
    """Build a map between concrete spaces from a function on ambient matrices."""
    cols = []
    for c in range(domain.dim):
        img = as_cmatrix(fn(domain.basis[c]))
        cols.append(codomain.coords_of(img))
    return CBMap(domain, codomain, np.array(cols).T if cols else np.zeros((codomain.dim, 0)))
