"""Quantum channels in the Schrodinger and Heisenberg pictures.

Superoperators act on column-stacked vectorizations: ``vec(A X B) = (B^T (x) A) vec(X)``.
The trace-pairing transpose of a superoperator ``S`` is ``K S^T K`` with ``K``
the commutation matrix; it coincides with ``S^dagger`` only for maps that
preserve Hermiticity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cbmaps import CBMap, Verdict, cb_norm_lower, is_complete_contraction
from .numerics import (
    OptimizerConfig,
    as_cmatrix,
    cmatrix_from_json,
    cmatrix_to_json,
    min_eigenvalue,
    operator_norm,
    restart_rng,
)
from .opspace import DEFAULT_CONFIG, matrix_space, trace_class

SCHRODINGER = "schrodinger"
HEISENBERG = "heisenberg"
PREDICATE_TOL = 1e-9


def vec(x) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1, order="F")


def unvec(v, d: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(d, -1, order="F")


def commutation_matrix(d: int) -> np.ndarray:
    """``K vec(X) = vec(X^T)`` for d x d matrices."""
    k = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            k[a * d + b, b * d + a] = 1
    return k


def trace_pairing(x, b) -> complex:
    x, b = as_cmatrix(x), as_cmatrix(b)
    if x.shape != b.shape or x.shape[0] != x.shape[1]:
        raise ValueError("trace pairing needs two square matrices of equal size")
    return complex(np.trace(x @ b))


@dataclass(frozen=True)
class Channel:
    dim_in: int
    dim_out: int
    superop: np.ndarray
    picture: str = SCHRODINGER

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        if s.shape != (self.dim_out ** 2, self.dim_in ** 2):
            raise ValueError(f"superop must be {self.dim_out ** 2} x {self.dim_in ** 2}, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("superop has non-finite entries")
        if self.picture not in (SCHRODINGER, HEISENBERG):
            raise ValueError(f"unknown picture {self.picture!r}")
        object.__setattr__(self, "superop", s)

    def __call__(self, x) -> np.ndarray:
        x = as_cmatrix(x)
        if x.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"input must be {self.dim_in} x {self.dim_in}")
        return unvec(self.superop @ vec(x), self.dim_out)

    def choi(self) -> np.ndarray:
        """``sum_ij e_ij (x) Phi(e_ij)``."""
        d, k = self.dim_in, self.dim_out
        out = np.zeros((d * k, d * k), dtype=complex)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d))
                e[i, j] = 1
                out[i * k:(i + 1) * k, j * k:(j + 1) * k] = self(e)
        return out

    def to_json(self) -> dict:
        return {"dimIn": self.dim_in, "dimOut": self.dim_out, "picture": self.picture,
                "superop": cmatrix_to_json(self.superop)}

    def choi_json(self) -> dict:
        return {"choi": cmatrix_to_json(self.choi()), "convention": "col-stacking"}

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        return cls(int(obj["dimIn"]), int(obj["dimOut"]), cmatrix_from_json(obj["superop"]),
                   obj.get("picture", SCHRODINGER))


def from_function(fn, dim_in: int, dim_out: int, picture: str = SCHRODINGER) -> Channel:
    cols = []
    for c in range(dim_in * dim_in):
        e = np.zeros(dim_in * dim_in, dtype=complex)
        e[c] = 1
        cols.append(vec(as_cmatrix(fn(unvec(e, dim_in)))))
    return Channel(dim_in, dim_out, np.array(cols).T, picture)


def from_kraus(ops, picture: str = SCHRODINGER) -> Channel:
    ops = [as_cmatrix(k) for k in ops]
    dim_out, dim_in = ops[0].shape
    s = sum(np.kron(k.conj(), k) for k in ops)
    return Channel(dim_in, dim_out, s, picture)


def identity_channel(d: int) -> Channel:
    return Channel(d, d, np.eye(d * d))


def transpose_channel(d: int, picture: str = SCHRODINGER) -> Channel:
    return Channel(d, d, commutation_matrix(d), picture)


def transpose(psi: Channel) -> Channel:
    """Adjoint for the trace pairing: ``tr(psi(x) b) = tr(x psi^t(b))``."""
    k_in, k_out = commutation_matrix(psi.dim_in), commutation_matrix(psi.dim_out)
    other = HEISENBERG if psi.picture == SCHRODINGER else SCHRODINGER
    return Channel(psi.dim_out, psi.dim_in, k_in @ psi.superop.T @ k_out, other)


def compose(second: Channel, first: Channel) -> Channel:
    if first.dim_out != second.dim_in:
        raise ValueError("dimension mismatch in composition")
    return Channel(first.dim_in, second.dim_out, second.superop @ first.superop, first.picture)


def tensor(a: Channel, b: Channel) -> Channel:
    """``(a (x) b)(x (x) y) = a(x) (x) b(y)`` with Kronecker ordering."""
    da, db = a.dim_in, b.dim_in

    def fn(z):
        z4 = z.reshape(da, db, da, db)
        out = np.zeros((a.dim_out * b.dim_out,) * 2, dtype=complex)
        for i in range(da):
            for j in range(da):
                ea = np.zeros((da, da))
                ea[i, j] = 1
                out += np.kron(a(ea), b(z4[i, :, j, :]))
        return out

    return from_function(fn, da * db, a.dim_out * b.dim_out, a.picture)


# ---------------------------------------------------------------------------
# the standard channels
# ---------------------------------------------------------------------------


def _check_density(rho: np.ndarray) -> None:
    if rho.shape[0] != rho.shape[1]:
        raise ValueError("not a density matrix: not square")
    if operator_norm(rho - rho.conj().T) > PREDICATE_TOL:
        raise ValueError("not a density matrix: not Hermitian")
    if abs(np.trace(rho) - 1) > PREDICATE_TOL:
        raise ValueError("not a density matrix: trace is not 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0] < -PREDICATE_TOL:
        raise ValueError("not a density matrix: not positive semidefinite")


def state_prep(rho) -> Channel:
    """``C -> T(C^d)``, ``t |-> t rho``."""
    rho = as_cmatrix(rho)
    _check_density(rho)
    return Channel(1, rho.shape[0], vec(rho).reshape(-1, 1))


def apply_unitary(u) -> Channel:
    u = as_cmatrix(u)
    if u.shape[0] != u.shape[1] or operator_norm(u.conj().T @ u - np.eye(u.shape[0])) > PREDICATE_TOL:
        raise ValueError("not unitary")
    return from_kraus([u])


def measure_basis(d: int) -> Channel:
    if d < 1:
        raise ValueError("d must be >= 1")
    projs = []
    for x in range(d):
        p = np.zeros((d, d))
        p[x, x] = 1
        projs.append(p)
    return from_kraus(projs)


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_cptp(rng: np.random.Generator, dim_in: int, dim_out: int, env: int | None = None) -> Channel:
    """Partial trace of a random isometric dilation ``C^d1 -> C^d2 (x) C^env``."""
    env = env or dim_in * dim_out
    v = random_isometry(rng, dim_out * env, dim_in).reshape(dim_out, env, dim_in)
    return from_kraus([v[:, e, :] for e in range(env)])


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return random_isometry(rng, d, d)


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------


def is_completely_positive(phi: Channel) -> Verdict:
    c = phi.choi()
    scale = max(operator_norm(c), 1.0)
    if operator_norm(c - c.conj().T) > PREDICATE_TOL * scale:
        return Verdict("fails", math.nan, {}, "Choi matrix is not Hermitian")
    lam = min_eigenvalue(c, tol=PREDICATE_TOL)
    if lam >= -PREDICATE_TOL * operator_norm(c):
        return Verdict("holds", lam, {}, "Choi matrix is positive semidefinite")
    w, v = np.linalg.eigh((c + c.conj().T) / 2)
    return Verdict("fails", lam, {"eigenvector": [[float(z.real), float(z.imag)] for z in v[:, 0]]},
                   "Choi matrix has a negative eigenvalue")


def is_trace_preserving(psi: Channel) -> Verdict:
    d = psi.dim_in
    worst = 0.0
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1
            worst = max(worst, abs(np.trace(psi(e)) - (1.0 if i == j else 0.0)))
    status = "holds" if worst <= PREDICATE_TOL else "fails"
    return Verdict(status, worst, {}, "trace defect on matrix units")


def is_unital(phi: Channel) -> Verdict:
    defect = operator_norm(phi(np.eye(phi.dim_in)) - np.eye(phi.dim_out))
    return Verdict("holds" if defect <= PREDICATE_TOL else "fails", defect, {}, "||phi(1) - 1||")


def is_positive(phi: Channel, config: OptimizerConfig | None = None, samples: int = 200) -> Verdict:
    if is_completely_positive(phi).holds:
        return Verdict("holds", 0.0, {}, "completely positive")
    config = config or DEFAULT_CONFIG
    rng = restart_rng(config.seed, 7)
    d = phi.dim_in
    worst = math.inf
    for _ in range(samples):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        out = phi(np.outer(v, v.conj()))
        if operator_norm(out - out.conj().T) > PREDICATE_TOL * max(1.0, operator_norm(out)):
            return Verdict("fails", math.nan, {}, "image of a pure state is not Hermitian")
        lam = float(np.linalg.eigvalsh((out + out.conj().T) / 2)[0])
        worst = min(worst, lam)
        if lam < -PREDICATE_TOL:
            return Verdict("fails", lam, {"state": [[float(z.real), float(z.imag)] for z in v]},
                           "pure state mapped outside the positive cone")
    return Verdict("inconclusive", worst, {}, f"no violation on {samples} sampled pure states")


def is_normal(phi: Channel) -> Verdict:
    # every linear map between finite-dimensional spaces is normal
    return Verdict("holds", math.nan, {}, "finite dimension")


# ---------------------------------------------------------------------------
# cb norms in either picture
# ---------------------------------------------------------------------------


def as_cbmap(phi: Channel, picture: str | None = None) -> CBMap:
    """Schrodinger maps act on trace-class spaces, Heisenberg maps on matrix algebras.

    Both spaces use row-major matrix-entry coordinates.
    """
    picture = picture or phi.picture
    k_in, k_out = commutation_matrix(phi.dim_in), commutation_matrix(phi.dim_out)
    coeffs = k_out @ phi.superop @ k_in
    if picture == SCHRODINGER:
        return CBMap(trace_class(phi.dim_in), trace_class(phi.dim_out), coeffs)
    return CBMap(matrix_space(phi.dim_in), matrix_space(phi.dim_out), coeffs)


def cb_lower_at_levels(phi: Channel, levels, config: OptimizerConfig | None = None,
                       picture: str | None = None) -> list[float]:
    from .cbmaps import amplified_norm

    u = as_cbmap(phi, picture)
    return [amplified_norm(u, n, config).lower for n in levels]


def hs_correspondence_suite(psi: Channel, config: OptimizerConfig | None = None,
                            levels=(1, 2), tol: float = 2e-4) -> dict:
    """Check the three equivalences between a map and its transpose, plus CPTP <-> NCPU."""
    config = config or DEFAULT_CONFIG
    phi = transpose(psi)
    cp_a, cp_b = is_completely_positive(psi), is_completely_positive(phi)
    tp, un = is_trace_preserving(psi), is_unital(phi)
    lower_psi = cb_lower_at_levels(psi, levels, config, SCHRODINGER)
    lower_phi = cb_lower_at_levels(phi, levels, config, HEISENBERG)
    diffs = [abs(a - b) for a, b in zip(lower_psi, lower_phi)]
    cptp = cp_a.holds and tp.holds
    ncpu = cp_b.holds and un.holds and is_normal(phi).holds
    # pairing identity on the full matrix-unit bases
    pairing_defect = adjunction_defect(psi, phi)
    return {
        "cp": {"map": cp_a.status, "transpose": cp_b.status, "agree": cp_a.status == cp_b.status},
        "tpUnital": {"tracePreserving": tp.status, "transposeUnital": un.status,
                     "agree": tp.status == un.status},
        "cbLower": {"levels": list(levels), "map": lower_psi, "transpose": lower_phi,
                    "maxDifference": max(diffs), "agree": max(diffs) <= tol,
                    "note": "compares certified lower bounds at matched levels"},
        "cptpNcpu": {"cptp": cptp, "ncpu": ncpu, "agree": cptp == ncpu},
        "pairingDefect": pairing_defect,
        "allAgree": bool(cp_a.status == cp_b.status and tp.status == un.status
                         and max(diffs) <= tol and cptp == ncpu),
    }


def adjunction_defect(psi: Channel, phi: Channel) -> float:
    """``max |tr(psi(e_ij) e_kl) - tr(e_ij phi(e_kl))|`` over matrix units."""
    worst = 0.0
    for i in range(psi.dim_in):
        for j in range(psi.dim_in):
            x = np.zeros((psi.dim_in, psi.dim_in))
            x[i, j] = 1
            px = psi(x)
            for k in range(psi.dim_out):
                for l in range(psi.dim_out):
                    b = np.zeros((psi.dim_out, psi.dim_out))
                    b[k, l] = 1
                    worst = max(worst, abs(trace_pairing(px, b) - trace_pairing(x, phi(b))))
    return worst


def cc_iff_cp_suite(phi: Channel, config: OptimizerConfig | None = None) -> dict:
    """Cross-check the Choi verdict against the complete-contraction verdict.

    Unital maps are evaluated between matrix algebras; trace-preserving maps
    through their transpose, which is unital and has the same cb norm.
    """
    config = config or DEFAULT_CONFIG
    if is_unital(phi).holds:
        heis, which = phi, "unital"
    elif is_trace_preserving(phi).holds:
        heis, which = transpose(phi), "trace-preserving"
    else:
        raise ValueError("neither unital nor TP")
    cp = is_completely_positive(phi)
    u = as_cbmap(heis, HEISENBERG)
    cc = is_complete_contraction(u, heis.dim_out, config)
    cc_status = cc.status
    agree = (cp.holds and cc.holds) or (cp.fails and cc.fails)
    return {"kind": which, "cp": cp.status, "choiMinEigenvalue": cp.value,
            "completeContraction": cc_status, "cbLower": cc.value, "reason": cc.reason,
            "agree": bool(agree)}


def cb_norm_of_channel(phi: Channel, config: OptimizerConfig | None = None):
    """cb norm estimate through the Heisenberg side, where the level cap applies."""
    heis = phi if phi.picture == HEISENBERG else transpose(phi)
    u = as_cbmap(heis, HEISENBERG)
    return cb_norm_lower(u, heis.dim_out, config)
