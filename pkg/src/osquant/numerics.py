"""Dense complex linear algebra and the seeded optimizers used by every norm.

Matrices are plain ``numpy`` complex arrays.  Two maximizers live here:

* :func:`maximize_over_unit_ball` is the generic, derivative-free engine for an
  arbitrary objective over the unit ball of an arbitrary norm.
* :func:`maximize_multilinear_norm` handles the structured case that covers
  almost every sup-type norm in the package: the operator norm of a matrix
  that depends multilinearly on a list of contraction blocks.  Each block is
  updated in turn by the exact linear maximizer over the contraction ball
  (a polar factor), so the objective never decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

ALG_TOL = 1e-9
OPT_TOL = 1e-6


class NotHermitianError(ValueError):
    pass


class ObjectiveDivergedError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


def as_cmatrix(a: Any) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def operator_norm(a: Any) -> float:
    m = np.asarray(a, dtype=complex)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def trace_norm(a: Any) -> float:
    m = np.asarray(a, dtype=complex)
    if m.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def kron(a: Any, b: Any) -> np.ndarray:
    """Kronecker product with row index (i, k) and column index (j, l)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def min_eigenvalue(h: Any, tol: float = 1e-10) -> float:
    m = as_cmatrix(h)
    if m.shape[0] != m.shape[1]:
        raise NotHermitianError("not Hermitian (matrix is not square)")
    scale = max(operator_norm(m), 1.0)
    if operator_norm(m - m.conj().T) > tol * scale:
        raise NotHermitianError("not Hermitian")
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def polar_maximizer(g: np.ndarray) -> np.ndarray:
    """Contraction ``b`` maximizing ``Re sum(b * g)``; the maximum is ``trace_norm(g)``."""
    u, _, vh = np.linalg.svd(g, full_matrices=False)
    return (u @ vh).conj()


def random_contraction(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    u, _, vh = np.linalg.svd(g, full_matrices=False)
    return u @ vh


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    # one independent stream per restart: adding restarts never changes earlier ones
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), restart]))


def top_singular_triple(m: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(m)
    return float(s[0]), u[:, 0], vh[0].conj()


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def _f17(x: float) -> float:
    return float(f"{float(x):.17g}")


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [_f17(z.real), _f17(z.imag)]


def complex_from_json(p) -> complex:
    if not (isinstance(p, (list, tuple)) and len(p) == 2):
        raise ValueError(f"complex number must be [re, im], got {p!r}")
    return complex(float(p[0]), float(p[1]))


def cmatrix_to_json(a: Any) -> dict:
    m = as_cmatrix(a)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [complex_to_json(z) for z in m.reshape(-1)],
    }


def cmatrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"CMatrix needs rows/cols/data: {exc}") from None
    if len(data) != rows * cols:
        raise ValueError(f"CMatrix data has {len(data)} entries, expected {rows * cols}")
    vals = [complex_from_json(p) for p in data]
    return as_cmatrix(np.array(vals, dtype=complex).reshape(rows, cols))


def vector_to_json(v: Any) -> list[list[float]]:
    return [complex_to_json(z) for z in np.asarray(v, dtype=complex).reshape(-1)]


def vector_from_json(data) -> np.ndarray:
    return np.array([complex_from_json(p) for p in data], dtype=complex)


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    seed: int = 0
    restarts: int = 8
    max_iterations: int = 400
    step_tolerance: float = 1e-9
    value_tolerance: float = 1e-12

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.step_tolerance <= 0 or self.value_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict:
        return {
            "seed": int(self.seed),
            "restarts": self.restarts,
            "maxIterations": self.max_iterations,
            "stepTolerance": self.step_tolerance,
            "valueTolerance": self.value_tolerance,
        }


@dataclass(frozen=True)
class NormEstimate:
    """Certified interval for a norm-like quantity.

    ``lower`` is attained by the recorded witness; ``upper`` comes from an
    explicit factorization (or is ``inf``).  ``exact`` marks values certified
    by an analytic argument rather than by the interval alone.
    """

    lower: float
    upper: float = math.inf
    witness: dict = field(default_factory=dict, compare=False)
    converged: bool = True
    exact: bool = False
    note: str = ""

    def __post_init__(self):
        if self.lower < 0:
            object.__setattr__(self, "lower", 0.0)

    @classmethod
    def exact_value(cls, value: float, witness: dict | None = None, note: str = "") -> "NormEstimate":
        return cls(float(value), float(value), witness or {}, True, True, note)

    @property
    def value(self) -> float:
        """Best point estimate: the certified side of the interval."""
        if self.exact or math.isinf(self.upper):
            return self.lower
        return self.lower if self.lower > 0 else self.upper

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol

    def to_json(self) -> dict:
        return {
            "lower": _f17(self.lower),
            "upper": None if math.isinf(self.upper) else _f17(self.upper),
            "converged": self.converged,
            "exact": self.exact,
            "note": self.note,
            "witness": self.witness,
        }


# ---------------------------------------------------------------------------
# generic derivative-free ball maximizer
# ---------------------------------------------------------------------------


def _checked(value) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ObjectiveDivergedError("objective diverged")
    return v


def maximize_over_unit_ball(
    f: Callable[[np.ndarray], float],
    ball_norm: Callable[[np.ndarray], float],
    dim: int,
    config: OptimizerConfig = OptimizerConfig(),
    starts: Sequence[np.ndarray] = (),
    upper: float = math.inf,
) -> NormEstimate:
    """Multi-restart perturbative ascent of ``f`` over ``{x : ball_norm(x) <= 1}``.

    Every candidate is rescaled onto the ball boundary, so ``ball_norm`` must
    be positively homogeneous.  ``starts`` are tried before the random restarts.
    """
    if dim == 0:
        v = _checked(f(np.zeros(0, dtype=complex)))
        return NormEstimate(v, max(upper, v), {"point": []}, True)

    def to_boundary(x):
        r = ball_norm(x)
        return x / r if r > 0 else x

    best_val, best_x, best_conv = -math.inf, None, True
    initial = [np.asarray(s, dtype=complex) for s in starts]
    for restart in range(len(initial) + config.restarts):
        rng = restart_rng(config.seed, restart)
        x = initial[restart] if restart < len(initial) else random_complex(rng, dim)
        x = to_boundary(x)
        val = _checked(f(x))
        step, fails, converged = 0.5, 0, False
        for _ in range(config.max_iterations):
            y = to_boundary(x + step * random_complex(rng, dim) / math.sqrt(2 * dim))
            fy = _checked(f(y))
            if fy > val + config.value_tolerance:
                x, val, fails = y, fy, 0
                step = min(step * 1.5, 2.0)
            else:
                fails += 1
                if fails >= 4:
                    step *= 0.6
                    fails = 0
            if step < config.step_tolerance:
                converged = True
                break
        if val > best_val:
            best_val, best_x, best_conv = val, x, converged
    return NormEstimate(
        max(best_val, 0.0), upper, {"point": vector_to_json(best_x)}, best_conv
    )


# ---------------------------------------------------------------------------
# multilinear alternating ascent
# ---------------------------------------------------------------------------


@dataclass
class AscentResult:
    value: float
    blocks: list
    left: np.ndarray
    right: np.ndarray
    restart: int
    converged: bool


def maximize_multilinear_norm(
    build: Callable[[list], np.ndarray],
    shapes: Sequence[tuple[int, int]],
    config: OptimizerConfig = OptimizerConfig(),
    seeds: Sequence[Sequence[np.ndarray]] = (),
) -> AscentResult:
    """Maximize ``operator_norm(build(blocks))`` over contraction blocks.

    ``build`` must be linear in each block separately and must broadcast over
    a leading batch axis on any single block.  Seeds are tried first, then
    ``config.restarts`` random starts; ties keep the earliest restart.
    """
    shapes = [tuple(s) for s in shapes]
    best: AscentResult | None = None
    n_seeds = len(seeds)
    for restart in range(n_seeds + config.restarts):
        if restart < n_seeds:
            blocks = [np.array(b, dtype=complex) for b in seeds[restart]]
        else:
            rng = restart_rng(config.seed, restart - n_seeds)
            blocks = [random_contraction(rng, s) for s in shapes]
        res = _ascend(build, blocks, shapes, config)
        res.restart = restart
        if best is None or res.value > best.value:
            best = res
    return best


def _ascend(build, blocks, shapes, config) -> AscentResult:
    m = build(blocks)
    if m.size == 0:
        return AscentResult(0.0, blocks, np.zeros(0), np.zeros(0), 0, True)
    val, xi, eta = top_singular_triple(m)
    _checked(val)
    converged = not shapes
    for _ in range(config.max_iterations if shapes else 0):
        old = val
        for k, (r, c) in enumerate(shapes):
            units = np.eye(r * c, dtype=complex).reshape(r * c, r, c)
            trial = list(blocks)
            trial[k] = units
            batch = build(trial)
            g = np.einsum("r,brc,c->b", xi.conj(), batch, eta).reshape(r, c)
            if not np.any(g):
                continue
            blocks[k] = polar_maximizer(g)
            val, xi, eta = top_singular_triple(build(blocks))
            _checked(val)
        if val - old <= config.value_tolerance * max(1.0, val):
            converged = True
            break
    return AscentResult(val, blocks, xi, eta, 0, converged)
