"""Finite-dimensional evolution systems with on-off feedback.

The state space is R^d equipped with a user-declared symmetric positive
definite Gram matrix; all norms, dissipativity checks and induced operator
norms are taken in that weighted sense (the identity Gram recovers the plain
Euclidean case).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spsla

from .errors import (
    DimensionMismatch,
    FeedbackSignViolation,
    GramNotPositiveDefinite,
    MissingFeedbackOp,
    NotDissipative,
)

DELAYED = "delayed"
ANTI_DAMPING = "anti_damping"

# dense linear algebra below this size, iterative above
_DENSE_CUTOFF = 400


@dataclass(frozen=True)
class InnerProduct:
    """Weighted inner product <x, y> = x^T G y with G symmetric positive definite."""

    gram: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatch(f"Gram matrix must be square, got {g.shape}")
        scale = np.linalg.norm(g)
        if scale == 0 or np.linalg.norm(g - g.T) > 1e-12 * scale:
            raise GramNotPositiveDefinite("Gram matrix is not symmetric within 1e-12")
        g = (g + g.T) / 2
        try:
            chol = np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise GramNotPositiveDefinite("Gram matrix is not positive definite") from exc
        g.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "chol", chol)

    @classmethod
    def identity(cls, dim: int) -> "InnerProduct":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ self.gram @ y)

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def norms(self, states: np.ndarray) -> np.ndarray:
        """Row-wise G-norms of an (n, d) array."""
        q = np.einsum("nd,de,ne->n", states, self.gram, states)
        return np.sqrt(np.maximum(q, 0.0))

    def congruence(self, a: np.ndarray) -> np.ndarray:
        """L^T A L^{-T} for G = L L^T; Euclidean geometry of A in G-coordinates."""
        y = self.chol.T @ a
        return sla.solve_triangular(self.chol, y.T, lower=True).T


def _check_square(a: np.ndarray, ip: InnerProduct) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if a.shape[0] != ip.dim:
        raise DimensionMismatch(
            f"matrix is {a.shape[0]}x{a.shape[0]} but Gram is {ip.dim}x{ip.dim}"
        )
    return a


def _sym_extreme_eig(sym: np.ndarray, largest: bool) -> float:
    # dense: the extreme eigenvalue of dissipative generators sits in a huge
    # near-zero cluster, which defeats Lanczos without shift-invert
    w = np.linalg.eigvalsh(sym)
    return float(w[-1] if largest else w[0])


def worst_rayleigh_quotient(a: np.ndarray, ip: InnerProduct) -> float:
    """max_x <Ax, x>_G / <x, x>_G, via the symmetrized generator in G-coordinates."""
    a = _check_square(a, ip)
    aw = ip.congruence(a)
    sym = (aw + aw.T) / 2
    return _sym_extreme_eig(sym, largest=True)


def check_dissipative(
    a: np.ndarray, ip: InnerProduct | None = None, tol: float | None = None
) -> tuple[bool, float]:
    """True iff the worst G-Rayleigh quotient of A is <= tol; returns it too.

    Default tol scales with the size of A in G-coordinates (discretized PDE
    generators are dissipative only up to assembly rounding).
    """
    if ip is None:
        ip = InnerProduct.identity(np.asarray(a).shape[0])
    a = _check_square(a, ip)
    aw = ip.congruence(a)
    sym = (aw + aw.T) / 2
    worst = _sym_extreme_eig(sym, largest=True)
    if tol is None:
        tol = 1e-9 * max(np.linalg.norm(aw), 1e-300)
    return worst <= tol, worst


def check_antidamping_sign(
    d: np.ndarray, ip: InnerProduct | None = None, tol: float = 1e-9
) -> bool:
    """True iff <Dx, x>_G >= -tol * |x|_G^2 for all x."""
    if ip is None:
        ip = InnerProduct.identity(np.asarray(d).shape[0])
    d = _check_square(d, ip)
    dw = ip.congruence(d)
    sym = (dw + dw.T) / 2
    smallest = _sym_extreme_eig(sym, largest=False)
    return smallest >= -tol


def induced_operator_norm(b: np.ndarray, ip: InnerProduct | None = None) -> float:
    """Operator norm max_{x != 0} |Bx|_G / |x|_G.

    Computed as the largest singular value of the G-congruence of B; agrees
    with a power-iteration evaluation within 1e-10 relative.
    """
    if ip is None:
        ip = InnerProduct.identity(np.asarray(b).shape[0])
    b = _check_square(b, ip)
    w = ip.congruence(b)
    d = w.shape[0]
    if not np.any(w):
        return 0.0
    if d <= _DENSE_CUTOFF:
        return float(np.linalg.norm(w, 2))
    # largest eigenvalue of W^T W by Lanczos; avoids an O(n^3) SVD
    op = spsla.LinearOperator((d, d), matvec=lambda x: w.T @ (w @ x), dtype=float)
    try:
        lam = spsla.eigsh(op, k=1, which="LA", return_eigenvectors=False,
                          v0=np.ones(d) / np.sqrt(d), maxiter=5000)
        return float(np.sqrt(max(lam[0], 0.0)))
    except (spsla.ArpackNoConvergence, spsla.ArpackError):
        return float(np.linalg.norm(w, 2))


@dataclass(frozen=True)
class DelaySystem:
    """Generator + per-odd-interval feedback operators + feedback mode.

    In ``delayed`` mode the evolution is U' = A U + B(t) U(t - tau), in
    ``anti_damping`` mode U' = A U + B(t) U(t) with every feedback operator
    required to have nonnegative symmetric part.  Immutable after
    construction; operator norms are cached.
    """

    generator: np.ndarray
    feedback_ops: tuple[np.ndarray, ...]
    mode: str
    inner_product: InnerProduct
    cyclic: bool = True
    dissipative_tol: float | None = None
    op_norms: tuple[float, ...] = field(init=False)
    worst_rayleigh: float = field(init=False)

    def __post_init__(self):
        ip = self.inner_product
        a = _check_square(np.asarray(self.generator, dtype=float), ip)
        if self.mode not in (DELAYED, ANTI_DAMPING):
            raise ValueError(f"mode must be '{DELAYED}' or '{ANTI_DAMPING}'")
        ops = tuple(_check_square(np.asarray(b, dtype=float), ip) for b in self.feedback_ops)
        ok, worst = check_dissipative(a, ip, self.dissipative_tol)
        if not ok:
            raise NotDissipative(
                f"generator has positive worst Rayleigh quotient {worst:.3e}"
            )
        if self.mode == ANTI_DAMPING:
            for k, b in enumerate(ops):
                if not check_antidamping_sign(b, ip):
                    raise FeedbackSignViolation(
                        f"anti-damping operator {k} has negative symmetric part"
                    )
        a.setflags(write=False)
        for b in ops:
            b.setflags(write=False)
        norms = tuple(induced_operator_norm(b, ip) for b in ops)
        object.__setattr__(self, "generator", a)
        object.__setattr__(self, "feedback_ops", ops)
        object.__setattr__(self, "op_norms", norms)
        object.__setattr__(self, "worst_rayleigh", worst)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def _op_index(self, cycle: int) -> int:
        if cycle < 0:
            raise MissingFeedbackOp(f"negative cycle index {cycle}")
        if cycle < len(self.feedback_ops):
            return cycle
        if self.cyclic:
            return cycle % len(self.feedback_ops)
        raise MissingFeedbackOp(
            f"cycle {cycle} has no feedback operator and cycling is disabled"
        )

    def feedback_op(self, cycle: int) -> np.ndarray:
        """Operator acting on odd interval I_{2*cycle+1}."""
        return self.feedback_ops[self._op_index(cycle)]

    def op_norm(self, cycle: int) -> float:
        return self.op_norms[self._op_index(cycle)]

    @property
    def sup_op_norm(self) -> float:
        return max(self.op_norms) if self.op_norms else 0.0


def load_matrix(path) -> np.ndarray:
    """Dense text format: one row per line, whitespace-separated decimals."""
    return np.loadtxt(path, ndmin=2)


def save_matrix(path, a: np.ndarray) -> None:
    np.savetxt(path, np.asarray(a), fmt="%.17g")
