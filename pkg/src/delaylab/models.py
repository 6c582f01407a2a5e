"""Concrete systems: scalar toys and 1-d wave discretizations.

Spatial operator: second-order central differences for the Dirichlet
Laplacian on the unit interval, interior nodes x_i = i/(n_x+1).  The energy
inner products are realized through the stiffness matrix, keeping every Gram
explicit and positive definite.

Viscoelastic wave with memory: the convolution with an exponentially
decaying kernel is converted to a transport equation in the age variable s
(state eta(s) = u(t) - u(t-s)), discretized first-order upwind with inflow
eta(0) = 0.  Upwinding plus a nonincreasing kernel keeps the assembled
generator dissipative in the assembled energy Gram, which is verified
numerically on every build rather than assumed.  The memory integral and the
Gram use the same right-endpoint quadrature, so the discrete kernel mass
stays below the continuum one (and hence below 1).

Locally damped wave: frictional damping a * chi_{omega1} u_t with omega1
hugging the right endpoint (the multiplier condition for a reference point
left of the domain selects {1} as the controlled boundary portion), plus
delayed feedback b(t) * chi_{omega2} u_t(t - tau) on an arbitrary
subinterval omega2, not necessarily inside omega1.

A clamped-plate (fourth-order) analogue would only swap the stiffness block
for a discrete biharmonic operator; it is not assembled here.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadSubinterval,
    KernelMassExceedsOne,
    NonPositiveDecay,
    TruncationTooShort,
)
from .system import ANTI_DAMPING, DELAYED, DelaySystem, InnerProduct, save_matrix

_TRUNCATION_LIMIT = 1e-8


def _as_grid_values(f, x: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.asarray([float(f(xi)) for xi in x])
    arr = np.asarray(f, dtype=float).reshape(-1)
    if arr.size != x.size:
        raise ValueError(f"grid data has size {arr.size}, expected {x.size}")
    return arr


def dirichlet_stiffness(n_x: int) -> np.ndarray:
    """Second-difference Laplacian on n_x interior nodes, mesh 1/(n_x+1)."""
    dx = 1.0 / (n_x + 1)
    k = (np.diag(np.full(n_x, 2.0)) - np.diag(np.ones(n_x - 1), 1)
         - np.diag(np.ones(n_x - 1), -1)) / dx**2
    return k


def build_scalar(
    a: float,
    b_values=(0.0,),
    mode: str = DELAYED,
    cyclic: bool = True,
) -> DelaySystem:
    """u' = -a u + b u(t - tau) (or + b u in anti-damping mode), Gram = 1.

    The exact envelope is (M=1, mu=a).
    """
    if not a > 0:
        raise NonPositiveDecay(f"decay must be positive, got {a}")
    ops = tuple(np.array([[float(b)]]) for b in b_values)
    return DelaySystem(
        generator=np.array([[-float(a)]]),
        feedback_ops=ops,
        mode=mode,
        inner_product=InnerProduct.identity(1),
        cyclic=cyclic,
    )


@dataclass(frozen=True)
class MemoryKernel:
    """Exponential memory kernel mu0 * exp(-decay * s).

    Smooth, positive at zero, total mass mu0/decay required < 1, and
    derivative exactly -decay times the kernel.
    """

    mu0: float
    decay: float

    def __post_init__(self):
        if not self.mu0 > 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if not self.decay > 0:
            raise ValueError(f"decay rate must be positive, got {self.decay}")
        if not self.mass < 1.0:
            raise KernelMassExceedsOne(
                f"kernel mass mu0/decay = {self.mass} must be < 1"
            )

    @property
    def mass(self) -> float:
        return self.mu0 / self.decay

    def __call__(self, s) -> np.ndarray:
        return self.mu0 * np.exp(-self.decay * np.asarray(s, dtype=float))


@dataclass(frozen=True)
class ViscoelasticWaveModel:
    """Assembled wave-with-memory system, state (u, v, eta_1 .. eta_{n_s})."""

    n_x: int
    n_s: int
    s_max: float
    kernel: MemoryKernel
    system: DelaySystem
    x: np.ndarray
    s: np.ndarray
    stiffness: np.ndarray
    weights: np.ndarray
    discrete_mass: float

    @property
    def dim(self) -> int:
        return self.system.dim

    def initial_state(self, u0, u1, past=None) -> np.ndarray:
        """State vector from displacement u0, velocity u1 and the past of u.

        ``past(x, t)`` gives u for t <= 0; the history components are
        eta_j = u0 - past(., -s_j).  Without a past the history starts empty
        (u constant in time before zero).
        """
        u = _as_grid_values(u0, self.x)
        v = _as_grid_values(u1, self.x)
        parts = [u, v]
        for sj in self.s:
            if past is None:
                parts.append(np.zeros(self.n_x))
            else:
                parts.append(u - np.asarray([float(past(xi, -sj)) for xi in self.x]))
        return np.concatenate(parts)

    def energy(self, state: np.ndarray) -> float:
        return 0.5 * self.system.inner_product.inner(state, state)

    def dump(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        save_matrix(os.path.join(directory, "generator.txt"), self.system.generator)
        save_matrix(os.path.join(directory, "gram.txt"), self.system.inner_product.gram)
        for k, op in enumerate(self.system.feedback_ops):
            save_matrix(os.path.join(directory, f"feedback_{k}.txt"), op)


def build_viscoelastic_wave(
    n_x: int,
    n_s: int,
    s_max: float,
    kernel: MemoryKernel,
    b_values=(0.0,),
    cyclic: bool = True,
    dissipative_tol: float | None = None,
) -> ViscoelasticWaveModel:
    """Assemble the memory-wave system on n_x spatial and n_s age nodes.

    Age grid: s_j = j * ds on (0, s_max], ds = s_max/n_s, quadrature weights
    mu(s_j) * ds shared by the memory integral and the Gram.  Truncating the
    age axis at s_max is admissible only once the kernel has decayed to
    <= 1e-8 of its initial value.
    """
    if n_x < 2 or n_s < 2:
        raise ValueError("need n_x >= 2 and n_s >= 2")
    if math.exp(-kernel.decay * s_max) > _TRUNCATION_LIMIT:
        raise TruncationTooShort(
            f"exp(-decay*s_max) = {math.exp(-kernel.decay * s_max):.3e} "
            f"exceeds {_TRUNCATION_LIMIT}; lengthen s_max"
        )
    dx = 1.0 / (n_x + 1)
    x = np.arange(1, n_x + 1) * dx
    stiff = dirichlet_stiffness(n_x)
    ds = s_max / n_s
    s = np.arange(1, n_s + 1) * ds
    weights = kernel(s) * ds
    mass = float(weights.sum())  # right-endpoint rule: below the continuum mass

    dim = n_x * (2 + n_s)
    gen = np.zeros((dim, dim))
    sl_u = slice(0, n_x)
    sl_v = slice(n_x, 2 * n_x)

    def sl_eta(j):
        return slice((2 + j) * n_x, (3 + j) * n_x)

    eye = np.eye(n_x)
    gen[sl_u, sl_v] = eye
    gen[sl_v, sl_u] = -(1.0 - mass) * stiff
    for j in range(n_s):
        gen[sl_v, sl_eta(j)] = -weights[j] * stiff
        # upwind transport in s with inflow eta(0) = 0
        gen[sl_eta(j), sl_eta(j)] = -eye / ds
        if j > 0:
            gen[sl_eta(j), sl_eta(j - 1)] = eye / ds
        gen[sl_eta(j), sl_v] = eye

    gram = np.zeros((dim, dim))
    gram[sl_u, sl_u] = (1.0 - mass) * stiff
    gram[sl_v, sl_v] = eye
    for j in range(n_s):
        gram[sl_eta(j), sl_eta(j)] = weights[j] * stiff

    ops = []
    for b in b_values:
        op = np.zeros((dim, dim))
        op[sl_v, sl_v] = -float(b) * eye
        ops.append(op)

    system = DelaySystem(
        generator=gen,
        feedback_ops=tuple(ops),
        mode=DELAYED,
        inner_product=InnerProduct(gram),
        cyclic=cyclic,
        dissipative_tol=dissipative_tol,
    )
    return ViscoelasticWaveModel(
        n_x=n_x, n_s=n_s, s_max=float(s_max), kernel=kernel, system=system,
        x=x, s=s, stiffness=stiff, weights=weights, discrete_mass=mass,
    )


@dataclass(frozen=True)
class LocallyDampedWaveModel:
    """Assembled locally damped wave system, state (u, v)."""

    n_x: int
    a: float
    omega1: tuple[float, float]
    omega2: tuple[float, float]
    system: DelaySystem
    x: np.ndarray
    stiffness: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray

    @property
    def dim(self) -> int:
        return self.system.dim

    def initial_state(self, u0, u1) -> np.ndarray:
        return np.concatenate([_as_grid_values(u0, self.x), _as_grid_values(u1, self.x)])

    def energy(self, state: np.ndarray) -> float:
        return 0.5 * self.system.inner_product.inner(state, state)

    def dump(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        save_matrix(os.path.join(directory, "generator.txt"), self.system.generator)
        save_matrix(os.path.join(directory, "gram.txt"), self.system.inner_product.gram)
        for k, op in enumerate(self.system.feedback_ops):
            save_matrix(os.path.join(directory, f"feedback_{k}.txt"), op)


def build_locally_damped_wave(
    n_x: int,
    a: float,
    omega1: tuple[float, float] = (0.7, 1.0),
    omega2: tuple[float, float] = (0.0, 1.0),
    b_values=(0.0,),
    mode: str = DELAYED,
    cyclic: bool = True,
) -> LocallyDampedWaveModel:
    """Assemble the locally damped wave with feedback on an arbitrary omega2.

    omega1 = (l1, 1) must touch the right endpoint; omega2 may be any
    subinterval of (0, 1) and must capture at least one grid node (otherwise
    the feedback operator would vanish regardless of b).  a = 0 is allowed
    and yields a skew generator (energy conserved, no envelope exists).
    """
    if n_x < 2:
        raise ValueError("need n_x >= 2")
    if a < 0:
        raise NonPositiveDecay(f"damping coefficient must be >= 0, got {a}")
    l1, r1 = float(omega1[0]), float(omega1[1])
    if not (0.0 <= l1 < 1.0) or abs(r1 - 1.0) > 1e-12:
        raise BadSubinterval(f"omega1 must be (l1, 1) with 0 <= l1 < 1, got {omega1}")
    l2, r2 = float(omega2[0]), float(omega2[1])
    if not (0.0 <= l2 < r2 <= 1.0):
        raise BadSubinterval(f"omega2 must satisfy 0 <= l2 < r2 <= 1, got {omega2}")

    dx = 1.0 / (n_x + 1)
    x = np.arange(1, n_x + 1) * dx
    chi1 = (x > l1).astype(float)
    chi2 = ((x >= l2) & (x <= r2)).astype(float)
    if not chi2.any():
        raise BadSubinterval(f"omega2 = {omega2} captures no grid node at n_x = {n_x}")
    stiff = dirichlet_stiffness(n_x)

    zero = np.zeros((n_x, n_x))
    eye = np.eye(n_x)
    gen = np.block([[zero, eye], [-stiff, -a * np.diag(chi1)]])
    gram = np.block([[stiff, zero], [zero, eye]])
    ops = []
    for b in b_values:
        sign = -1.0 if mode == DELAYED else 1.0
        ops.append(np.block([[zero, zero], [zero, sign * float(b) * np.diag(chi2)]]))

    system = DelaySystem(
        generator=gen,
        feedback_ops=tuple(ops),
        mode=mode,
        inner_product=InnerProduct(gram),
        cyclic=cyclic,
    )
    return LocallyDampedWaveModel(
        n_x=n_x, a=float(a), omega1=(l1, r1), omega2=(l2, r2),
        system=system, x=x, stiffness=stiff, chi1=chi1, chi2=chi2,
    )
