"""Phonon-coupling Lindblad generator and its three evolution backends.

Density matrices are vectorized row-major, ``vec(rho)[i*d + j] = rho[i, j]``,
so that ``vec(A rho B) = kron(A, B.T) @ vec(rho)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .g4v import ModelConstants, level_projector, transition
from .qstate import DensityOperator, StateError

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
MAX_COMPOSITE_DIM = 4**3
KRAUS_RATE_DT_MAX = 0.1
KRAUS_RATE_DT_WARN = 0.01


class StepSizeWarning(UserWarning):
    pass


def energy_operator() -> np.ndarray:
    """``|4><4| - |2><2| + |3><3| - |1><1|``, the splitting operator."""
    return np.diag([-1.0, -1.0, 1.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class LindbladSpec:
    """Hamiltonian (rad/s) plus jump operators with their rates (1/s)."""

    hamiltonian: np.ndarray
    jump_ops: tuple = ()  # tuple of (operator, rate)

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12 * max(1.0, np.abs(h).max()):
            raise ValueError("hamiltonian must be Hermitian")
        jumps = tuple((np.asarray(op, dtype=complex), float(rate)) for op, rate in self.jump_ops)
        for op, rate in jumps:
            if rate < 0:
                raise ValueError("jump rates must be non-negative")
            if op.shape != h.shape:
                raise ValueError("jump operator shape does not match the Hamiltonian")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jump_ops", jumps)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """``d rho / dt`` in matrix form."""
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for op, rate in self.jump_ops:
            if rate == 0.0:
                continue
            ld = op.conj().T
            ldl = ld @ op
            out += rate * (op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
        return out

    def embed(self, dims: Sequence[int], factor: int) -> "LindbladSpec":
        """Lift this single-factor generator to act on ``factor`` of ``dims``."""
        dims = tuple(dims)
        if dims[factor] != self.dim:
            raise StateError(f"factor {factor} has dim {dims[factor]}, generator acts on {self.dim}")
        left = np.eye(int(np.prod(dims[:factor])))
        right = np.eye(int(np.prod(dims[factor + 1:])))

        def lift(op):
            return np.kron(np.kron(left, op), right)

        return LindbladSpec(lift(self.hamiltonian), tuple((lift(op), r) for op, r in self.jump_ops))

    def __add__(self, other: "LindbladSpec") -> "LindbladSpec":
        return LindbladSpec(self.hamiltonian + other.hamiltonian, self.jump_ops + other.jump_ops)


def phonon_spec(c: ModelConstants) -> LindbladSpec:
    """Hamiltonian and the four phonon jump operators of the color center."""
    g, n = c.gamma, c.nbar
    return LindbladSpec(
        0.5 * c.omega_a_prime * energy_operator(),
        (
            (transition(2, 4), g * (n + 1)),
            (transition(4, 2), g * n),
            (transition(1, 3), g * (n + 1)),
            (transition(3, 1), g * n),
        ),
    )


def composite_spec(spec: LindbladSpec, n: int) -> LindbladSpec:
    """Generator sum over ``n`` identical, independent subsystems."""
    dims = (spec.dim,) * n
    out = spec.embed(dims, 0)
    for k in range(1, n):
        out = out + spec.embed(dims, k)
    return out


def vectorize(rho) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    return m.reshape(-1).astype(complex)


def devectorize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    d = math.isqrt(vec.size)
    if d * d != vec.size:
        raise ValueError(f"vector length {vec.size} is not a perfect square")
    return vec.reshape(d, d)


def superoperator(spec: LindbladSpec) -> np.ndarray:
    d = spec.dim
    eye = np.eye(d)
    h = spec.hamiltonian
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in spec.jump_ops:
        ldl = op.conj().T @ op
        out += rate * (
            np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T)
        )
    return out


@dataclass(frozen=True)
class Liouvillian:
    """Vectorized generator, ``d vec(rho)/dt = matrix @ vec(rho)``."""

    matrix: np.ndarray
    dim: int

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return devectorize(self.matrix @ vectorize(rho))

    @cached_property
    def eigensystem(self):
        """``(eigenvalues, V, V^-1)`` or ``None`` when the decomposition is unreliable.

        Besides the conditioning of ``V``, the eigen-residual is checked:
        LAPACK's balancing can return wrong vectors when entries span hundreds
        of orders of magnitude (e.g. ``nbar ~ 1e-100``).
        """
        m = self.matrix
        scale = np.abs(m).max(initial=0.0)
        lam, v = np.linalg.eig(m)
        cond = np.linalg.cond(v)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            logger.warning("Liouvillian eigenvectors ill-conditioned (cond=%.3g); using expm", cond)
            return None
        resid = np.abs(m @ v - v * lam).max(initial=0.0)
        if resid > 1e-10 * max(scale, np.finfo(float).tiny):
            logger.warning("Liouvillian eigen-residual %.3g too large; using expm", resid)
            return None
        return lam, v, np.linalg.inv(v)


def build_generator(c: ModelConstants) -> Liouvillian:
    return liouvillian(phonon_spec(c))


def liouvillian(spec: LindbladSpec) -> Liouvillian:
    return Liouvillian(superoperator(spec), spec.dim)


@dataclass(frozen=True)
class Propagator:
    """Superoperator for a fixed elapsed time; ``method`` records the backend."""

    matrix: np.ndarray
    elapsed: float
    dim: int
    method: str = "spectral"

    def apply(self, rho):
        out = devectorize(self.matrix @ vectorize(rho))
        if isinstance(rho, DensityOperator):
            return rho.with_matrix(out)
        return out

    def compose(self, other: "Propagator") -> "Propagator":
        """``self`` after ``other``."""
        return Propagator(self.matrix @ other.matrix, self.elapsed + other.elapsed, self.dim, self.method)

    @classmethod
    def identity(cls, dim: int) -> "Propagator":
        return cls(np.eye(dim * dim, dtype=complex), 0.0, dim, "identity")


def spectral_propagator(lv: Liouvillian, t: float) -> Propagator:
    """``V diag(exp(lambda t)) V^-1`` with scaling-and-squaring fallback."""
    if t == 0:
        return Propagator(np.eye(lv.matrix.shape[0], dtype=complex), 0.0, lv.dim, "spectral")
    eig = lv.eigensystem
    if eig is None:
        return Propagator(scipy.linalg.expm(lv.matrix * t), t, lv.dim, "expm")
    lam, v, vinv = eig
    return Propagator((v * np.exp(lam * t)) @ vinv, t, lv.dim, "spectral")


def evolve_spectral(lv: Liouvillian, rho, times: Sequence[float]) -> np.ndarray:
    """States at each of ``times`` from one eigendecomposition, shape ``(n, d, d)``."""
    r0 = vectorize(rho)
    times = np.asarray(times, dtype=float)
    eig = lv.eigensystem
    if eig is None:
        out = [scipy.linalg.expm(lv.matrix * t) @ r0 for t in times]
        return np.array(out).reshape(len(times), lv.dim, lv.dim)
    lam, v, vinv = eig
    alpha = vinv @ r0
    out = (np.exp(np.outer(times, lam)) * alpha) @ v.T
    return out.reshape(len(times), lv.dim, lv.dim)


def _spec_of(model) -> LindbladSpec:
    return phonon_spec(model) if isinstance(model, ModelConstants) else model


def _spectral_radius_bound(spec: LindbladSpec) -> float:
    h = spec.hamiltonian
    eig = np.linalg.eigvalsh(h)
    rate = sum(r * np.linalg.norm(op, 2) ** 2 for op, r in spec.jump_ops)
    return float(eig.max() - eig.min()) + rate


def rk4_evolve(rho, model, t: float, dt: float):
    """Fixed-step classic RK4 of the master equation in matrix form.

    ``model`` is either :class:`ModelConstants` or a :class:`LindbladSpec`.
    The step is shrunk so that an integer number of steps lands on ``t``.
    """
    spec = _spec_of(model)
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    if t == 0:
        return rho
    n_steps = max(1, math.ceil(t / dt - 1e-12))
    h = t / n_steps
    if h * _spectral_radius_bound(spec) > 0.01:
        warnings.warn(
            f"RK4 step {h:.3g} s exceeds 0.01 / (generator rate scale); accuracy not guaranteed",
            StepSizeWarning,
            stacklevel=2,
        )
    f = spec.rhs
    y = m.astype(complex)
    for _ in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if isinstance(rho, DensityOperator):
        return rho.with_matrix(y)
    return y


@dataclass(frozen=True)
class KrausSet:
    dt: float
    ops: tuple = field(default_factory=tuple)

    def completeness_defect(self) -> float:
        s = sum(m.conj().T @ m for m in self.ops)
        return float(np.max(np.abs(s - np.eye(s.shape[0]))))


def kraus_set(c: ModelConstants, dt: float) -> KrausSet:
    """First-order Kraus operators ``M0 = I + (K - iH) dt``, ``Mk = sqrt(rate dt) Lk``.

    Completeness holds up to ``O(dt**2)``: the exact defect is
    ``(K**2 + H**2) dt**2`` (both diagonal), see :func:`kraus_completeness_constant`.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    x = c.total_rate * dt
    if x >= KRAUS_RATE_DT_MAX:
        raise ValueError(f"gamma (2 nbar + 1) dt = {x:.3g} must be < {KRAUS_RATE_DT_MAX}")
    if x > KRAUS_RATE_DT_WARN:
        warnings.warn(f"gamma (2 nbar + 1) dt = {x:.3g} > {KRAUS_RATE_DT_WARN}", StepSizeWarning, stacklevel=2)
    g, n, w = c.gamma, c.nbar, c.omega_a_prime
    upper = level_projector(4) + level_projector(3)
    lower = level_projector(2) + level_projector(1)
    m0 = np.eye(4) - 0.5 * ((g * (n + 1) + 1j * w) * upper + (g * n - 1j * w) * lower) * dt
    ops = (
        m0,
        math.sqrt(g * (n + 1) * dt) * transition(2, 4),
        math.sqrt(g * n * dt) * transition(4, 2),
        math.sqrt(g * (n + 1) * dt) * transition(1, 3),
        math.sqrt(g * n * dt) * transition(3, 1),
    )
    return KrausSet(dt, ops)


def kraus_completeness_constant(c: ModelConstants) -> float:
    """``c`` with ``max|sum M^dag M - I| = c (gamma (2 nbar + 1) dt)**2`` exactly."""
    if c.total_rate == 0:
        return math.inf if c.omega_a_prime else 0.0
    worst = max((c.gamma * (c.nbar + 1)) ** 2, (c.gamma * c.nbar) ** 2) + c.omega_a_prime**2
    return worst / (4.0 * c.total_rate**2)


def kraus_step(rho: np.ndarray, ks: KrausSet) -> np.ndarray:
    return sum(m @ rho @ m.conj().T for m in ks.ops)


def kraus_evolve(rho, ks: KrausSet, n_steps: int):
    """Apply the Kraus map ``n_steps`` times; trace drift is left in place."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    ops = np.array(ks.ops)
    opsd = ops.conj().transpose(0, 2, 1)
    for _ in range(n_steps):
        m = np.einsum("kij,jl,klm->im", ops, m, opsd)
    if isinstance(rho, DensityOperator):
        return rho.with_matrix(m)
    return m


def _superop_tensor_perm(d: int, n: int) -> np.ndarray:
    # index of (i1, j1, i2, j2, ...) layout in the (i1..in, j1..jn) layout
    shape = (d, d) * n
    idx = np.arange(d ** (2 * n)).reshape(shape)
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    return idx.transpose(order).reshape(-1)


def multi_spin_propagator(e: Propagator, n: int, max_dim: int = MAX_COMPOSITE_DIM) -> Propagator:
    """Superoperator of ``E`` acting independently on each of ``n`` subsystems.

    Since the per-subsystem generators commute, this is the exponential of the
    generator sum over subsystems.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = e.dim
    if d**n > max_dim:
        raise ValueError(f"composite Hilbert dimension {d ** n} exceeds cap {max_dim}")
    if n == 1:
        return e
    big = e.matrix
    for _ in range(n - 1):
        big = np.kron(big, e.matrix)
    perm = _superop_tensor_perm(d, n)
    out = big[np.ix_(perm, perm)]
    return Propagator(out, e.elapsed, d**n, e.method)


def apply_on_factor(e: Propagator, dims: Sequence[int], factor: int, rho):
    """Apply a single-factor channel to ``factor`` of a multi-factor state."""
    dims = tuple(dims)
    n = len(dims)
    if not 0 <= factor < n:
        raise StateError(f"factor {factor} out of range for dims {dims}")
    if dims[factor] != e.dim:
        raise StateError(f"propagator acts on dim {e.dim}, factor {factor} has dim {dims[factor]}")
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    d = e.dim
    t = m.reshape(dims + dims)
    e4 = e.matrix.reshape(d, d, d, d)
    out = np.tensordot(e4, t, axes=([2, 3], [factor, n + factor]))
    # out axes: (i', j', rest...) with rest in original order minus the two traced axes
    out = np.moveaxis(out, [0, 1], [factor, n + factor])
    out = out.reshape(m.shape)
    if isinstance(rho, DensityOperator):
        return rho.with_matrix(out)
    return out


def apply_on_factors(e: Propagator, dims: Sequence[int], factors: Sequence[int], rho):
    for k in factors:
        rho = apply_on_factor(e, dims, k, rho)
    return rho
