"""Dense density-operator algebra over labelled tensor-product spaces.

Flat basis indices are row-major over the factor dimensions, leftmost
factor most significant (the same convention as ``np.kron``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_NEG_EIG = 1e-9
EIG_ZERO = 1e-12


class StateError(ValueError):
    """Raised for malformed states or inconsistent shapes."""


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise StateError(f"factor dimensions must be >= 1, got {dims}")
    return dims


@dataclass(frozen=True)
class PureState:
    """Normalized state vector with factor dimensions ``dims``."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise StateError(f"{amps.size} amplitudes do not fit dims {dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise StateError(f"state vector norm {norm!r} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, amplitudes, dims) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amps / np.linalg.norm(amps), tuple(dims))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def to_density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.dims)


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix together with its tensor-factor dimensions.

    Construction only checks shapes; call :func:`validate` for the
    physical checks (Hermiticity, trace, positivity).
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        m = np.array(self.matrix, dtype=complex)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise StateError(f"matrix shape {m.shape} does not match dims {dims}")
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def with_matrix(self, matrix: np.ndarray) -> "DensityOperator":
        return DensityOperator(matrix, self.dims)


State = Union[PureState, DensityOperator]


def basis_ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def maximally_mixed(dims: Sequence[int]) -> DensityOperator:
    n = int(np.prod(dims))
    return DensityOperator(np.eye(n) / n, tuple(dims))


def as_density(state: State) -> DensityOperator:
    if isinstance(state, PureState):
        return state.to_density()
    return state


def tensor(a: State, b: State) -> State:
    """Kronecker product of two states of the same kind."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims)
    raise TypeError("tensor() operands must both be PureState or both DensityOperator")


def tensor_all(states: Sequence[State]) -> State:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Reduce ``rho`` to the factors listed in ``keep`` (order preserved)."""
    dims = rho.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise StateError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise StateError(f"factor index out of range for dims {dims}: {keep}")
    traced = [k for k in range(n) if k not in keep]
    t = rho.matrix.reshape(dims + dims)
    # trace out from the highest index so remaining axis numbers stay valid
    for k in reversed(traced):
        n_cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + n_cur)
    kept_dims = tuple(dims[k] for k in keep)
    d = int(np.prod(kept_dims))
    return DensityOperator(t.reshape(d, d), kept_dims)


def permute_factors(rho: DensityOperator, order: Sequence[int]) -> DensityOperator:
    """Reorder tensor factors so that new factor ``i`` is old factor ``order[i]``."""
    order = list(order)
    n = len(rho.dims)
    if sorted(order) != list(range(n)):
        raise StateError(f"{order} is not a permutation of {n} factors")
    t = rho.matrix.reshape(rho.dims + rho.dims)
    t = t.transpose(order + [n + k for k in order])
    new_dims = tuple(rho.dims[k] for k in order)
    return DensityOperator(t.reshape(rho.dim, rho.dim), new_dims)


def apply_kraus_on_factor(
    rho: DensityOperator, factor: int, kraus_ops: Sequence[np.ndarray]
) -> DensityOperator:
    """Apply ``sum_k K rho K^dagger`` on one tensor factor, identity elsewhere."""
    dims = rho.dims
    n = len(dims)
    if not 0 <= factor < n:
        raise StateError(f"factor {factor} out of range for dims {dims}")
    t = rho.matrix.reshape(dims + dims)
    out = np.zeros_like(t)
    for k in kraus_ops:
        k = np.asarray(k, dtype=complex)
        if k.shape != (dims[factor], dims[factor]):
            raise StateError(f"Kraus operator shape {k.shape} does not act on factor dim {dims[factor]}")
        left = np.moveaxis(np.tensordot(k, t, axes=([1], [factor])), 0, factor)
        out += np.moveaxis(
            np.tensordot(left, k.conj(), axes=([n + factor], [1])), -1, n + factor
        )
    return rho.with_matrix(out.reshape(rho.dim, rho.dim))


def _hermitian_eigvals(m: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def _matrix_of(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    if isinstance(rho, PureState):
        return rho.to_density().matrix
    return np.asarray(rho, dtype=complex)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; eigenvalues in [-1e-9, 1e-12) count as zero."""
    m = _matrix_of(rho)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-8:
        raise StateError("von_neumann_entropy needs a Hermitian matrix")
    lam = _hermitian_eigvals(m)
    if lam.min() < -TOL_NEG_EIG:
        raise StateError(f"eigenvalue {lam.min():.3e} is too negative for a density matrix")
    lam = lam[lam > EIG_ZERO]
    return float(-np.sum(lam * np.log2(lam)))


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix via eigendecomposition."""
    h = 0.5 * (m + m.conj().T)
    lam, v = np.linalg.eigh(h)
    lam = np.clip(lam, 0.0, None)
    return (v * np.sqrt(lam)) @ v.conj().T


def _rank_one_vector(m: np.ndarray, tol: float = 1e-12):
    lam, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if lam[-1] > 0 and np.all(np.abs(lam[:-1]) < tol):
        return v[:, -1] * np.sqrt(lam[-1])
    return None


def fidelity(rho1, rho2) -> float:
    """Uhlmann fidelity ``Tr(sqrt(sqrt(rho1) rho2 sqrt(rho1)))**2``.

    Uses the overlap form when either argument is rank one.
    """
    a, b = _matrix_of(rho1), _matrix_of(rho2)
    if a.shape != b.shape:
        raise StateError(f"dimension mismatch: {a.shape} vs {b.shape}")
    for pure, other in ((b, a), (a, b)):
        psi = _rank_one_vector(pure)
        if psi is not None:
            return float(np.clip(np.real(psi.conj() @ other @ psi), 0.0, 1.0))
    s = psd_sqrt(a)
    inner = psd_sqrt(s @ b @ s)
    return float(np.clip(np.real(np.trace(inner)) ** 2, 0.0, 1.0))


def trace_distance(rho1, rho2) -> float:
    d = _matrix_of(rho1) - _matrix_of(rho2)
    return float(0.5 * np.sum(np.abs(_hermitian_eigvals(d))))


@dataclass(frozen=True)
class Diagnostics:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    tol: float

    @property
    def ok(self) -> bool:
        return (
            self.hermiticity_defect <= self.tol
            and self.trace_defect <= self.tol
            and self.min_eigenvalue >= -TOL_NEG_EIG
        )


def validate(rho, tol: float = TOL_HERM) -> Diagnostics:
    """Report Hermiticity, trace and positivity defects; never raises."""
    m = _matrix_of(rho)
    herm = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    tr = float(abs(np.trace(m) - 1.0))
    min_eig = float(_hermitian_eigvals(m).min())
    return Diagnostics(herm, tr, min_eig, tol)
