"""Entanglement and coherence metrics, and single-exponential decay fits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .g4v import ModelConstants
from .lindblad import build_generator, evolve_spectral, multi_spin_propagator, spectral_propagator
from .qstate import DensityOperator, StateError, partial_trace, von_neumann_entropy

DEFAULT_FLOOR = 1e-6
# total log-decay across the window below this is indistinguishable from rounding
MIN_LOG_DECAY = 1e-9


class FitError(ValueError):
    pass


def coherence_element(rho, bra: int, ket: int) -> complex:
    """``<bra|rho|ket>`` for 1-based level labels."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    d = m.shape[0]
    if not (1 <= bra <= d and 1 <= ket <= d):
        raise IndexError(f"levels must be in 1..{d}, got ({bra}, {ket})")
    return complex(m[bra - 1, ket - 1])


def coherent_information(rho_ab, dim_a: int, dim_b: int) -> tuple[float, float]:
    """``(S(A) - S(AB), S(B) - S(AB))`` in bits."""
    m = rho_ab.matrix if isinstance(rho_ab, DensityOperator) else np.asarray(rho_ab)
    if dim_a * dim_b != m.shape[0]:
        raise StateError(f"dimA*dimB = {dim_a * dim_b} does not match state dimension {m.shape[0]}")
    rho = DensityOperator(m, (dim_a, dim_b))
    s_ab = von_neumann_entropy(rho)
    s_a = von_neumann_entropy(partial_trace(rho, [0]))
    s_b = von_neumann_entropy(partial_trace(rho, [1]))
    return s_a - s_ab, s_b - s_ab


def hashing_bound(rho_ab, dim_a: int, dim_b: int) -> float:
    """Hashing bound in ebits per copy; negative values are not clamped."""
    return min(coherent_information(rho_ab, dim_a, dim_b))


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def above_floor(self, floor: float = DEFAULT_FLOOR) -> "DecayCurve":
        """Leading samples until the first one at or below ``floor * values[0]``."""
        thresh = floor * self.values[0]
        bad = np.nonzero(self.values <= thresh)[0]
        stop = bad[0] if bad.size else self.values.size
        return DecayCurve(self.times[:stop], self.values[:stop])


@dataclass(frozen=True)
class FitResult:
    tau: float
    amplitude: float
    residual_rms: float
    n_used: int


def fit_exponential(
    curve: DecayCurve,
    amplitude_fixed: Optional[float] = None,
    floor: Optional[float] = None,
) -> FitResult:
    """Fit ``A exp(-t / tau)`` by least squares on ``log(values)``.

    With ``amplitude_fixed`` only the slope is fitted. When ``floor`` is given
    the curve is first cut at the first sample below ``floor * values[0]``;
    otherwise any non-positive sample is an error. A curve whose fitted decay
    across the window is at rounding level raises :class:`FitError`.
    """
    if floor is not None:
        curve = curve.above_floor(floor)
    t, v = curve.times, curve.values
    if t.size < 3:
        raise FitError(f"need at least 3 samples above the floor, got {t.size}")
    if np.any(v <= 0):
        raise FitError(
            "curve has non-positive samples; truncate it above a floor "
            f"(e.g. floor={DEFAULT_FLOOR:g} of the initial value) before fitting"
        )
    y = np.log(v)
    if amplitude_fixed is not None:
        if amplitude_fixed <= 0:
            raise FitError("amplitude_fixed must be positive")
        log_a = np.log(amplitude_fixed)
        denom = np.dot(t, t)
        if denom == 0:
            raise FitError("all samples at t = 0")
        slope = np.dot(t, y - log_a) / denom
    else:
        slope, log_a = np.polyfit(t, y, 1)
    if not -slope * (t.max() - t.min()) > MIN_LOG_DECAY:
        raise FitError(f"curve does not decay over the window (log-slope {slope:.3g})")
    tau = -1.0 / slope
    amp = float(np.exp(log_a))
    resid = v - amp * np.exp(-t / tau)
    return FitResult(float(tau), amp, float(np.sqrt(np.mean(resid**2))), int(t.size))


def equal_superposition() -> DensityOperator:
    psi = np.array([1, 1, 0, 0], dtype=complex) / np.sqrt(2)
    return DensityOperator(np.outer(psi, psi.conj()), (4,))


def bell_pair() -> DensityOperator:
    """``(|1,2> + |2,1>)/sqrt(2)`` on two four-level spins."""
    psi = np.zeros(16, dtype=complex)
    psi[0 * 4 + 1] = psi[1 * 4 + 0] = 1 / np.sqrt(2)
    return DensityOperator(np.outer(psi, psi.conj()), (4, 4))


def evolve_trajectory(c: ModelConstants, initial: DensityOperator, times: Sequence[float]) -> np.ndarray:
    """Spectral evolution of ``initial`` with each 4-level factor decohering independently."""
    lv = build_generator(c)
    n = len(initial.dims)
    if n == 1:
        return evolve_spectral(lv, initial.matrix, times)
    out = []
    r0 = initial.matrix.reshape(-1)
    for t in times:
        e = multi_spin_propagator(spectral_propagator(lv, t), n)
        out.append((e.matrix @ r0).reshape(initial.dim, initial.dim))
    return np.array(out)


def spin_coherence(rho) -> float:
    return abs(coherence_element(rho, 1, 2))


def two_spin_hashing_bound(rho) -> float:
    return hashing_bound(rho, 4, 4)


@dataclass(frozen=True)
class ScanRow:
    temperature: float
    fit: FitResult
    times: np.ndarray
    values: np.ndarray

    @property
    def tau(self) -> float:
        return self.fit.tau


def decoherence_scan(
    grid: Sequence[ModelConstants],
    initial: DensityOperator,
    horizon,
    n_samples: int,
    observable: Optional[Callable] = None,
    amplitude_fixed: Optional[float] = None,
    floor: float = DEFAULT_FLOOR,
) -> list[ScanRow]:
    """Evolve ``initial`` at each grid point, sample ``observable``, fit tau.

    ``horizon`` is a time in seconds or one time per grid point. Defaults pick
    the spin coherence (amplitude 0.5) for one spin and the hashing bound
    (amplitude 1) for two spins.
    """
    two = len(initial.dims) == 2
    if observable is None:
        observable = two_spin_hashing_bound if two else spin_coherence
    if amplitude_fixed is None:
        amplitude_fixed = 1.0 if two else 0.5
    horizons = np.broadcast_to(np.asarray(horizon, dtype=float), (len(grid),))
    rows = []
    for c, h in zip(grid, horizons):
        times = np.linspace(0.0, h, n_samples)
        traj = evolve_trajectory(c, initial, times)
        values = np.array([observable(r) for r in traj])
        fit = fit_exponential(DecayCurve(times, values), amplitude_fixed, floor=floor)
        rows.append(ScanRow(c.temperature, fit, times, values))
    return rows
