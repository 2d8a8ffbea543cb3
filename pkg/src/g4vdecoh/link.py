"""Midpoint entanglement-swap link between two color-center spins.

Each node emits a photon entangled with its spin; the photons cross lossy
fiber to a midpoint beamsplitter station, and photon-number-resolving
detectors herald a spin-spin state. The spins decohere while the photons
fly (``t_swap``) and while the heralding signal travels back (``t_herald``).

Photonic modes are truncated at one photon on input (exact for these
sources) and two photons after the beamsplitters, which is exact for the
at-most-two-photon states that reach them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from .g4v import ModelConstants
from .lindblad import apply_on_factor, build_generator, multi_spin_propagator, spectral_propagator
from .metrics import hashing_bound
from .qstate import (
    DensityOperator,
    PureState,
    apply_kraus_on_factor,
    permute_factors,
    tensor,
)

SINGLE_RAIL = "single_rail"
DUAL_RAIL = "dual_rail"
ENCODINGS = (SINGLE_RAIL, DUAL_RAIL)


@dataclass(frozen=True)
class LinkConfig:
    length_km: float = 0.0
    alpha_db_per_km: float = 0.2
    c_medium: float = 2.0e8
    encoding: str = DUAL_RAIL
    dark_count_prob: float = 0.0
    visibility: float = 1.0

    def __post_init__(self):
        if self.length_km < 0:
            raise ValueError("length_km must be >= 0")
        if self.alpha_db_per_km < 0:
            raise ValueError("alpha_db_per_km must be >= 0")
        if self.c_medium <= 0:
            raise ValueError("c_medium must be > 0")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark_count_prob must lie in [0, 1)")

    def with_length(self, length_km: float) -> "LinkConfig":
        from dataclasses import replace

        return replace(self, length_km=length_km)


@dataclass(frozen=True)
class Timeline:
    t_emit: float
    t_swap: float
    t_herald: float

    @classmethod
    def of(cls, cfg: LinkConfig) -> "Timeline":
        t_swap = cfg.length_km * 1e3 / (2.0 * cfg.c_medium)
        return cls(0.0, t_swap, 2.0 * t_swap)


@dataclass(frozen=True)
class HeraldedLinkState:
    rho: DensityOperator
    success_prob: float
    timeline: Timeline
    evaluated_at: float

    @property
    def hashing_bound(self) -> float:
        return hashing_bound(self.rho, 4, 4)


def arm_transmissivity(cfg: LinkConfig) -> float:
    """Transmissivity of one arm (half the link) in the dB convention."""
    return 10.0 ** (-cfg.alpha_db_per_km * (cfg.length_km / 2.0) / 10.0)


# --- Fock-space helpers ---------------------------------------------------

def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1).astype(complex)


def mode_operator(op: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    d = op.shape[0]
    left = np.eye(d**mode)
    right = np.eye(d ** (n_modes - mode - 1))
    return np.kron(np.kron(left, op), right)


def beamsplitter(i: int, j: int, n_modes: int, cutoff: int, theta: float = math.pi / 4) -> np.ndarray:
    """``exp(theta (a_i^dag a_j - a_j^dag a_i))`` on the truncated Fock space.

    Photon number is conserved, so sectors with at most ``cutoff`` photons
    in total are represented exactly. On one photon:
    ``|1_i> -> cos|1_i> - sin|1_j>`` and ``|1_j> -> cos|1_j> + sin|1_i>``.
    """
    a = annihilation(cutoff)
    ai = mode_operator(a, i, n_modes)
    aj = mode_operator(a, j, n_modes)
    gen = theta * (ai.conj().T @ aj - aj.conj().T @ ai)
    return scipy.linalg.expm(gen)


def pure_loss_kraus(eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Pure-loss channel on one mode with at most one photon."""
    k0 = np.diag([1.0, math.sqrt(eta)]).astype(complex)
    k1 = np.array([[0.0, math.sqrt(1.0 - eta)], [0.0, 0.0]], dtype=complex)
    return k0, k1


def _fock_index(pattern: Sequence[int], dim: int) -> int:
    idx = 0
    for n in pattern:
        idx = idx * dim + n
    return idx


def _n_modes(encoding: str) -> int:
    return 1 if encoding == SINGLE_RAIL else 2


def _bs_pairs(encoding: str) -> list[tuple[int, int]]:
    # modes ordered [A rails..., B rails...]; rail r of A meets rail r of B
    m = _n_modes(encoding)
    return [(r, m + r) for r in range(m)]


def herald_patterns(encoding: str) -> list[tuple[int, ...]]:
    """Detector photon counts that herald success, reference pattern first.

    Single rail: exactly one photon in total. Dual rail: exactly one photon
    on each rail pair, one detector per rail clicking.
    """
    if encoding == SINGLE_RAIL:
        return [(1, 0), (0, 1)]
    pats = []
    for r1, r2 in itertools.product((0, 2), (1, 3)):
        p = [0, 0, 0, 0]
        p[r1] = p[r2] = 1
        pats.append(tuple(p))
    return sorted(pats, reverse=True)


@lru_cache(maxsize=None)
def _measurement_rows(encoding: str) -> dict:
    """``<pattern| U_bs |n_in>`` for every input pattern with <= 1 photon per mode."""
    n_modes = 2 * _n_modes(encoding)
    u = np.eye(3**n_modes, dtype=complex)
    for i, j in _bs_pairs(encoding):
        u = beamsplitter(i, j, n_modes, 2) @ u
    inputs = list(itertools.product((0, 1), repeat=n_modes))
    cols = [_fock_index(n, 3) for n in inputs]
    rows = {}
    for pat in herald_patterns(encoding):
        rows[pat] = u[_fock_index(pat, 3), cols]
    return rows


def spin_photon_source(encoding: str) -> PureState:
    """Spin (4 levels) entangled with a single- or dual-rail photonic qubit."""
    amp = 1.0 / math.sqrt(2.0)
    if encoding == SINGLE_RAIL:
        psi = np.zeros((4, 2), dtype=complex)
        psi[0, 0] = amp  # |1>|0>
        psi[1, 1] = amp  # |2>|1>
        return PureState(psi.reshape(-1), (4, 2))
    if encoding == DUAL_RAIL:
        psi = np.zeros((4, 2, 2), dtype=complex)
        psi[0, 0, 1] = amp  # |1>|0,1>
        psi[1, 1, 0] = amp  # |2>|1,0>
        return PureState(psi.reshape(-1), (4, 2, 2))
    raise ValueError(f"unknown encoding {encoding!r}")


def photon_number(state: PureState) -> float:
    """Mean total photon number of a spin-photon source state."""
    amps = np.abs(state.amplitudes.reshape(state.dims)) ** 2
    n = 0.0
    for idx in np.ndindex(*state.dims):
        n += amps[idx] * sum(idx[1:])
    return float(n)


def _check_detectors(cfg: LinkConfig):
    if cfg.dark_count_prob != 0.0 or cfg.visibility != 1.0:
        raise ValueError("only ideal detectors (dark_count_prob = 0, visibility = 1) are supported")


def pre_measurement_state(cfg: LinkConfig) -> DensityOperator:
    """Both spins and all photonic modes after fiber loss, dims ``(4, 4, modes...)``."""
    _check_detectors(cfg)
    src = spin_photon_source(cfg.encoding).to_density()
    joint = tensor(src, src)
    m = _n_modes(cfg.encoding)
    # (spinA, A modes, spinB, B modes) -> (spinA, spinB, A modes, B modes)
    order = [0, m + 1] + list(range(1, m + 1)) + list(range(m + 2, 2 * m + 2))
    joint = permute_factors(joint, order)
    eta = arm_transmissivity(cfg)
    kraus = pure_loss_kraus(eta)
    for f in range(2, 2 + 2 * m):
        joint = apply_kraus_on_factor(joint, f, kraus)
    return joint


def herald_outcomes(joint: DensityOperator, encoding: str) -> dict:
    """Unnormalized two-spin state for each heralding pattern."""
    n_spin = 16
    n_ph = joint.dim // n_spin
    m = joint.matrix.reshape(n_spin, n_ph, n_spin, n_ph)
    out = {}
    for pat, row in _measurement_rows(encoding).items():
        out[pat] = np.einsum("p,apbq,q->ab", row, m, row.conj())
    return out


def _from_outcomes(outcomes: dict, encoding: str) -> tuple[np.ndarray, float]:
    ref = herald_patterns(encoding)[0]
    total = sum(float(np.real(np.trace(o))) for o in outcomes.values())
    ref_m = outcomes[ref]
    return ref_m / np.real(np.trace(ref_m)), total


def heralded_swap(cfg: LinkConfig) -> HeraldedLinkState:
    """Heralded spin-spin state right at the swap, before any spin decoherence.

    ``rho`` is conditioned on the reference pattern (first of
    :func:`herald_patterns`); ``success_prob`` sums every heralding pattern,
    since the others differ from the reference only by a local phase flip.
    For the dual rail the reference pattern heralds ``(|1,2> + |2,1>)/sqrt(2)``.
    """
    joint = pre_measurement_state(cfg)
    rho, p = _from_outcomes(herald_outcomes(joint, cfg.encoding), cfg.encoding)
    tl = Timeline.of(cfg)
    return HeraldedLinkState(DensityOperator(rho, (4, 4)), p, tl, tl.t_swap)


AT_SWAP = "at_swap"
AT_HERALD = "at_herald"


def link_state_at(cfg: LinkConfig, c: ModelConstants, when: str = AT_HERALD, lv=None) -> HeraldedLinkState:
    """Heralded state after spin decoherence up to the swap or the herald arrival."""
    if when not in (AT_SWAP, AT_HERALD):
        raise ValueError(f"when must be {AT_SWAP!r} or {AT_HERALD!r}")
    base = heralded_swap(cfg)
    tl = base.timeline
    lv = lv if lv is not None else build_generator(c)
    e1 = spectral_propagator(lv, tl.t_swap)
    # spin flight channel commutes with the photonic heralding (disjoint factors)
    rho = apply_on_factor(e1, (4, 4), 0, base.rho)
    rho = apply_on_factor(e1, (4, 4), 1, rho)
    t = tl.t_swap
    if when == AT_HERALD:
        rho = multi_spin_propagator(e1, 2).apply(rho)
        t = tl.t_herald
    return HeraldedLinkState(rho, base.success_prob, tl, t)


def heralded_after_flight(cfg: LinkConfig, c: ModelConstants, lv=None) -> HeraldedLinkState:
    """Decohere the spins on the full spin-photon state first, then herald.

    Independent route to ``link_state_at(..., AT_SWAP)`` used to check that
    the spin channel and the photonic measurement commute.
    """
    joint = pre_measurement_state(cfg)
    lv = lv if lv is not None else build_generator(c)
    tl = Timeline.of(cfg)
    e1 = spectral_propagator(lv, tl.t_swap)
    rho = apply_on_factor(e1, joint.dims, 0, joint)
    rho = apply_on_factor(e1, joint.dims, 1, rho)
    rho_h, p = _from_outcomes(herald_outcomes(rho, cfg.encoding), cfg.encoding)
    return HeraldedLinkState(DensityOperator(rho_h, (4, 4)), p, tl, tl.t_swap)


@dataclass(frozen=True)
class SweepRow:
    length_km: float
    i_at_swap: float
    i_at_herald: float
    success_prob: float
    rho_at_swap: DensityOperator
    rho_at_herald: DensityOperator


def sweep_length(cfg: LinkConfig, c: ModelConstants, lengths: Sequence[float]) -> list[SweepRow]:
    """Hashing bounds at swap and at herald over a grid of link lengths."""
    lv = build_generator(c)
    rows = []
    for length in lengths:
        cl = cfg.with_length(float(length))
        s = link_state_at(cl, c, AT_SWAP, lv)
        h = link_state_at(cl, c, AT_HERALD, lv)
        rows.append(
            SweepRow(float(length), s.hashing_bound, h.hashing_bound, s.success_prob, s.rho, h.rho)
        )
    return rows
