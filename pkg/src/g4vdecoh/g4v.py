"""Ground-manifold electronic structure of group-IV vacancy centers.

Hamiltonians are built in the orbital-spin product basis
``[e+ up, e+ down, e- up, e- down]`` and returned in angular frequency
(rad/s), so all input energies given in Hz are multiplied by 2*pi.

The four level labels used everywhere else in the package are::

    |1> = |e+, down>   |2> = |e-, up>   |3> = |e-, down>   |4> = |e+, up>

Level ``k`` sits at array index ``k - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants

TWO_PI = 2.0 * math.pi

# orbital basis (e+, e-), spin basis (up, down)
Z2 = np.diag([1.0, -1.0]).astype(complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y_ORB = np.array([[0, 1j], [-1j, 0]], dtype=complex)  # i|e+><e-| - i|e-><e+|
# Standard Pauli-Y for the spin: with this sign the closed-form mixed
# eigenvectors below carry B+ = Bx + iBy on the up-dominant states.
Y_SPIN = np.array([[0, -1j], [1j, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

# product-basis index of each level |1>..|4>
LEVEL_TO_PRODUCT = (1, 2, 3, 0)
N_LEVELS = 4


def product_to_level(op: np.ndarray) -> np.ndarray:
    """Re-express a product-basis operator in the |1>..|4> level basis."""
    p = list(LEVEL_TO_PRODUCT)
    return np.asarray(op)[np.ix_(p, p)]


def level_ket(k: int) -> np.ndarray:
    """Column vector for level ``k`` (1-based) in the level basis."""
    if not 1 <= k <= N_LEVELS:
        raise ValueError(f"level must be in 1..4, got {k}")
    v = np.zeros(N_LEVELS, dtype=complex)
    v[k - 1] = 1.0
    return v


def level_projector(k: int) -> np.ndarray:
    v = level_ket(k)
    return np.outer(v, v.conj())


def transition(k: int, l: int) -> np.ndarray:
    """``|k><l|`` in the level basis (1-based labels)."""
    return np.outer(level_ket(k), level_ket(l).conj())


@dataclass(frozen=True)
class VacancyParams:
    """Interaction strengths (Hz) and applied field (T)."""

    lambda_so: float = 50e9
    upsilon_x: float = 0.0
    upsilon_y: float = 0.0
    b_parallel: float = 0.0
    b_x: float = 0.0
    b_y: float = 0.0
    gamma_e: float = 2.0 * constants.physical_constants["Bohr magneton in Hz/T"][0]

    def __post_init__(self):
        if self.lambda_so < 0:
            raise ValueError("lambda_so must be non-negative")
        for name in ("upsilon_x", "upsilon_y", "b_parallel", "b_x", "b_y", "gamma_e"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def b_plus(self) -> complex:
        return complex(self.b_x, self.b_y)


def h_spin_orbit(p: VacancyParams) -> np.ndarray:
    return TWO_PI * (p.lambda_so / 2.0) * np.kron(Z2, Z2)


def h_jahn_teller(p: VacancyParams) -> np.ndarray:
    orb = p.upsilon_x * Y_ORB - p.upsilon_y * X2
    return TWO_PI * np.kron(orb, I2)


def h_zeeman(p: VacancyParams) -> np.ndarray:
    spin = p.b_parallel * Z2 + p.b_x * X2 + p.b_y * Y_SPIN
    return TWO_PI * (p.gamma_e / 2.0) * np.kron(I2, spin)


def h_zeeman_parallel(p: VacancyParams) -> np.ndarray:
    return TWO_PI * (p.gamma_e / 2.0) * p.b_parallel * np.kron(I2, Z2)


def _spinor(num: complex, split: float, bperp: float) -> np.ndarray:
    """Normalized ``(x, y)`` with ``x|up> + y|down>`` proportional to ``|up> + a|down>``.

    ``a = num / (split + sqrt(|num|^2 + split^2))``. For ``split < 0`` the
    equivalent form ``(conj(num), r - split)`` avoids cancellation.
    """
    if bperp == 0.0:
        return np.array([1.0, 0.0], dtype=complex)
    r = math.hypot(abs(num), split)
    if split >= 0:
        v = np.array([split + r, num], dtype=complex)
    else:
        v = np.array([np.conj(num), r - split], dtype=complex)
    v = v / np.abs(v).max()
    return v / np.linalg.norm(v)


def ground_manifold_eigensystem(p: VacancyParams, jt_tol: float = 0.0):
    """Eigenpairs of the ground-manifold Hamiltonian, ordered as levels 1..4.

    Returns a list of ``(eigenvalue_rad_s, eigenvector)`` with vectors in the
    product basis. Without Jahn-Teller terms (``|Upsilon| <= jt_tol``) the
    closed-form spin-mixed states are used; otherwise the full Hamiltonian is
    diagonalized numerically and the pairs are sorted by energy.
    """
    if max(abs(p.upsilon_x), abs(p.upsilon_y)) > jt_tol:
        h = h_spin_orbit(p) + h_jahn_teller(p) + h_zeeman(p)
        w, v = np.linalg.eigh(h)
        return [(float(w[i]), v[:, i]) for i in range(4)]

    g_bp = p.gamma_e * p.b_plus
    g_bz = p.gamma_e * p.b_parallel
    bperp = abs(p.b_plus)
    split_p = p.lambda_so + g_bz  # e+ branch effective spin splitting (Hz)
    split_m = p.lambda_so - g_bz  # e- branch

    e_plus = np.array([1, 0], dtype=complex)
    e_minus = np.array([0, 1], dtype=complex)
    x, y = _spinor(g_bp, split_p, bperp)
    u, w = _spinor(-g_bp, split_m, bperp)
    # |1> ~ e+ down, |2> ~ e- up, |3> ~ e- down, |4> ~ e+ up
    vecs = [
        np.kron(e_plus, [-np.conj(y), np.conj(x)]),
        np.kron(e_minus, [u, w]),
        np.kron(e_minus, [-np.conj(w), np.conj(u)]),
        np.kron(e_plus, [x, y]),
    ]
    h = h_spin_orbit(p) + h_zeeman(p)
    return [(float(np.real(v.conj() @ h @ v)), v) for v in vecs]


def thermal_occupation(delta: float, temperature: float) -> float:
    """Bose-Einstein occupation at ordinary frequency ``delta`` (Hz)."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0 (use nbar = 0 for the T -> 0 limit)")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    x = constants.h * delta / (constants.k * temperature)
    if x > 700.0:  # expm1 overflows near 709.8; the tail is exp(-x)
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def temperature_for_occupation(delta: float, nbar: float) -> float:
    """Inverse of :func:`thermal_occupation`; ``nbar = 0`` maps to 0 K."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        return 0.0
    return constants.h * delta / (constants.k * math.log1p(1.0 / nbar))


def coupling_rate(g0chi0: float, delta: float) -> float:
    if g0chi0 < 0:
        raise ValueError("g0chi0 must be non-negative")
    return TWO_PI * g0chi0 * delta**3


def calibrate_g0chi0(gamma: float, delta: float) -> float:
    """``g0chi0`` giving coupling rate ``gamma`` at splitting ``delta``."""
    return gamma / (TWO_PI * delta**3)


@dataclass(frozen=True)
class ModelConstants:
    """Physical parameters feeding the phonon Lindblad generator.

    ``delta`` is an ordinary frequency (Hz), ``gamma`` is in 1/s and
    ``omega_a_prime`` is the (shifted) splitting in rad/s.
    """

    delta: float
    temperature: float
    g0chi0: float
    nbar: float
    gamma: float
    omega_a_prime: float

    @classmethod
    def physical(
        cls,
        delta: float,
        temperature: float,
        *,
        g0chi0: Optional[float] = None,
        gamma: Optional[float] = None,
        omega_a_prime: Optional[float] = None,
    ) -> "ModelConstants":
        if (g0chi0 is None) == (gamma is None):
            raise ValueError("give exactly one of g0chi0 or gamma")
        if g0chi0 is None:
            g0chi0 = calibrate_g0chi0(gamma, delta)
        rate = coupling_rate(g0chi0, delta)
        nbar = thermal_occupation(delta, temperature)
        if omega_a_prime is None:
            omega_a_prime = TWO_PI * delta
        return cls(delta, temperature, g0chi0, nbar, rate, omega_a_prime)

    @classmethod
    def from_rates(
        cls,
        gamma: float,
        nbar: float,
        *,
        delta: float = 50e9,
        omega_a_prime: Optional[float] = None,
    ) -> "ModelConstants":
        """Constants hitting a target ``(gamma, nbar)``; temperature is back-solved."""
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        temperature = temperature_for_occupation(delta, nbar)
        if omega_a_prime is None:
            omega_a_prime = TWO_PI * delta
        return cls(delta, temperature, calibrate_g0chi0(gamma, delta), nbar, gamma, omega_a_prime)

    def replace(self, **changes) -> "ModelConstants":
        from dataclasses import replace

        return replace(self, **changes)

    @property
    def total_rate(self) -> float:
        """``gamma * (2 nbar + 1)``, the population relaxation rate of each pair."""
        return self.gamma * (2.0 * self.nbar + 1.0)
