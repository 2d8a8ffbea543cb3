import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from g4vdecoh.g4v import ModelConstants, level_ket
from g4vdecoh.lindblad import (
    Liouvillian,
    Propagator,
    StepSizeWarning,
    apply_on_factor,
    apply_on_factors,
    build_generator,
    composite_spec,
    devectorize,
    energy_operator,
    evolve_spectral,
    kraus_completeness_constant,
    kraus_evolve,
    kraus_set,
    liouvillian,
    multi_spin_propagator,
    phonon_spec,
    rk4_evolve,
    spectral_propagator,
    superoperator,
    vectorize,
)
from g4vdecoh.qstate import DensityOperator, StateError, partial_trace, tensor
from oracles import random_density, superoperator_by_columns


def moderate(gamma=1e3, nbar=0.5, omega_ratio=2.0):
    """Rates with omega' comparable to the dissipative scale (non-stiff)."""
    c = ModelConstants.from_rates(gamma, nbar)
    return c.replace(omega_a_prime=omega_ratio * c.total_rate)


def coherence_start():
    v = np.array([1, 1, 0, 0], dtype=complex) / math.sqrt(2)
    return np.outer(v, v.conj())


def choi(superop, d):
    return superop.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


# -- vectorization -------------------------------------------------------------

def test_vectorize_is_row_major():
    m = np.arange(16).reshape(4, 4)
    v = vectorize(m)
    assert v[1 * 4 + 2] == m[1, 2]
    np.testing.assert_array_equal(devectorize(v), m)
    with pytest.raises(ValueError):
        devectorize(np.zeros(15))


def test_vectorize_product_identity():
    rng = np.random.default_rng(0)
    a, b, r = (rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(np.kron(a, b.T) @ vectorize(r), vectorize(a @ r @ b), atol=1e-12)


# -- generator ------------------------------------------------------------------

@pytest.mark.parametrize("c", [moderate(), ModelConstants.physical(50e9, 0.5, gamma=1e6)])
def test_generator_matches_column_construction(c):
    spec = phonon_spec(c)
    ref = superoperator_by_columns(spec.rhs, 4)
    got = build_generator(c).matrix
    assert got.shape == (16, 16)
    np.testing.assert_allclose(got, ref, atol=1e-9 * np.abs(ref).max())


def test_generator_preserves_trace_exactly():
    lv = build_generator(ModelConstants.physical(50e9, 1.0, gamma=1e6))
    trace_row = np.eye(4).reshape(-1)
    assert np.max(np.abs(trace_row @ lv.matrix)) <= 1e-15 * np.abs(lv.matrix).max()


def test_energy_operator_sign_pattern():
    np.testing.assert_array_equal(np.diag(energy_operator()).real, [-1, -1, 1, 1])


def test_generator_elementwise_equations():
    c = moderate(gamma=2e3, nbar=0.3, omega_ratio=1.7)
    g, n, w = c.gamma, c.nbar, c.omega_a_prime
    rng = np.random.default_rng(5)
    rho = random_density(4, rng)
    d = phonon_spec(c).rhs(rho)
    # populations (level k is index k-1)
    assert d[3, 3] == pytest.approx(-g * (n + 1) * rho[3, 3] + g * n * rho[1, 1], rel=1e-12)
    assert d[1, 1] == pytest.approx(g * (n + 1) * rho[3, 3] - g * n * rho[1, 1], rel=1e-12)
    assert d[2, 2] == pytest.approx(-g * (n + 1) * rho[2, 2] + g * n * rho[0, 0], rel=1e-12)
    # coherence within the lower pair, within the upper pair, across the gap
    assert d[0, 1] == pytest.approx(-g * n * rho[0, 1], rel=1e-12)
    assert d[2, 3] == pytest.approx(-g * (n + 1) * rho[2, 3], rel=1e-12)
    assert d[0, 2] == pytest.approx((1j * w - g * (2 * n + 1) / 2) * rho[0, 2], rel=1e-12)
    assert d[1, 3] == pytest.approx((1j * w - g * (2 * n + 1) / 2) * rho[1, 3], rel=1e-12)


def test_cross_gap_coherence_rate_is_half_total_rate():
    # The cross-gap coherence decays at gamma (2 nbar + 1) / 2; a summary table
    # elsewhere quotes gamma (2 nbar + 1). Both are recorded; the generator wins.
    c = moderate(omega_ratio=0.0)
    rho0 = np.outer(level_ket(1) + level_ket(3), (level_ket(1) + level_ket(3)).conj()) / 2
    t = 0.7 / c.total_rate
    rho = spectral_propagator(build_generator(c), t).apply(rho0)
    assert abs(rho[0, 2]) == pytest.approx(0.5 * math.exp(-c.total_rate * t / 2), rel=1e-10)


# -- analytic laws ---------------------------------------------------------------

@pytest.mark.parametrize("temp", [0.1, 0.25, 0.5, 1.0])
def test_spin_coherence_decays_at_gamma_nbar(temp):
    c = ModelConstants.physical(50e9, temp, gamma=1e6)
    times = np.linspace(0, 3 / (c.gamma * c.nbar), 7)
    traj = evolve_spectral(build_generator(c), coherence_start(), times)
    np.testing.assert_allclose(np.abs(traj[:, 0, 1]), 0.5 * np.exp(-c.gamma * c.nbar * times), rtol=1e-8)
    # the populations are not frozen: thermal excitation drains the lower pair
    n, k = c.nbar, c.total_rate
    pop = 0.5 * ((n + 1) + n * np.exp(-k * times)) / (2 * n + 1)
    np.testing.assert_allclose(traj[:, 0, 0].real, pop, rtol=1e-9)


def test_upper_population_relaxes_to_detailed_balance():
    c = moderate(nbar=0.4)
    g, n = c.gamma, c.nbar
    rho0 = np.diag([0, 0, 0, 1.0]).astype(complex)
    t = 0.37 / c.total_rate
    rho = spectral_propagator(build_generator(c), t).apply(rho0)
    stat = n / (2 * n + 1)
    expected = stat + (1 - stat) * math.exp(-g * (2 * n + 1) * t)
    assert rho[3, 3].real == pytest.approx(expected, rel=1e-10)
    late = spectral_propagator(build_generator(c), 60 / c.total_rate).apply(rho0)
    assert late[3, 3].real / late[1, 1].real == pytest.approx(n / (n + 1), rel=1e-9)


def test_semigroup_property():
    c = moderate()
    lv = build_generator(c)
    rng = np.random.default_rng(11)
    rho = random_density(4, rng)
    t1, t2 = 0.3 / c.total_rate, 0.45 / c.total_rate
    a = spectral_propagator(lv, t1 + t2).apply(rho)
    b = spectral_propagator(lv, t2).apply(spectral_propagator(lv, t1).apply(rho))
    np.testing.assert_allclose(a, b, atol=1e-9)
    composed = spectral_propagator(lv, t2).compose(spectral_propagator(lv, t1))
    np.testing.assert_allclose(composed.matrix, spectral_propagator(lv, t1 + t2).matrix, atol=1e-9)
    assert composed.elapsed == pytest.approx(t1 + t2)


def test_spectral_matches_expm():
    c = moderate()
    lv = build_generator(c)
    t = 1.3 / c.total_rate
    np.testing.assert_allclose(spectral_propagator(lv, t).matrix, scipy.linalg.expm(lv.matrix * t), atol=1e-10)
    assert spectral_propagator(lv, 0.0).apply(coherence_start()) == pytest.approx(coherence_start())


def test_expm_fallback_on_defective_generator():
    jordan = np.zeros((4, 4), dtype=complex)
    jordan[0, 0] = jordan[1, 1] = -1.0
    jordan[0, 1] = 1.0
    lv = Liouvillian(jordan, 2)
    assert lv.eigensystem is None
    p = spectral_propagator(lv, 0.5)
    assert p.method == "expm"
    np.testing.assert_allclose(p.matrix, scipy.linalg.expm(jordan * 0.5))
    traj = evolve_spectral(lv, np.eye(2) / 2, [0.0, 0.5])
    np.testing.assert_allclose(traj[1], devectorize(scipy.linalg.expm(jordan * 0.5) @ vectorize(np.eye(2) / 2)))


rates = st.floats(min_value=1.0, max_value=1e7)


@settings(max_examples=40, deadline=None)
@given(rates, st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=0.0, max_value=3.0),
       st.floats(min_value=0.0, max_value=10.0), st.integers(0, 2**32 - 1))
def test_propagator_is_cptp(gamma, nbar, omega_ratio, x, seed):
    c = moderate(gamma, nbar, omega_ratio)
    p = spectral_propagator(build_generator(c), x / c.total_rate)
    cm = choi(p.matrix, 4)
    assert np.max(np.abs(cm - cm.conj().T)) < 1e-9
    assert np.linalg.eigvalsh(cm).min() > -1e-9
    rho = random_density(4, np.random.default_rng(seed))
    out = p.apply(rho)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.eigvalsh((out + out.conj().T) / 2).min() > -1e-9


# -- RK4 ------------------------------------------------------------------------

def test_rk4_agrees_with_spectral():
    c = moderate()
    rng = np.random.default_rng(2)
    rho = random_density(4, rng)
    t = 1.0 / c.total_rate
    ref = spectral_propagator(build_generator(c), t).apply(rho)
    out = rk4_evolve(rho, c, t, 1e-3 / c.total_rate)
    assert np.max(np.abs(out - ref)) < 1e-9


def test_rk4_fourth_order_convergence():
    c = moderate()
    rho = coherence_start()
    t = 1.0 / c.total_rate
    ref = spectral_propagator(build_generator(c), t).apply(rho)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        errs = [np.max(np.abs(rk4_evolve(rho, c, t, t / n) - ref)) for n in (10, 20, 40)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(3.7 < o < 4.3 for o in orders), orders


def test_rk4_warns_on_coarse_step():
    c = moderate()
    with pytest.warns(StepSizeWarning):
        rk4_evolve(coherence_start(), c, 1 / c.total_rate, 0.1 / c.total_rate)


def test_rk4_accepts_density_operator_and_zero_time():
    c = moderate()
    d = DensityOperator(coherence_start(), (4,))
    assert rk4_evolve(d, c, 0.0, 1.0) is d
    out = rk4_evolve(d, c, 1e-3 / c.total_rate, 1e-4 / c.total_rate)
    assert isinstance(out, DensityOperator)


# -- Kraus ----------------------------------------------------------------------

@pytest.mark.parametrize("omega_ratio", [0.0, 0.5, 2.0])
@pytest.mark.parametrize("x", [1e-4, 1e-3, 1e-2])
def test_kraus_completeness_defect_is_exact(omega_ratio, x):
    c = moderate(omega_ratio=omega_ratio)
    ks = kraus_set(c, x / c.total_rate)
    const = kraus_completeness_constant(c)
    assert ks.completeness_defect() == pytest.approx(const * x**2, rel=1e-6)


def test_kraus_completeness_constant_at_physical_frequency():
    c = ModelConstants.physical(50e9, 0.5, gamma=1e6)
    # the coherent frequency dominates; completeness needs dt far below 1/omega'
    assert kraus_completeness_constant(c) > 1e8


def test_kraus_step_size_guards():
    c = moderate()
    with pytest.raises(ValueError):
        kraus_set(c, 0.1 / c.total_rate)
    with pytest.warns(StepSizeWarning):
        kraus_set(c, 0.05 / c.total_rate)
    with pytest.raises(ValueError):
        kraus_set(c, -1.0)


def test_kraus_converges_first_order():
    c = moderate()
    rho = coherence_start()
    t = 1.0 / c.total_rate
    ref = spectral_propagator(build_generator(c), t).apply(rho)
    errs = []
    for n in (1000, 2000, 4000):
        ks = kraus_set(c, t / n)
        errs.append(np.max(np.abs(kraus_evolve(rho, ks, n) - ref)))
    assert errs[0] < 2e-3
    for a, b in zip(errs, errs[1:]):
        assert 1.8 < a / b < 2.2


def test_kraus_trace_drift_matches_defect_bound():
    c = moderate()
    x = 1e-3
    ks = kraus_set(c, x / c.total_rate)
    out = kraus_evolve(coherence_start(), ks, 1000)
    drift = abs(np.trace(out).real - 1.0)
    assert drift <= 1000 * kraus_completeness_constant(c) * x**2 * 1.01


# -- composite systems ----------------------------------------------------------

def test_multi_spin_matches_rk4_on_summed_generator():
    c = moderate(gamma=1e3, nbar=0.3, omega_ratio=1.0)
    rng = np.random.default_rng(8)
    rho = random_density(16, rng)
    t = 0.8 / c.total_rate
    e2 = multi_spin_propagator(spectral_propagator(build_generator(c), t), 2)
    ref = rk4_evolve(rho, composite_spec(phonon_spec(c), 2), t, 1e-3 / c.total_rate)
    assert np.max(np.abs(e2.apply(rho) - ref)) < 1e-9
    summed = superoperator(composite_spec(phonon_spec(c), 2))
    np.testing.assert_allclose(e2.matrix, scipy.linalg.expm(summed * t), atol=1e-9)


def test_multi_spin_on_product_state_factorizes():
    c = moderate()
    rng = np.random.default_rng(9)
    a = DensityOperator(random_density(4, rng), (4,))
    b = DensityOperator(random_density(4, rng), (4,))
    e = spectral_propagator(build_generator(c), 0.5 / c.total_rate)
    out = multi_spin_propagator(e, 2).apply(tensor(a, b).matrix)
    np.testing.assert_allclose(out, np.kron(e.apply(a.matrix), e.apply(b.matrix)), atol=1e-14)


def test_multi_spin_dimension_cap():
    e = spectral_propagator(build_generator(moderate()), 1e-4)
    assert multi_spin_propagator(e, 1) is e
    assert multi_spin_propagator(e, 3).dim == 64
    with pytest.raises(ValueError):
        multi_spin_propagator(e, 4)
    with pytest.raises(ValueError):
        multi_spin_propagator(e, 0)


def test_apply_on_factor_matches_embedded_generator():
    c = moderate()
    rng = np.random.default_rng(10)
    dims = (2, 4, 3)
    rho = DensityOperator(random_density(24, rng), dims)
    t = 0.6 / c.total_rate
    e = spectral_propagator(build_generator(c), t)
    got = apply_on_factor(e, dims, 1, rho)
    lifted = liouvillian(phonon_spec(c).embed(dims, 1))
    ref = spectral_propagator(lifted, t).apply(rho.matrix)
    np.testing.assert_allclose(got.matrix, ref, atol=1e-10)
    # untouched factors keep their marginals
    np.testing.assert_allclose(partial_trace(got, [0, 2]).matrix, partial_trace(rho, [0, 2]).matrix, atol=1e-12)


def test_apply_on_factors_commute():
    c = moderate()
    rng = np.random.default_rng(12)
    dims = (4, 4)
    rho = random_density(16, rng)
    e = spectral_propagator(build_generator(c), 0.4 / c.total_rate)
    ab = apply_on_factors(e, dims, [0, 1], rho)
    ba = apply_on_factors(e, dims, [1, 0], rho)
    np.testing.assert_allclose(ab, ba, atol=1e-14)
    np.testing.assert_allclose(ab, multi_spin_propagator(e, 2).apply(rho), atol=1e-13)


def test_apply_on_factor_rejects_mismatch():
    e = Propagator.identity(4)
    with pytest.raises(StateError):
        apply_on_factor(e, (2, 2), 0, np.eye(4) / 4)
    with pytest.raises(StateError):
        apply_on_factor(e, (4,), 1, np.eye(4) / 4)


@pytest.mark.parametrize("nbar", [1e-100, 9.5e-269])
def test_extreme_rate_ratio_still_trace_preserving(nbar):
    # eigen-solvers can return wrong vectors here; the propagator must notice
    c = moderate(1.125, nbar, 0.0)
    rho = random_density(4, np.random.default_rng(0))
    p = spectral_propagator(build_generator(c), 1.0 / c.total_rate)
    assert np.trace(p.apply(rho)).real == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(p.matrix, scipy.linalg.expm(build_generator(c).matrix / c.total_rate), atol=1e-12)
