import numpy as np
import pytest

from quantum_clock.clock_model import ClockParams, gaussian_state, hamiltonian_matrix, propagator_matrix, tick_state
from quantum_clock.composite import (
    CompositeState,
    Interaction,
    InteractionClass,
    SystemD,
    check_compatibility,
    classify_interaction,
    clock_extension,
    energy_exchange,
    evolve_composite,
    measure_duration,
    perturbed_time_expectation,
    two_level_system,
    uncoupled,
)
from quantum_clock.errors import DimensionMismatch, IncompatibleSystem, InsufficientData, StrongInteraction
from quantum_clock.experiments import overlap_rule
from quantum_clock.time_operator import time_operator_matrix

P16 = ClockParams(1.0, 16, 8)
P32 = ClockParams(1.0, 32, 16)
NS = (16, 32, 64, 128)


def test_system_validation():
    with pytest.raises(DimensionMismatch):
        SystemD(np.zeros((1, 1)))
    with pytest.raises(DimensionMismatch):
        SystemD(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        SystemD(np.array([[0, 1], [0, 0]]))
    s = two_level_system(0.5)
    assert np.allclose(s.propagator(np.pi / 0.5), np.diag([1, -1]))


def test_compatibility_examples():
    system, emb = clock_extension(P16, np.eye(2))
    ok, defect = check_compatibility(system, emb, P16)
    assert ok and defect == 0.0
    system, emb = clock_extension(P16, np.eye(2), scale=1.01)
    ok, defect = check_compatibility(system, emb, P16)
    # the largest |H_mn| is 1/tau, at the nearest neighbours
    assert not ok and defect == pytest.approx(0.01, rel=1e-10)
    coupling = np.full((P16.dim, 2), 1e-12)
    system, emb = clock_extension(P16, np.eye(2), coupling=coupling)
    assert check_compatibility(system, emb, P16)[0]
    with pytest.raises(DimensionMismatch):
        check_compatibility(system, emb[:-1], P16)
    with pytest.raises(DimensionMismatch):
        check_compatibility(system, 2 * emb, P16)


def _trajectory(kind, tau=1.0):
    rule = overlap_rule(kind)

    def traj(t, N):
        q = ClockParams(tau, N)
        return propagator_matrix(t, q).entries @ rule(q.indices)

    return traj


def test_classify_zero_overlap():
    cls = classify_interaction(_trajectory("zero"), [0.0, 1.0], NS)
    assert cls.value is Interaction.NONE


def test_classify_geometric_weak():
    cls = classify_interaction(_trajectory("geometric"), [0.0, 1.0, 2.0], NS)
    assert cls.value is Interaction.WEAK
    assert set(cls.verdicts) == {"convergent"}


def test_classify_inverse_strong():
    cls = classify_interaction(_trajectory("inverse"), [0.0, 1.0], NS)
    assert cls.value is Interaction.STRONG


def test_classify_undecided_warns():
    with pytest.warns(UserWarning):
        cls = classify_interaction(_trajectory("lorentzian"), [0.0], NS)
    assert cls.value is Interaction.WEAK


def test_classify_needs_three_widths():
    with pytest.raises(InsufficientData):
        classify_interaction(_trajectory("geometric"), [0.0], (16, 32))


def _d0():
    return np.array([1, 1], dtype=complex) / np.sqrt(2)


def test_duration_between_uncoupled_states():
    T = time_operator_matrix(P32)
    system = two_level_system(0.8)
    base = uncoupled(gaussian_state(P32, 3.0), _d0())
    s1 = evolve_composite(base, 0.0, system)
    s2 = evolve_composite(base, 4.2, system)
    assert measure_duration(s1, s2, T) == pytest.approx(4.2, abs=1e-5)
    # shifting the reference time leaves durations unchanged
    a, b = (evolve_composite(s, 1.3, system) for s in (s1, s2))
    assert measure_duration(a, b, T) == pytest.approx(measure_duration(s1, s2, T), abs=1e-8)


def test_duration_refuses_strong_coupling():
    T = time_operator_matrix(P32)
    clock = gaussian_state(P32, 3.0)
    strong = CompositeState(clock, _d0(), 0.01 * np.ones(P32.dim), interaction=InteractionClass(Interaction.STRONG))
    with pytest.raises(StrongInteraction):
        measure_duration(uncoupled(clock, _d0()), strong, T)
    with pytest.raises(StrongInteraction):
        evolve_composite(strong, 1.0, two_level_system(1.0))


def test_non_interacting_state_needs_zero_overlap():
    with pytest.raises(ValueError):
        CompositeState(tick_state(P16, 0), _d0(), np.ones(P16.dim))
    with pytest.raises(DimensionMismatch):
        CompositeState(tick_state(P16, 0), _d0(), np.zeros(3))


def test_perturbed_expectation_degrades_linearly():
    # overlap centred off the clock so the first-order term does not vanish
    T = time_operator_matrix(P32)
    clock = gaussian_state(P32, 3.0)
    shape = gaussian_state(P32, 2.0, center=2.0).coeffs
    eps = np.array([1e-4, 2e-4, 4e-4, 8e-4])
    deg = np.array([perturbed_time_expectation(clock, e * shape, T)[1] for e in eps])
    # degradation carries an eps^2 term from the normalization, so fit a quadratic
    _, slope, intercept = np.polyfit(eps, deg, 2)
    assert abs(intercept) < 1e-8
    # first-order oracle: 2 Re<phi|(T - <T>)|psi> with <T>_phi = 0
    oracle = 2 * np.vdot(clock.coeffs, P32.indices * shape).real
    assert slope == pytest.approx(oracle, rel=1e-3)
    assert perturbed_time_expectation(clock, np.zeros(P32.dim), T)[1] == 0.0


def test_energy_exchange_examples():
    H = hamiltonian_matrix(P32)
    clock = tick_state(P32, 0)
    ov = 0.1 * tick_state(P32, 1).coeffs
    # H_01 is purely imaginary, so a real overlap exchanges no energy
    assert abs(energy_exchange(clock, ov, H)) < 1e-15
    # |0> + 0.1i|1> with |H_01| = 1/tau: |<H>| = 0.2 / 1.01
    val = energy_exchange(clock, 1j * ov, H)
    assert abs(val) == pytest.approx(0.2 / 1.01, rel=1e-12)
    assert energy_exchange(clock, np.zeros(P32.dim), H) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = rng.normal(size=P32.dim) + 1j * rng.normal(size=P32.dim)
        assert abs(energy_exchange(gaussian_state(P32, 2.0), g, H)) <= 2 * P32.band_edge


def test_evolve_two_level_period():
    eps = 0.8
    system = two_level_system(eps)
    base = uncoupled(gaussian_state(P32, 3.0), _d0())
    back = evolve_composite(base, 2 * np.pi / eps, system)
    assert np.allclose(back.d_part, base.d_part, atol=1e-12)
    assert back.t_stamp == pytest.approx(2 * np.pi / eps)


def test_evolve_weak_overlap_shifts_one_tick():
    system, emb = clock_extension(P32, np.eye(2))
    d0 = np.zeros(system.dim, dtype=complex)
    d0[-1] = 1.0
    ov = overlap_rule("geometric")(P32.indices) * 1e-3
    s = CompositeState(gaussian_state(P32, 3.0), d0, ov, interaction=InteractionClass(Interaction.WEAK))
    moved = evolve_composite(s, 1.0, system, emb, threshold=1e-6)
    assert np.allclose(moved.overlap[1:], ov[:-1], atol=1e-12)
    with pytest.raises(IncompatibleSystem):
        evolve_composite(s, 1.0, system)
    bad, bad_emb = clock_extension(P32, np.eye(2), scale=1.01)
    with pytest.raises(IncompatibleSystem):
        evolve_composite(s, 1.0, bad, bad_emb)


def test_evolve_dimension_mismatch():
    base = uncoupled(gaussian_state(P32, 3.0), np.ones(3) / np.sqrt(3))
    with pytest.raises(DimensionMismatch):
        evolve_composite(base, 1.0, two_level_system(1.0))
