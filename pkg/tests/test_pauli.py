import numpy as np
import pytest

from quantum_clock.clock_model import ClockParams, boundary_mass, gaussian_state, hamiltonian_matrix, tick_state
from quantum_clock.errors import NotInterior
from quantum_clock.pauli import energy_shift_experiment, leakage_curve, v_operator
from quantum_clock.time_operator import time_operator_matrix

P32 = ClockParams(1.0, 32, 16)
T32 = time_operator_matrix(P32)
H32 = hamiltonian_matrix(P32)
W = P32.band_edge


def test_v_operator_group_law():
    a, b = 0.7, -1.9
    va, vb, vab = (v_operator(k, T32).entries for k in (a, b, a + b))
    assert np.max(np.abs(va @ vb - vab)) < 1e-10
    assert np.max(np.abs(v_operator(0.0, T32).entries - np.eye(P32.dim))) < 1e-12
    assert np.max(np.abs(va.conj().T @ va - np.eye(P32.dim))) < 1e-12


def test_v_operator_matches_diagonal_phase():
    # T is the tick-position operator, so V(k) = diag(exp(i k n tau))
    k = 0.37
    oracle = np.diag(np.exp(1j * k * P32.indices * P32.tau))
    assert np.max(np.abs(v_operator(k, T32).entries - oracle)) < 1e-12


def test_gaussian_energy_shift_below_band_edge():
    s = gaussian_state(P32, 3.0)
    for k in (0.1 * W, 0.2 * W, -0.2 * W):
        r = energy_shift_experiment(s, k, T32, H32)
        assert not r.identity_violated
        assert r.deviation < 1e-12


def test_tick_state_is_not_shifted():
    # a T eigenvector only picks up a phase under V(k)
    r = energy_shift_experiment(tick_state(P32, 0), 0.2 * W, T32, H32)
    assert abs(r.measured) < 1e-12
    assert r.deviation == pytest.approx(0.2 * W, rel=1e-10)


def test_shift_beyond_band_edge_is_forced_to_fail():
    for s in (tick_state(P32, 0), gaussian_state(P32, 3.0)):
        r = energy_shift_experiment(s, 2 * W, T32, H32)
        assert r.identity_violated
        assert r.forced_deviation == pytest.approx(W, rel=1e-12)
        assert r.deviation >= r.forced_deviation - 1e-8
        assert abs(r.measured) <= W + 1e-10


def test_forced_deviation_property():
    rng = np.random.default_rng(5)
    s = gaussian_state(P32, 2.5, phase_slope=0.4)
    for k in rng.uniform(-3 * W, 3 * W, size=12):
        r = energy_shift_experiment(s, k, T32, H32)
        assert r.deviation >= r.forced_deviation - 1e-10
        assert abs(r.measured) <= W


def test_shift_requires_interior_state():
    with pytest.raises(NotInterior):
        energy_shift_experiment(tick_state(P32, 31), 0.1, T32, H32)


def test_leakage_is_invariant_under_diagonal_shift():
    s = gaussian_state(P32, 3.0)
    curve = leakage_curve(s, [0.0, 0.5 * W, W, 2 * W, 4 * W], T32)
    assert np.allclose(curve.boundary_mass, boundary_mass(s), rtol=1e-6, atol=1e-20)
    assert np.allclose(curve.weighted_norm, curve.weighted_norm[0], rtol=1e-12)
    assert curve.domain_edge is None
    assert [r["k"] for r in curve.rows()] == list(curve.k)


def test_leakage_domain_edge_detected():
    s = gaussian_state(P32, 8.0)
    curve = leakage_curve(s, [0.0, 1.0], T32)
    assert curve.domain_edge == 0.0
