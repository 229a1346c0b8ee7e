"""Energy shifts generated by the time operator and their collision with the band edge.

``V(k) = exp(i k T)`` would shift every energy expectation by ``k`` if
``[T, H] = i`` held everywhere.  The clock's energy is confined to
``[-W, W]``, so the shift must fail once ``|<H> + k| > W``.  On a finite window
``V(k)`` always exists, so the obstruction shows up as a forced deviation from
the shift identity plus whatever leakage toward the window boundary ``V(k)``
produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clock_model import ClockState, OperatorMatrix, boundary_mass, is_interior, weighted_norm
from .errors import NotInterior
from .time_operator import expectation

DOMAIN_EDGE_MASS = 1e-3


def v_operator(k: float, T: OperatorMatrix) -> OperatorMatrix:
    """``exp(i k T)`` by eigendecomposition of the Hermitian ``T``; exactly unitary."""
    lam, vec = np.linalg.eigh(T.entries)
    return OperatorMatrix((vec * np.exp(1j * k * lam)) @ vec.conj().T, "unitary-approx", T.params)


@dataclass(frozen=True)
class PauliShiftReport:
    k: float
    mean_H_before: float
    predicted: float
    measured: float
    bound_W: float
    deviation: float
    boundary_mass: float
    weighted_norm: float

    @property
    def forced_deviation(self) -> float:
        """Lower bound on ``deviation`` implied by ``|measured| <= W``."""
        return max(0.0, abs(self.predicted) - self.bound_W)

    @property
    def identity_violated(self) -> bool:
        return abs(self.predicted) > self.bound_W


def energy_shift_experiment(state: ClockState, k: float, T: OperatorMatrix, H: OperatorMatrix) -> PauliShiftReport:
    if not is_interior(state):
        raise NotInterior("energy shift needs an interior input state")
    before = expectation(H, state).real
    shifted = v_operator(k, T) @ state
    measured = expectation(H, shifted).real
    predicted = before + k
    return PauliShiftReport(
        k=float(k),
        mean_H_before=float(before),
        predicted=float(predicted),
        measured=float(measured),
        bound_W=state.params.band_edge,
        deviation=float(abs(measured - predicted)),
        boundary_mass=boundary_mass(shifted),
        weighted_norm=weighted_norm(shifted.normalized()),
    )


@dataclass(frozen=True)
class LeakageCurve:
    k: tuple
    boundary_mass: tuple
    weighted_norm: tuple
    domain_edge: float | None

    def rows(self) -> list[dict]:
        return [
            {"k": k, "boundary_mass": b, "weighted_norm": w}
            for k, b, w in zip(self.k, self.boundary_mass, self.weighted_norm)
        ]


def leakage_curve(state: ClockState, k_grid: Sequence[float], T: OperatorMatrix) -> LeakageCurve:
    """Boundary mass and weighted norm of ``V(k)|state>`` over ``k_grid``.

    ``domain_edge`` is the first ``k`` (in grid order) at which the boundary
    mass exceeds 1e-3, or ``None``.
    """
    lam, vec = np.linalg.eigh(T.entries)
    amp = vec.conj().T @ state.coeffs
    masses, norms = [], []
    edge = None
    for k in k_grid:
        s = ClockState(vec @ (np.exp(1j * k * lam) * amp), state.params)
        m = boundary_mass(s)
        masses.append(m)
        norms.append(weighted_norm(s.normalized()))
        if edge is None and m > DOMAIN_EDGE_MASS:
            edge = float(k)
    return LeakageCurve(tuple(float(k) for k in k_grid), tuple(masses), tuple(norms), edge)
