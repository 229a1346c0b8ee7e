"""A clock coupled to an external system D.

The combined state is kept literally as a sum rather than a tensor product:
a clock part, the external system's own vector, and the projection of the
external state onto the clock span (``overlap``).  Interaction regimes follow
from that projection: none when it vanishes, weak when its coefficients are
admissible (convergent weighted norm), strong when they are not.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .clock_model import (
    ClockParams,
    ClockState,
    OperatorMatrix,
    decay_report,
    hamiltonian_matrix,
    is_interior,
    schroedinger_evolve,
)
from .errors import DimensionMismatch, InsufficientData, IncompatibleSystem, NotInterior, StrongInteraction, ZeroState
from .time_operator import expectation

COMPATIBILITY_TOL = 1e-8
ZERO_OVERLAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SystemD:
    hamiltonian: np.ndarray
    label: str = "D"

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
            raise DimensionMismatch(f"H_D must be square with dim >= 2, got shape {h.shape}")
        if np.max(np.abs(h - h.conj().T)) > 1e-12:
            raise ValueError("H_D is not Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def propagator(self, t: float) -> np.ndarray:
        lam, v = np.linalg.eigh(self.hamiltonian)
        return (v * np.exp(-1j * lam * t)) @ v.conj().T


def two_level_system(gap: float, label: str = "two-level") -> SystemD:
    return SystemD(np.diag([0.0, gap]), label)


def ladder_system(levels: int, spacing: float, label: str = "ladder") -> SystemD:
    return SystemD(np.diag(spacing * np.arange(levels)), label)


def clock_extension(params: ClockParams, extra: np.ndarray, coupling: np.ndarray | None = None, scale: float = 1.0) -> tuple[SystemD, np.ndarray]:
    """``H_D = scale * H_C (+) extra`` with optional clock/extra coupling block.

    Returns the system and the canonical embedding of the clock window into
    the first ``2N+1`` coordinates of D.
    """
    hc = scale * hamiltonian_matrix(params).entries
    extra = np.atleast_2d(np.asarray(extra, dtype=complex))
    d = params.dim + extra.shape[0]
    h = np.zeros((d, d), dtype=complex)
    h[: params.dim, : params.dim] = hc
    h[params.dim :, params.dim :] = extra
    if coupling is not None:
        h[: params.dim, params.dim :] = coupling
        h[params.dim :, : params.dim] = np.conj(coupling).T
    emb = np.zeros((d, params.dim), dtype=complex)
    emb[: params.dim, : params.dim] = np.eye(params.dim)
    return SystemD(h, "clock-extension"), emb


def check_compatibility(system: SystemD, embedding: np.ndarray, params: ClockParams) -> tuple[bool, float]:
    """Whether ``H_D`` restricted to the embedded clock span is ``H_C``.

    The restriction is ``E^dag H_D E`` compared on the interior block.
    """
    e = np.asarray(embedding, dtype=complex)
    if e.shape != (system.dim, params.dim):
        raise DimensionMismatch(f"embedding shape {e.shape} != ({system.dim}, {params.dim})")
    if np.max(np.abs(e.conj().T @ e - np.eye(params.dim))) > 1e-10:
        raise DimensionMismatch("embedding is not an isometry")
    restricted = e.conj().T @ system.hamiltonian @ e
    mask = params.interior_mask
    diff = restricted - hamiltonian_matrix(params).entries
    defect = float(np.max(np.abs(diff[np.ix_(mask, mask)])))
    return defect < COMPATIBILITY_TOL, defect


class Interaction(enum.Enum):
    NONE = "none"
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class InteractionClass:
    value: Interaction
    verdicts: tuple = ()
    overlap_magnitude: float = 0.0


NO_INTERACTION = InteractionClass(Interaction.NONE)


def classify_interaction(
    trajectory: Callable[[float, int], np.ndarray],
    t_probe: Sequence[float],
    half_widths: Sequence[int],
) -> InteractionClass:
    """Classify the overlap trajectory ``trajectory(t, N) -> coefficients``.

    An undecided weighted-norm trend is treated as weak, with a warning.
    """
    Ns = list(half_widths)
    if len(Ns) < 3:
        raise InsufficientData(f"need at least 3 half widths, got {len(Ns)}")
    magnitude = max(float(np.max(np.abs(trajectory(t, Ns[-1])), initial=0.0)) for t in t_probe)
    if magnitude < ZERO_OVERLAP_TOL:
        return InteractionClass(Interaction.NONE, (), magnitude)
    verdicts = tuple(decay_report(lambda N, t=t: trajectory(t, N), Ns).verdict for t in t_probe)
    if "divergent" in verdicts:
        return InteractionClass(Interaction.STRONG, verdicts, magnitude)
    if "undecided" in verdicts:
        warnings.warn("overlap admissibility undecided at this truncation; treating as weak", stacklevel=2)
    return InteractionClass(Interaction.WEAK, verdicts, magnitude)


@dataclass(frozen=True, eq=False)
class CompositeState:
    clock: ClockState
    d_part: np.ndarray
    overlap: np.ndarray
    t_stamp: float = 0.0
    interaction: InteractionClass = field(default=NO_INTERACTION)

    def __post_init__(self):
        ov = np.array(self.overlap, dtype=complex)
        if ov.shape != (self.clock.params.dim,):
            raise DimensionMismatch(f"overlap has shape {ov.shape}, expected ({self.clock.params.dim},)")
        if self.interaction.value is Interaction.NONE and np.max(np.abs(ov)) >= ZERO_OVERLAP_TOL:
            raise ValueError("a non-interacting composite must have zero overlap")
        ov.setflags(write=False)
        object.__setattr__(self, "overlap", ov)
        d = np.array(self.d_part, dtype=complex)
        d.setflags(write=False)
        object.__setattr__(self, "d_part", d)

    @property
    def perturbed_clock(self) -> ClockState:
        """``phi_C + psi_C``, the clock as disturbed by D."""
        return ClockState(self.clock.coeffs + self.overlap, self.clock.params)


def uncoupled(clock: ClockState, d_part: np.ndarray, t_stamp: float = 0.0) -> CompositeState:
    return CompositeState(clock, d_part, np.zeros(clock.params.dim, dtype=complex), t_stamp)


def perturbed_time_expectation(clock: ClockState, overlap: np.ndarray, T: OperatorMatrix) -> tuple[float, float]:
    """``<chi|T|chi>/<chi|chi>`` for ``chi = phi_C + psi_C`` and its shift from ``<T>`` in ``phi_C``.

    The disturbed clock has no time operator of its own; the expectation of
    the ideal clock's ``T`` in the disturbed state stands in for it.
    """
    chi = ClockState(clock.coeffs + np.asarray(overlap, dtype=complex), clock.params)
    if chi.norm == 0:
        raise ZeroState("clock plus overlap vanishes")
    if not is_interior(chi):
        raise NotInterior("disturbed clock state is not interior")
    value = expectation(T, chi).real
    return float(value), float(value - expectation(T, clock).real)


def energy_exchange(clock0: ClockState, overlap0: np.ndarray, H: OperatorMatrix) -> float:
    """``<H>`` in the normalized disturbed clock minus ``<H>`` in the clock."""
    chi = ClockState(clock0.coeffs + np.asarray(overlap0, dtype=complex), clock0.params)
    return float(expectation(H, chi).real - expectation(H, clock0).real)


def measure_duration(state1: CompositeState, state2: CompositeState, T: OperatorMatrix) -> float:
    """``|<T>_2 - <T>_1|`` read off the (possibly disturbed) clock.

    Raises ``StrongInteraction`` if either state is strongly coupled.
    """
    for s in (state1, state2):
        if s.interaction.value is Interaction.STRONG:
            raise StrongInteraction("clock is disturbed beyond its domain and cannot measure time")
    if state1.clock.params != state2.clock.params:
        raise DimensionMismatch("states belong to different clock realizations")

    def reading(s: CompositeState) -> float:
        if s.interaction.value is Interaction.NONE:
            return expectation(T, s.clock).real
        return perturbed_time_expectation(s.clock, s.overlap, T)[0]

    return float(abs(reading(state2) - reading(state1)))


def evolve_composite(
    state: CompositeState,
    t: float,
    system: SystemD,
    embedding: np.ndarray | None = None,
    threshold: float | None = None,
) -> CompositeState:
    """Advance every part by ``t``.

    Clock part and overlap evolve under the clock propagator, the D vector
    under ``exp(-i t H_D)``.  A weakly coupled state requires ``embedding`` and
    a compatible ``H_D``; otherwise ``IncompatibleSystem`` is raised.
    """
    if state.interaction.value is Interaction.STRONG:
        raise StrongInteraction("strongly coupled composites have no clock evolution")
    if state.interaction.value is Interaction.WEAK:
        if embedding is None:
            raise IncompatibleSystem("weak coupling requires an embedding to verify compatibility")
        ok, defect = check_compatibility(system, embedding, state.clock.params)
        if not ok:
            raise IncompatibleSystem(f"H_D does not restrict to H_C (defect {defect:.3e})")
    if len(state.d_part) != system.dim:
        raise DimensionMismatch(f"d_part has {len(state.d_part)} entries, H_D has dim {system.dim}")
    kw = {} if threshold is None else {"threshold": threshold}
    clock = schroedinger_evolve(state.clock, t, **kw)
    ov = state.overlap
    if np.any(ov):
        ov = schroedinger_evolve(ClockState(ov, state.clock.params), t, **kw).coeffs
    d = system.propagator(t) @ state.d_part
    return replace(state, clock=clock, d_part=d, overlap=ov, t_stamp=state.t_stamp + t)
