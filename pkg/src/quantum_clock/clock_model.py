"""Finite-truncation realization of an ideal quantum clock.

The clock lives in the energy band ``[-W, W]`` with ``W = pi / tau``.  The
tick state ``|n>`` has constant energy amplitude ``(2W)**-0.5`` and phase
``exp(-i w n tau)``, so the ticks form an orthonormal basis and the propagator
over the tick lattice is the normalized sinc kernel.  Everything is stored as
dense complex matrices over the index window ``n = -N..N``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InsufficientData, LeakageExceeded, ZeroState

INTERIOR_MASS_TOL = 1e-10
DEFAULT_LEAKAGE_THRESHOLD = 1e-8
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class ClockParams:
    """Tick spacing ``tau``, half width ``N`` and interior buffer ``B``."""

    tau: float = 1.0
    half_width: int = 16
    buffer: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if int(self.half_width) != self.half_width or self.half_width < 2:
            raise ValueError(f"half_width must be an integer >= 2, got {self.half_width}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "half_width", int(self.half_width))
        if self.buffer is None:
            object.__setattr__(self, "buffer", self.half_width // 2)
        if not 0 < self.buffer < self.half_width:
            raise ValueError(f"buffer must satisfy 0 < B < N, got B={self.buffer}, N={self.half_width}")
        object.__setattr__(self, "buffer", int(self.buffer))

    @property
    def band_edge(self) -> float:
        return np.pi / self.tau

    @property
    def dim(self) -> int:
        return 2 * self.half_width + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def interior_mask(self) -> np.ndarray:
        return np.abs(self.indices) <= self.half_width - self.buffer

    def with_half_width(self, half_width: int, buffer: int | None = None) -> "ClockParams":
        return ClockParams(self.tau, half_width, buffer)


@dataclass(frozen=True, eq=False)
class ClockState:
    """Coefficients ``d^n`` over the tick basis of ``params``.

    ``norm_defect`` carries the truncation leakage accumulated by evolution;
    it is reported, never silently removed by renormalization.
    """

    coeffs: np.ndarray
    params: ClockParams
    norm_defect: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.params.dim,):
            raise ValueError(f"expected {self.params.dim} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "ClockState":
        nrm = self.norm
        if nrm == 0:
            raise ZeroState("cannot normalize the zero state")
        return ClockState(self.coeffs / nrm, self.params, self.norm_defect)

    def __add__(self, other: "ClockState") -> "ClockState":
        if other.params != self.params:
            raise ValueError("states belong to different clock realizations")
        return ClockState(self.coeffs + other.coeffs, self.params)

    def __mul__(self, scalar: complex) -> "ClockState":
        return ClockState(scalar * self.coeffs, self.params)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator over the tick window.

    ``kind`` is one of ``"hermitian"``, ``"unitary-approx"``, ``"general"``.
    For ``unitary-approx`` the interior unitarity defect is recorded in
    ``leakage``.
    """

    entries: np.ndarray
    kind: str
    params: ClockParams
    leakage: float | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("hermitian", "unitary-approx", "general"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        a = np.array(self.entries, dtype=complex)
        if a.shape != (self.params.dim, self.params.dim):
            raise ValueError(f"operator shape {a.shape} does not match dim {self.params.dim}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def __matmul__(self, other):
        if isinstance(other, ClockState):
            return ClockState(self.entries @ other.coeffs, other.params)
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries @ other.entries, "general", self.params)
        return self.entries @ other

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def interior_block(self) -> np.ndarray:
        mask = self.params.interior_mask
        return self.entries[np.ix_(mask, mask)]

    def unitarity_defect(self) -> float:
        """Max-norm of ``(M^dag M - I)`` restricted to the interior block."""
        gram = self.entries.conj().T @ self.entries
        mask = self.params.interior_mask
        block = gram[np.ix_(mask, mask)]
        return float(np.max(np.abs(block - np.eye(block.shape[0]))))


def _sin_over(theta, denom):
    """``sin(theta) / denom`` where ``denom`` may vanish together with ``theta``."""
    theta = np.asarray(theta, dtype=float)
    denom = np.asarray(denom, dtype=float)
    small = np.abs(denom) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, denom)
    out = np.sin(theta) / safe
    x2 = denom * denom
    series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return np.where(small, series, out)


def _sinc_shifted(j, t, params: ClockParams):
    """Kernel at ``j*tau + t`` for integer ``j``; ``sin(pi j + x) = (-1)^j sin x`` keeps exact zeros."""
    j = np.asarray(j)
    W = params.band_edge
    theta = W * t
    x = np.pi * j + theta
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    return sign * _sin_over(theta, x)


def overlap_kernel(t, params: ClockParams):
    """Tick overlap ``<phi_C(0)|phi_C(t)> = sin(W t) / (W t)``.

    Accepts scalars or arrays.  ``t`` is split into a tick multiple and a
    remainder so that ``K(n tau)`` vanishes to rounding for every integer
    ``n != 0``.
    """
    t = np.asarray(t, dtype=float)
    j = np.rint(t / params.tau)
    r = t - j * params.tau
    out = _sinc_shifted(j.astype(np.int64), r, params)
    return float(out) if out.ndim == 0 else out


def _index_difference(params: ClockParams) -> np.ndarray:
    n = params.indices
    return n[None, :] - n[:, None]  # column index minus row index


@functools.lru_cache(maxsize=64)
def _propagator_entries(t: float, params: ClockParams) -> np.ndarray:
    j = np.rint(t / params.tau)
    r = t - j * params.tau
    d = _index_difference(params) + int(j)
    g = _sinc_shifted(d, r, params).astype(complex)
    g.setflags(write=False)
    return g


def propagator_matrix(t: float, params: ClockParams) -> OperatorMatrix:
    """Truncated propagator ``G(t)_{mn} = K((n - m) tau + t)``.

    The window truncation drops the ``1/|n|`` sinc tails, so ``G(t)`` is only
    approximately unitary; the interior defect is stored in ``leakage``.
    """
    g = OperatorMatrix(_propagator_entries(float(t), params), "unitary-approx", params)
    return OperatorMatrix(g.entries, "unitary-approx", params, leakage=g.unitarity_defect())


@functools.lru_cache(maxsize=64)
def _moment_entries(params: ClockParams, power: int) -> np.ndarray:
    tau = params.tau
    W = params.band_edge
    k = -_index_difference(params)  # m - n
    off = k != 0
    ks = np.where(off, k, 1)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    if power == 0:
        out = np.eye(params.dim, dtype=complex)
    elif power == 1:
        out = np.where(off, -1j * sign / (ks * tau), 0.0)
    elif power == 2:
        out = np.where(off, 2.0 * sign / (ks * tau) ** 2, W * W / 3.0).astype(complex)
    else:
        raise ValueError("only energy moments 0, 1, 2 are available")
    out = np.asarray(out, dtype=complex)
    out.setflags(write=False)
    return out


def energy_moment_matrix(params: ClockParams, power: int) -> OperatorMatrix:
    """Matrix of ``(1/2W) int_{-W}^{W} w**power exp(i w (m - n) tau) dw``.

    ``power=1`` is the Hamiltonian.  ``power=2`` is the exact ``H**2`` on the
    full lattice; squaring the truncated ``H`` would miss the tails of
    ``H|phi>`` that leave the window.
    """
    return OperatorMatrix(_moment_entries(params, int(power)), "hermitian", params)


def hamiltonian_matrix(params: ClockParams) -> OperatorMatrix:
    """Clock Hamiltonian ``H_{mn} = -i (-1)^(m-n) / ((m - n) tau)``, zero diagonal."""
    return energy_moment_matrix(params, 1)


def boundary_mass(state: ClockState) -> float:
    """Fraction of ``|d^n|^2`` outside the interior ``|n| <= N - B``."""
    p = np.abs(state.coeffs) ** 2
    total = p.sum()
    if total == 0:
        raise ZeroState("boundary mass of the zero state is undefined")
    return float(p[~state.params.interior_mask].sum() / total)


def is_interior(state: ClockState, tol: float = INTERIOR_MASS_TOL) -> bool:
    return boundary_mass(state) < tol


def weighted_norm(state: ClockState) -> float:
    """``sum_n |n| |d^n|`` over the window."""
    return float(np.sum(np.abs(state.params.indices) * np.abs(state.coeffs)))


def band_edge_amplitude(state: ClockState) -> complex:
    """Energy amplitude at ``w = +-W`` relative to the state norm.

    Equals ``sum_n (-1)^n d^n / ||d||``.  States for which it vanishes are the
    ones on which the time operator is canonically conjugate to ``H``.
    """
    nrm = state.norm
    if nrm == 0:
        raise ZeroState("band-edge amplitude of the zero state is undefined")
    sign = np.where(state.params.indices % 2 == 0, 1.0, -1.0)
    return complex(np.sum(sign * state.coeffs) / nrm)


def schroedinger_evolve(
    state: ClockState, t: float, threshold: float = DEFAULT_LEAKAGE_THRESHOLD
) -> ClockState:
    """Apply ``G(t)`` and record the norm lost to the truncation.

    Raises ``LeakageExceeded`` when the relative norm defect exceeds
    ``threshold``.
    """
    if t == 0:
        return state
    before = state.norm
    if before == 0:
        raise ZeroState("cannot evolve the zero state")
    out = _propagator_entries(float(t), state.params) @ state.coeffs
    defect = abs(1.0 - float(np.linalg.norm(out)) / before)
    if defect > threshold:
        raise LeakageExceeded(
            f"norm defect {defect:.3e} after t={t} exceeds {threshold:.1e}; state is not effectively interior"
        )
    return ClockState(out, state.params, state.norm_defect + defect)


# state families -------------------------------------------------------------


def tick_state(params: ClockParams, n: int) -> ClockState:
    if abs(n) > params.half_width:
        raise ValueError(f"tick index {n} outside window of half width {params.half_width}")
    c = np.zeros(params.dim, dtype=complex)
    c[n + params.half_width] = 1.0
    return ClockState(c, params)


def gaussian_state(params: ClockParams, width: float, center: float = 0.0, phase_slope: float = 0.0) -> ClockState:
    """Normalized ``d^n ~ exp(-(n - center)^2 / (2 width^2) + i phase_slope n)``."""
    n = params.indices
    c = np.exp(-((n - center) ** 2) / (2.0 * width**2) + 1j * phase_slope * n)
    return ClockState(c, params).normalized()


def random_phase_state(params: ClockParams, width: float, rng: np.random.Generator, center: float = 0.0) -> ClockState:
    """Gaussian envelope with independent uniform phases per tick."""
    n = params.indices
    env = np.exp(-((n - center) ** 2) / (2.0 * width**2))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n.shape)
    return ClockState(env * np.exp(1j * phases), params).normalized()


def state_from_rule(params: ClockParams, rule: Callable[[np.ndarray], np.ndarray], normalize: bool = True) -> ClockState:
    """Build a state from ``rule(indices) -> coefficients``."""
    s = ClockState(np.asarray(rule(params.indices), dtype=complex), params)
    return s.normalized() if normalize else s


# admissibility trend --------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    verdict: str
    half_widths: tuple
    series: tuple
    slope: float
    growth_per_doubling: tuple


DIVERGENCE_FACTOR = 1.5
CONVERGENCE_RTOL = 1e-6
CONVERGENCE_ATOL = 1e-12


def decay_report(family: Callable[[int], np.ndarray], half_widths: Sequence[int]) -> DecayReport:
    """Classify the weighted-norm trend of a coefficient family across ``N``.

    ``family(N)`` returns the ``2N+1`` coefficients for ``n = -N..N``; they are
    normalized at each ``N``.  Divergent when the weighted norm grows by more
    than 1.5x per doubling of ``N`` over the last two steps, convergent when the
    last increment is below ``1e-6`` relative (plus a 1e-12 absolute floor),
    undecided otherwise.
    """
    Ns = [int(n) for n in half_widths]
    if len(Ns) < 3:
        raise InsufficientData(f"need at least 3 half widths, got {len(Ns)}")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("half widths must be strictly increasing")

    series = []
    for N in Ns:
        c = np.asarray(family(N), dtype=complex)
        if c.shape != (2 * N + 1,):
            raise ValueError(f"family({N}) returned shape {c.shape}, expected {(2 * N + 1,)}")
        nrm = np.linalg.norm(c)
        idx = np.abs(np.arange(-N, N + 1))
        series.append(0.0 if nrm == 0 else float(np.sum(idx * np.abs(c)) / nrm))
    w = np.array(series)

    growth = []
    for (n0, w0), (n1, w1) in zip(zip(Ns, w), zip(Ns[1:], w[1:])):
        doublings = np.log2(n1 / n0)
        growth.append(float((w1 / w0) ** (1.0 / doublings)) if w0 > 0 else (np.inf if w1 > 0 else 1.0))

    positive = w > 0
    slope = float(np.polyfit(np.log(np.array(Ns)[positive]), np.log(w[positive]), 1)[0]) if positive.sum() >= 2 else 0.0

    if abs(w[-1] - w[-2]) <= CONVERGENCE_RTOL * abs(w[-1]) + CONVERGENCE_ATOL:
        verdict = "convergent"
    elif all(g > DIVERGENCE_FACTOR for g in growth[-2:]):
        verdict = "divergent"
    else:
        verdict = "undecided"
    return DecayReport(verdict, tuple(Ns), tuple(series), slope, tuple(growth))


def coefficient_family(rule: Callable[[np.ndarray], np.ndarray]) -> Callable[[int], np.ndarray]:
    """Lift an index rule into a family ``N -> coefficients``."""
    return lambda N: np.asarray(rule(np.arange(-N, N + 1)), dtype=complex)
