"""Tick-position operator, time operator, and the conjugacy checks built on them.

The time operator is the tau-average of the conjugated tick-position operator,

    T = (1/tau) * int_{-tau/2}^{tau/2} G(u)^dag P G(u) du,

discretized by Gauss-Legendre quadrature.  At every node the inner sum over
tick indices runs over the whole lattice by default.  Truncating it to the
window (``inner_half_width=N``) drops sinc tails that decay like ``1/|k|`` and
corrupts ``T`` at O(1); a finite ``inner_half_width=K`` converges to the
full-lattice result like ``1/K`` and serves as a brute-force cross-check.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .clock_model import (
    ClockParams,
    ClockState,
    OperatorMatrix,
    boundary_mass,
    decay_report,
    energy_moment_matrix,
    gaussian_state,
    hamiltonian_matrix,
    is_interior,
    propagator_matrix,
    random_phase_state,
    schroedinger_evolve,
    tick_state,
    _sinc_shifted,
)
from .errors import NotInterior, QuadratureUnconverged, ZeroState

QUADRATURE_SHIFT_TOL = 1e-8
EIGEN_INTERIOR_MASS = 1e-3
ZERO_VARIANCE = 1e-24


@dataclass(frozen=True)
class QuadratureSpec:
    node_count: int = 64

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise ValueError(f"node_count must be an integer >= 16, got {self.node_count}")

    def nodes(self, tau: float):
        """Gauss-Legendre nodes and weights on ``[-tau/2, tau/2]``."""
        x, w = np.polynomial.legendre.leggauss(self.node_count)
        return 0.5 * tau * x, 0.5 * tau * w


def position_matrix(params: ClockParams) -> OperatorMatrix:
    """Diagonal tick-position operator ``P = diag(n tau)``."""
    return OperatorMatrix(np.diag(params.indices * params.tau), "hermitian", params)


def apply_P(state: ClockState) -> ClockState:
    p = state.params
    return ClockState(state.coeffs * p.indices * p.tau, p)


def _integrand_full(u: float, params: ClockParams) -> np.ndarray:
    # sum_k k tau G_km(u) G_kn(u) over all k in Z, via partial fractions and
    # sum_k 1/(a - k) = pi cot(pi a)
    tau = params.tau
    n = params.indices
    s = np.where(n % 2 == 0, 1.0, -1.0)
    out = -tau * np.sin(2 * np.pi * u / tau) / (2 * np.pi) * np.outer(s, s)
    out[np.diag_indices_from(out)] += n * tau + u
    return out


def _integrand_window(u: float, params: ClockParams, inner: int) -> np.ndarray:
    k = np.arange(-inner, inner + 1)
    g = _sinc_shifted(params.indices[None, :] - k[:, None], u, params)
    return (g.T * (k * params.tau)) @ g


def _quadrature(params: ClockParams, quad: QuadratureSpec, inner: int | None) -> np.ndarray:
    u, w = quad.nodes(params.tau)
    acc = np.zeros((params.dim, params.dim))
    for uj, wj in zip(u, w):
        m = _integrand_full(uj, params) if inner is None else _integrand_window(uj, params, inner)
        acc += wj * m
    return acc / params.tau


def time_operator_matrix(
    params: ClockParams,
    quad: QuadratureSpec = QuadratureSpec(),
    inner_half_width: int | None = None,
    check: bool = True,
) -> OperatorMatrix:
    """Quadrature of ``(1/tau) int G(u)^dag P G(u) du`` over ``[-tau/2, tau/2]``.

    Parameters
    ----------
    params : ClockParams
    quad : QuadratureSpec
    inner_half_width : int, optional
        ``None`` sums the tick lattice exactly at each node.  An integer ``K``
        (``K >= N``) truncates that sum to ``|k| <= K``; ``K = N`` is the
        naive window-only product of truncated matrices.
    check : bool
        Recompute with doubled nodes and raise ``QuadratureUnconverged`` if
        any entry moves by more than 1e-8.
    """
    if inner_half_width is not None and inner_half_width < params.half_width:
        raise ValueError("inner_half_width must be at least the window half width")
    t = _quadrature(params, quad, inner_half_width)
    if check:
        shift = float(np.max(np.abs(_quadrature(params, QuadratureSpec(2 * quad.node_count), inner_half_width) - t)))
        if shift > QUADRATURE_SHIFT_TOL:
            raise QuadratureUnconverged(f"node doubling moved T by {shift:.3e}")
    return OperatorMatrix(t.astype(complex), "hermitian", params)


def quadrature_doubling_shift(params: ClockParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Largest entry change of ``T`` when the node count is doubled."""
    a = _quadrature(params, quad, None)
    b = _quadrature(params, QuadratureSpec(2 * quad.node_count), None)
    return float(np.max(np.abs(a - b)))


@functools.lru_cache(maxsize=32)
def default_time_operator(params: ClockParams, node_count: int = 64) -> OperatorMatrix:
    return time_operator_matrix(params, QuadratureSpec(node_count))


def expectation(op: OperatorMatrix, state: ClockState) -> complex:
    """``<s|A|s> / <s|s>``."""
    c = state.coeffs
    nrm2 = float(np.vdot(c, c).real)
    if nrm2 == 0:
        raise ZeroState("expectation in the zero state")
    return complex(np.vdot(c, op.entries @ c) / nrm2)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(a.entries @ b.entries - b.entries @ a.entries, "general", a.params)


def _require_interior(state: ClockState, what: str):
    if not is_interior(state):
        raise NotInterior(f"{what}: boundary mass {boundary_mass(state):.3e} is not interior")


def _operators(params: ClockParams, T: OperatorMatrix | None):
    return (default_time_operator(params) if T is None else T), hamiltonian_matrix(params)


def ccr_residual(state: ClockState, T: OperatorMatrix | None = None) -> complex:
    """``<s|[T, H]|s>`` for a normalized interior state; the conjugate pair gives ``i``."""
    _require_interior(state, "ccr_residual")
    T, H = _operators(state.params, T)
    return expectation(commutator(T, H), state)


def ccr_state_expectation(state: ClockState, T: OperatorMatrix | None = None) -> complex:
    """Same as :func:`ccr_residual` without the interior precondition."""
    T, H = _operators(state.params, T)
    return expectation(commutator(T, H), state)


@dataclass(frozen=True)
class CCRBlockReport:
    half_width: int
    buffer: int
    residual_interior: float
    residual_boundary: float
    trace: complex


def ccr_block_residuals(params: ClockParams, T: OperatorMatrix | None = None) -> CCRBlockReport:
    """Max-norm of ``[T, H] - iI`` on the interior block and on the boundary rows."""
    T, H = _operators(params, T)
    c = commutator(T, H).entries
    r = c - 1j * np.eye(params.dim)
    mask = params.interior_mask
    return CCRBlockReport(
        params.half_width,
        params.buffer,
        float(np.max(np.abs(r[np.ix_(mask, mask)]))),
        float(np.max(np.abs(r[~mask, :]))),
        complex(np.trace(c)),
    )


def covariance_residual(
    t: float,
    params: ClockParams,
    quad: QuadratureSpec = QuadratureSpec(),
    T: OperatorMatrix | None = None,
    max_multiple: float = 4.0,
) -> float:
    """``max |(T G(t) - G(t) T - t G(t))_interior|``."""
    if abs(t) > max_multiple * params.tau:
        raise ValueError(f"|t| = {abs(t)} exceeds the validity window of {max_multiple} tau")
    if T is None:
        T = default_time_operator(params, quad.node_count)
    g = propagator_matrix(t, params).entries
    r = T.entries @ g - g @ T.entries - t * g
    mask = params.interior_mask
    return float(np.max(np.abs(r[np.ix_(mask, mask)])))


@dataclass(frozen=True)
class UncertaintyReport:
    mean_T: float
    var_T: float
    mean_H: float
    var_H: float
    product: float

    @property
    def sigma_T(self) -> float:
        return float(np.sqrt(self.var_T))

    @property
    def sigma_H(self) -> float:
        return float(np.sqrt(self.var_H))


def uncertainty_report(state: ClockState, T: OperatorMatrix | None = None, require_interior: bool = True) -> UncertaintyReport:
    """Means and variances of ``T`` and ``H`` in ``state``.

    ``Var(T) = <T s|T s> - <T>^2``; ``Var(H)`` uses the exact second energy
    moment so the tails of ``H|s>`` outside the window are accounted for.
    """
    if require_interior:
        _require_interior(state, "uncertainty_report")
    p = state.params
    T, H = _operators(p, T)
    c = state.coeffs
    nrm2 = float(np.vdot(c, c).real)
    if nrm2 == 0:
        raise ZeroState("uncertainty of the zero state")
    tc = T.entries @ c
    mean_T = float(np.vdot(c, tc).real / nrm2)
    var_T = max(float(np.vdot(tc, tc).real / nrm2) - mean_T**2, 0.0)
    mean_H = float(expectation(H, state).real)
    var_H = max(float(expectation(energy_moment_matrix(p, 2), state).real) - mean_H**2, 0.0)
    return UncertaintyReport(mean_T, var_T, mean_H, var_H, float(np.sqrt(var_T * var_H)))


@dataclass(frozen=True)
class SigmaScan:
    times: tuple
    sigma_T: tuple
    mean_T: tuple
    max_sigma_deviation: float
    max_mean_shift_error: float


def sigma_invariance_scan(state: ClockState, t_list: Sequence[float], T: OperatorMatrix | None = None) -> SigmaScan:
    """Track ``sigma(T)`` and ``<T>`` along the evolution of ``state``.

    Raises ``LeakageExceeded`` (from evolution) or ``NotInterior`` when an
    evolved state stops being interior.
    """
    base = uncertainty_report(state, T)
    sig, mean = [], []
    for t in t_list:
        evolved = schroedinger_evolve(state, t)
        rep = uncertainty_report(evolved, T)
        sig.append(rep.sigma_T)
        mean.append(rep.mean_T)
    sig_dev = max((abs(s - base.sigma_T) for s in sig), default=0.0)
    mean_err = max((abs(m - base.mean_T - t) for m, t in zip(mean, t_list)), default=0.0)
    return SigmaScan(tuple(float(t) for t in t_list), tuple(sig), tuple(mean), float(sig_dev), float(mean_err))


def standard_state_suite(params: ClockParams, seed: int = 0) -> list[tuple[str, ClockState]]:
    """Named interior test states: ticks, Gaussians and random-phase packets."""
    rng = np.random.default_rng(seed)
    reach = params.half_width - params.buffer
    states = [(f"tick[{n}]", tick_state(params, n)) for n in range(-min(4, reach), min(4, reach) + 1)]
    for w in (1.0, 2.0, 4.0):
        for c in (-2.0, 0.0, 2.0):
            states.append((f"gauss[w={w:g},c={c:g}]", gaussian_state(params, w, c)))
    for i in range(6):
        states.append((f"random-phase[{i}]", random_phase_state(params, 2.0, rng)))
    return [(name, s) for name, s in states if is_interior(s)]


@dataclass
class EigenScanReport:
    h_max_aging: float
    t_boundary_mass: dict = field(default_factory=dict)
    t_interior_count: dict = field(default_factory=dict)
    t_interior_convergent: int = 0
    sigma_floor_violations: list = field(default_factory=list)
    sigma_relation_violations: list = field(default_factory=list)
    sigma_floor: float = 0.0


def eigen_scan(
    params: ClockParams,
    quad: QuadratureSpec = QuadratureSpec(),
    half_widths: Sequence[int] = (16, 32, 64),
    t: float | None = None,
    states: Sequence[tuple[str, ClockState]] | None = None,
    tol: float = 1e-6,
) -> EigenScanReport:
    """Eigenvector signatures of the truncated ``H`` and ``T``.

    (a) each ``H`` eigenvector evolved by ``exp(-i t H_N)`` keeps ``<T>``;
    (b) boundary mass of every ``T`` eigenvector at each ``N`` and the number
        that are interior with a convergent weighted-norm trend;
    (c) ``sigma(T) >= 1/(2 sigma(H))`` and ``>= 1/(2W)`` over interior states
        of nonzero variance.
    """
    t = 1.7 * params.tau if t is None else t
    T = time_operator_matrix(params, quad)
    H = hamiltonian_matrix(params)
    evals, evecs = np.linalg.eigh(H.entries)
    aging = 0.0
    for lam, v in zip(evals, evecs.T):
        s0 = ClockState(v, params)
        st = ClockState(np.exp(-1j * lam * t) * v, params)
        aging = max(aging, abs(expectation(T, st) - expectation(T, s0)))

    report = EigenScanReport(h_max_aging=float(aging))
    by_n = {}
    for N in half_widths:
        p = params.with_half_width(N)
        tv, tvec = np.linalg.eigh(time_operator_matrix(p, quad).entries)
        masses = [boundary_mass(ClockState(v, p)) for v in tvec.T]
        report.t_boundary_mass[N] = masses
        report.t_interior_count[N] = int(sum(m <= EIGEN_INTERIOR_MASS for m in masses))
        by_n[N] = (tv, tvec, masses)

    # follow each eigenvalue of the smallest window through the larger ones
    Ns = list(half_widths)
    if len(Ns) >= 3:
        tv0, _, _ = by_n[Ns[0]]
        for lam in tv0:
            picks = {}
            interior_everywhere = True
            for N in Ns:
                tv, tvec, masses = by_n[N]
                j = int(np.argmin(np.abs(tv - lam)))
                picks[N] = tvec[:, j]
                interior_everywhere &= masses[j] <= EIGEN_INTERIOR_MASS
            if interior_everywhere and decay_report(lambda N: picks[N], Ns).verdict == "convergent":
                report.t_interior_convergent += 1

    W = params.band_edge
    report.sigma_floor = 1.0 / (2.0 * W)
    for name, s in states if states is not None else standard_state_suite(params):
        rep = uncertainty_report(s, T)
        if rep.var_T < ZERO_VARIANCE or rep.var_H < ZERO_VARIANCE:
            continue
        if rep.sigma_T < 1.0 / (2.0 * rep.sigma_H) - tol:
            report.sigma_relation_violations.append((name, rep.sigma_T, rep.sigma_H))
        if rep.sigma_T < report.sigma_floor - tol:
            report.sigma_floor_violations.append((name, rep.sigma_T, rep.sigma_H))
    return report
