"""Experiment configuration and dispatch for the batch runner."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import clock_model as cm
from . import composite as comp
from . import pauli
from . import time_operator as to
from .errors import ClockError, ConfigInvalid, ExperimentFailed
from .report import ExperimentReport, at_least, below

EXPERIMENTS = (
    "verify-ccr",
    "covariance",
    "uncertainty",
    "sigma-invariance",
    "eigen-scan",
    "duration",
    "interact",
    "pauli-shift",
    "leakage",
)

OVERLAPS = ("zero", "geometric", "inverse", "lorentzian", "gaussian")
SYSTEMS = ("two-level", "ladder")
STATES = ("tick", "gauss")


@dataclass
class ExperimentConfig:
    """Flat experiment configuration; field names map to ``--kebab-case`` keys.

    Time grids (``t_grid``, ``t1``, ``t2``) are in units of ``tau``.  Entries
    of ``k_grid`` are absolute angular frequencies, or multiples of ``W`` when
    written with a trailing ``W`` (``"2W"``).
    """

    experiment: str = "verify-ccr"
    tau: float = 1.0
    half_width: int = 32
    buffer: int | None = None
    quad_nodes: int = 64
    out: str | None = None
    format: str = "json"
    seed: int = 0
    t_grid: str | None = None
    k_grid: str | None = None
    overlap: str = "geometric"
    system_d: str = "two-level"
    state: str = "tick"
    width: float = 3.0
    t1: float = 0.0
    t2: float = 4.2
    n_list: str = "16,32,64"

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name.replace("_", "-") for f in fields(cls)]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, raw in mapping.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigInvalid(f"unknown config key {key!r}")
            if raw is None:
                continue
            kw[name] = _coerce(name, raw)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid(f"unknown experiment {self.experiment!r}")
        if not self.tau > 0:
            raise ConfigInvalid("tau must be positive")
        if self.half_width < 2:
            raise ConfigInvalid("half-width must be >= 2")
        if self.buffer is not None and not 0 < self.buffer < self.half_width:
            raise ConfigInvalid("buffer must satisfy 0 < buffer < half-width")
        if self.quad_nodes < 16:
            raise ConfigInvalid("quad-nodes must be >= 16")
        if self.format not in ("json", "csv"):
            raise ConfigInvalid("format must be json or csv")
        if self.seed < 0:
            raise ConfigInvalid("seed must be non-negative")
        if self.overlap not in OVERLAPS:
            raise ConfigInvalid(f"overlap must be one of {OVERLAPS}")
        if self.system_d not in SYSTEMS:
            raise ConfigInvalid(f"system-d must be one of {SYSTEMS}")
        if self.state not in STATES:
            raise ConfigInvalid(f"state must be one of {STATES}")
        if not self.width > 0:
            raise ConfigInvalid("width must be positive")
        for name in ("t_grid", "k_grid", "n_list"):
            if getattr(self, name) is not None:
                self._grid(name)
        ns = self._grid("n_list")
        if any(b <= a for a, b in zip(ns, ns[1:])) or min(ns) < 2:
            raise ConfigInvalid("n-list must be strictly increasing integers >= 2")

    def _grid(self, name: str) -> list:
        raw = getattr(self, name)
        try:
            if name == "n_list":
                return [int(v) for v in raw.split(",")]
            if name == "k_grid":
                W = np.pi / self.tau
                return [float(v[:-1]) * W if v.strip().endswith("W") else float(v) for v in (s.strip() for s in raw.split(","))]
            return [float(v) for v in raw.split(",")]
        except ValueError as exc:
            raise ConfigInvalid(f"cannot parse {name.replace('_', '-')}={raw!r}") from exc

    def params(self) -> cm.ClockParams:
        return cm.ClockParams(self.tau, self.half_width, self.buffer)

    def echo(self) -> dict:
        d = {k.replace("_", "-"): v for k, v in asdict(self).items()}
        d["buffer"] = self.params().buffer
        d.pop("out")
        return d


def _coerce(name: str, raw):
    target = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if target in ("int", "int | None"):
            return int(raw)
        if target == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigInvalid(f"{name.replace('_', '-')}: cannot parse {raw!r}") from exc
    return raw


def run(config: ExperimentConfig) -> ExperimentReport:
    """Run one experiment; module errors surface as ``ExperimentFailed``."""
    config.validate()
    start = time.perf_counter()
    try:
        report = _RUNNERS[config.experiment](config)
    except ClockError as exc:
        if isinstance(exc, (ConfigInvalid, ExperimentFailed)):
            raise
        raise ExperimentFailed(f"{exc.category}: {exc}") from exc
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc
    report.wall_time = time.perf_counter() - start
    return report


def _new(config: ExperimentConfig, columns=()) -> ExperimentReport:
    return ExperimentReport(config.experiment, config.echo(), columns=list(columns))


def _time_operator(config, params=None):
    return to.default_time_operator(params or config.params(), config.quad_nodes)


def _verify_ccr(config):
    p = config.params()
    rep = _new(config, ["half_width", "buffer", "residual_interior", "residual_boundary"])
    main = to.ccr_block_residuals(p, _time_operator(config))
    for N in (8, 16, 32, 64):
        q = cm.ClockParams(config.tau, N, N // 2)
        r = to.ccr_block_residuals(q, _time_operator(config, q))
        rep.series.append({"half_width": N, "buffer": N // 2, "residual_interior": r.residual_interior, "residual_boundary": r.residual_boundary})
    gauss = cm.gaussian_state(p, config.width)
    tick = cm.tick_state(p, 0)
    g_ccr = to.ccr_residual(gauss, _time_operator(config))
    t_ccr = to.ccr_residual(tick, _time_operator(config))
    rep.results.update(
        N=p.half_width,
        B=p.buffer,
        residual_interior=main.residual_interior,
        residual_boundary=main.residual_boundary,
        tolerance=1e-5,
        trace=main.trace,
        gaussian_expectation=g_ccr,
        gaussian_band_edge_amplitude=abs(cm.band_edge_amplitude(gauss)),
        tick_expectation=t_ccr,
    )
    interior = [row["residual_interior"] for row in rep.series]
    rep.verdicts += [
        below("interior block |[T,H] - iI|", main.residual_interior, 1e-5),
        _decreasing(interior),
        below("gaussian <[T,H]> - i", abs(g_ccr - 1j), 1e-6),
        below("tick[0] <[T,H]> - i", abs(t_ccr - 1j), 1e-6),
    ]
    return rep


def _decreasing(values):
    steps = [b - a for a, b in zip(values, values[1:])]
    worst = max(steps) if steps else -1.0
    return below("residual strictly decreasing in N (max step)", worst, 0.0)


def _covariance(config):
    p = config.params()
    T = _time_operator(config)
    grid = config._grid("t_grid") if config.t_grid else [0.1, 0.37, 1.0, 2.0]
    rep = _new(config, ["t", "residual"])
    for t in grid:
        r = to.covariance_residual(t * p.tau, p, to.QuadratureSpec(config.quad_nodes), T)
        rep.series.append({"t": t * p.tau, "residual": r})
        rep.verdicts.append(below(f"|[T,G(t)] - tG(t)|_interior at t={t:g} tau", r, 1e-5))
    return rep


def _uncertainty(config):
    p = config.params()
    T = _time_operator(config)
    rep = _new(config, ["state", "sigma_T", "sigma_H", "product", "band_edge_amplitude"])
    worst = np.inf
    for name, s in to.standard_state_suite(p, config.seed):
        u = to.uncertainty_report(s, T)
        worst = min(worst, u.product)
        rep.series.append({"state": name, "sigma_T": u.sigma_T, "sigma_H": u.sigma_H, "product": u.product, "band_edge_amplitude": abs(cm.band_edge_amplitude(s))})
    tick = to.uncertainty_report(cm.tick_state(p, 0), T)
    expected = np.pi / (np.sqrt(3.0) * p.tau)
    rep.results.update(states=len(rep.series), min_product=worst, tick_sigma_H=tick.sigma_H, tick_sigma_H_expected=expected)
    rep.verdicts += [
        at_least("min sigma(T) sigma(H)", worst, 0.5 - 1e-6),
        below("|sigma_H(tick) - pi/(sqrt3 tau)|", abs(tick.sigma_H - expected), 1e-8),
    ]
    return rep


def _sigma_invariance(config):
    p = config.params()
    grid = config._grid("t_grid") if config.t_grid else [0.5, -0.5, 1.0, -1.0, 2.0, -2.0]
    scan = to.sigma_invariance_scan(cm.gaussian_state(p, config.width), [t * p.tau for t in grid], _time_operator(config))
    rep = _new(config, ["t", "sigma_T", "mean_T"])
    rep.series = [{"t": t, "sigma_T": s, "mean_T": m} for t, s, m in zip(scan.times, scan.sigma_T, scan.mean_T)]
    rep.results.update(max_sigma_deviation=scan.max_sigma_deviation, max_mean_shift_error=scan.max_mean_shift_error)
    rep.verdicts += [
        below("max |sigma_T(t) - sigma_T(0)|", scan.max_sigma_deviation, 1e-6),
        below("max |<T>(t) - <T>(0) - t|", scan.max_mean_shift_error, 1e-7),
    ]
    return rep


def _eigen_scan(config):
    p = config.params()
    Ns = config._grid("n_list")
    scan = to.eigen_scan(p, to.QuadratureSpec(config.quad_nodes), Ns, states=to.standard_state_suite(p, config.seed))
    rep = _new(config, ["half_width", "eigenvectors", "interior_eigenvectors", "min_boundary_mass"])
    for N in Ns:
        m = scan.t_boundary_mass[N]
        rep.series.append({"half_width": N, "eigenvectors": len(m), "interior_eigenvectors": scan.t_interior_count[N], "min_boundary_mass": min(m)})
    rep.results.update(
        h_eigvec_max_aging=scan.h_max_aging,
        t_eigvec_interior_and_convergent=scan.t_interior_convergent,
        sigma_floor=scan.sigma_floor,
        sigma_floor_violations=[list(v) for v in scan.sigma_floor_violations],
        sigma_relation_violations=[list(v) for v in scan.sigma_relation_violations],
    )
    rep.verdicts += [
        below("H eigenvectors: max |<T>(t) - <T>(0)|", scan.h_max_aging, 1e-8),
        below("T eigenvectors with boundary mass <= 1e-3", float(sum(scan.t_interior_count.values())), 0.5),
        below("T eigenvectors interior and decay-convergent", float(scan.t_interior_convergent), 0.5),
        below("interior states violating sigma(T) >= 1/(2W)", float(len(scan.sigma_floor_violations)), 0.5),
        below("interior states violating sigma(T) >= 1/(2 sigma(H))", float(len(scan.sigma_relation_violations)), 0.5),
    ]
    return rep


def _system(config):
    if config.system_d == "two-level":
        return comp.two_level_system(0.8 / config.tau)
    return comp.ladder_system(5, 0.8 / config.tau)


def _duration(config):
    p = config.params()
    T = _time_operator(config)
    system = _system(config)
    clock0 = cm.gaussian_state(p, config.width)
    d0 = np.zeros(system.dim, dtype=complex)
    d0[0] = d0[1] = 2**-0.5
    base = comp.uncoupled(clock0, d0)
    s1 = comp.evolve_composite(base, config.t1 * p.tau, system)
    s2 = comp.evolve_composite(base, config.t2 * p.tau, system)
    dur = comp.measure_duration(s1, s2, T)
    shift = 1.3 * p.tau
    dur_shifted = comp.measure_duration(comp.evolve_composite(s1, shift, system), comp.evolve_composite(s2, shift, system), T)
    expected = abs(config.t2 - config.t1) * p.tau
    rep = _new(config)
    rep.results.update(duration=dur, expected=expected, duration_after_rezero=dur_shifted)
    rep.verdicts += [
        below("|duration - |t2 - t1||", abs(dur - expected), 1e-5),
        below("zero-point shift change", abs(dur_shifted - dur), 1e-8),
    ]
    return rep


def overlap_rule(kind: str, scale: float = 0.1):
    """Index rule for the named overlap family."""
    rules = {
        "zero": lambda n: np.zeros(n.shape),
        "geometric": lambda n: scale * 2.0 ** (-np.abs(n)),
        "inverse": lambda n: scale * np.where(n == 0, 0.0, 1.0 / np.where(n == 0, 1, np.abs(n))),
        "lorentzian": lambda n: scale / (1.0 + n**2),
        "gaussian": lambda n: scale * np.exp(-(n**2) / 18.0),
    }
    return rules[kind]


def _interact(config):
    p = config.params()
    rule = overlap_rule(config.overlap)
    probes = [t * p.tau for t in (config._grid("t_grid") if config.t_grid else [0.0, 1.0, 2.0])]
    Ns = config._grid("n_list")

    def trajectory(t, N):
        q = cm.ClockParams(p.tau, N)
        return cm.propagator_matrix(t, q).entries @ rule(q.indices)

    cls = comp.classify_interaction(trajectory, probes, Ns)
    rep = _new(config, ["t", "verdict"])
    rep.series = [{"t": t, "verdict": v} for t, v in zip(probes, cls.verdicts)]
    rep.results.update(interaction=cls.value.value, overlap_magnitude=cls.overlap_magnitude)
    if cls.value is not comp.Interaction.STRONG:
        T = _time_operator(config)
        clock = cm.gaussian_state(p, config.width)
        ov = rule(p.indices)
        try:
            value, degradation = comp.perturbed_time_expectation(clock, ov, T)
            rep.results.update(perturbed_time_expectation=value, degradation=degradation,
                               energy_exchange=comp.energy_exchange(clock, ov, cm.hamiltonian_matrix(p)))
        except ClockError as exc:
            rep.results.update(perturbed_time_expectation=None, note=f"{exc.category}: {exc}")
    return rep


def _pauli_state(config, p):
    return cm.tick_state(p, 0) if config.state == "tick" else cm.gaussian_state(p, config.width)


def _pauli_shift(config):
    p = config.params()
    T = _time_operator(config)
    H = cm.hamiltonian_matrix(p)
    s = _pauli_state(config, p)
    W = p.band_edge
    grid = config._grid("k_grid") if config.k_grid else [0.2 * W, 2.0 * W]
    rep = _new(config, ["k", "predicted", "measured", "deviation", "boundary_mass", "weighted_norm"])
    for k in grid:
        r = pauli.energy_shift_experiment(s, k, T, H)
        rep.series.append({"k": k, "predicted": r.predicted, "measured": r.measured, "deviation": r.deviation, "boundary_mass": r.boundary_mass, "weighted_norm": r.weighted_norm})
        if r.identity_violated:
            rep.verdicts.append(at_least(f"k={k / W:g}W: shift identity violated; deviation >= |<H>+k| - W", r.deviation, r.forced_deviation - 1e-8))
        elif abs(r.predicted) <= 0.5 * W:
            rep.verdicts.append(below(f"k={k / W:g}W: |measured - predicted|", r.deviation, 1e-3 * W))
    rep.results.update(bound_W=W, mean_H_before=float(to.expectation(H, s).real))
    return rep


def _leakage(config):
    p = config.params()
    T = _time_operator(config)
    W = p.band_edge
    grid = config._grid("k_grid") if config.k_grid else [0.0, 0.5 * W, W, 2.0 * W, 4.0 * W]
    curve = pauli.leakage_curve(_pauli_state(config, p), grid, T)
    rep = _new(config, ["k", "boundary_mass", "weighted_norm"])
    rep.series = curve.rows()
    rep.results.update(domain_edge=curve.domain_edge)
    return rep


_RUNNERS = {
    "verify-ccr": _verify_ccr,
    "covariance": _covariance,
    "uncertainty": _uncertainty,
    "sigma-invariance": _sigma_invariance,
    "eigen-scan": _eigen_scan,
    "duration": _duration,
    "interact": _interact,
    "pauli-shift": _pauli_shift,
    "leakage": _leakage,
}
