"""Monte Carlo scenarios, seeded trial execution and CSV output.

Every random draw is keyed by ``(seed, trial, cluster, device)``, so the same
devices see the same fading across sweep values, methods and degrees of
parallelism. Only the closed-form MSE is averaged; it is exact given the
channels, so the only Monte Carlo noise comes from the fading.
"""

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Dict, List, Optional

import numpy as np
import yaml
from joblib import Parallel, delayed

from .aircomp import LinkBudget, RankDeficiencyError, p2_objective
from .channel import (
    ArrayGeometry,
    ClusterSpec,
    SystemDims,
    analytic_rank,
    build_covariance,
    decompose_cluster,
    device_rng,
    path_loss_gain,
    sample_channels,
)
from .dab import design_disjoint, design_overlapping, design_reference
from .rank_select import select_heterogeneous, select_homogeneous, select_overlapping, truncate

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "ResultRow",
    "METHODS",
    "SCENARIOS",
    "builtin_scenario",
    "cluster_ranges",
    "build_models",
    "run_scenario",
    "emit_csv",
    "format_csv",
    "load_config",
]

log = logging.getLogger(__name__)

CSV_HEADER = ["scenario", "sweep_name", "sweep_value", "method", "mean_mse", "std_err", "trials"]
SWEEP_NAMES = ("p_t_dbm", "k", "delta_deg")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    """One sweep of the simulation.

    ``aoa_ranges`` holds ``[theta_min, theta_max]`` per cluster in degrees.
    For a ``delta_deg`` sweep cluster ``g`` is shifted by
    ``delta_shifts[g] * delta``.
    """

    name: str
    n_rx: int
    aoa_ranges: List[List[float]]
    sweep_name: str
    sweep_values: List[float]
    methods: List[str]
    spacing: float = 1.0 / 3.0
    n_devices: int = 5
    n_tx: int = 5
    payload_dim: int = 5
    p_t_dbm: float = 20.0
    bandwidth_hz: float = 10e6
    noise_density_dbm_hz: float = -174.0
    distance_km: float = 0.05
    delta_shifts: List[float] = field(default_factory=lambda: [-1.0, 1.0])
    trials: int = 500
    seed: int = 0

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sweep_name not in SWEEP_NAMES:
            raise ConfigError(f"sweep_name must be one of {SWEEP_NAMES}, got {self.sweep_name!r}")
        if not self.sweep_values:
            raise ConfigError("sweep_values is empty")
        if not self.methods:
            raise ConfigError("methods is empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; valid: {sorted(METHODS)}")
        if not self.aoa_ranges:
            raise ConfigError("aoa_ranges is empty")
        if self.sweep_name == "delta_deg" and len(self.delta_shifts) != len(self.aoa_ranges):
            raise ConfigError("delta_shifts needs one entry per cluster")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        try:
            for v in self.sweep_values:
                for lo, hi in cluster_ranges(self, v):
                    ClusterSpec(lo, hi)
            ArrayGeometry(self.n_rx, self.spacing)
            SystemDims(self.n_tx, self.payload_dim, len(self.aoa_ranges))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    sweep_name: str
    sweep_value: float
    method: str
    mean_mse: float
    std_err: float
    trials: int


def _dis(models, channels, dims):
    return design_disjoint(models, channels, dims).beamformer.matrix


def _dis_hom(models, channels, dims):
    r, _ = select_homogeneous(models, channels, dims)
    return _dis([truncate(m, r) for m in models], channels, dims)


def _dis_het(models, channels, dims):
    ranks = select_heterogeneous(models, channels, dims)[0].ranks
    return _dis([truncate(m, r) for m, r in zip(models, ranks)], channels, dims)


def _ovp(models, channels, dims):
    return design_overlapping(models, channels, dims).beamformer.matrix


def _ovp_rs(models, channels, dims):
    r, _ = select_overlapping(models, channels, dims)
    return design_overlapping(models, channels, dims, r_s=r).beamformer.matrix


def _ref(models, channels, dims):
    return design_reference(channels, dims).matrix


METHODS: Dict[str, Callable] = {
    "DisDAB": _dis,
    "DisDAB+HomRS": _dis_hom,
    "DisDAB+HetRS": _dis_het,
    "OvpDAB": _ovp,
    "OvpDAB+RS": _ovp_rs,
    "Reference": _ref,
}

_FIG3 = dict(n_rx=48, aoa_ranges=[[-49.0, -1.0], [1.0, 49.0]], methods=["DisDAB", "DisDAB+HomRS"])
_FIG4 = dict(
    n_rx=48,
    aoa_ranges=[[-51.0, -15.0], [-14.0, 14.0], [15.0, 41.0]],
    methods=["DisDAB", "DisDAB+HomRS", "DisDAB+HetRS"],
)
_FIG5 = dict(n_rx=48, aoa_ranges=[[-45.0, 15.0], [-15.0, 45.0]], methods=["OvpDAB", "OvpDAB+RS"])
_FIG6 = dict(n_rx=30, p_t_dbm=24.0, methods=["DisDAB", "OvpDAB", "Reference"])
_PT_SWEEP = dict(sweep_name="p_t_dbm", sweep_values=[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
_K_SWEEP = dict(sweep_name="k", sweep_values=[5, 10, 15, 20])

SCENARIOS = {
    "fig3a": dict(_FIG3, **_PT_SWEEP),
    "fig3b": dict(_FIG3, **_K_SWEEP),
    "fig4a": dict(_FIG4, **_PT_SWEEP),
    "fig4b": dict(_FIG4, **_K_SWEEP),
    "fig5a": dict(_FIG5, **_PT_SWEEP),
    "fig5b": dict(_FIG5, **_K_SWEEP),
    "fig6a": dict(
        _FIG6,
        aoa_ranges=[[-35.0, 25.0], [-30.0, 30.0]],
        delta_shifts=[-1.0, 1.0],
        sweep_name="delta_deg",
        sweep_values=[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
    ),
    "fig6b": dict(_FIG6, aoa_ranges=[[-50.0, 10.0], [-15.0, 45.0]], **_K_SWEEP),
}

DESCRIPTIONS = {
    "fig3a": "2 disjoint clusters, N_r=48, MSE vs P_t, homogeneous rank selection",
    "fig3b": "2 disjoint clusters, N_r=48, MSE vs K, homogeneous rank selection",
    "fig4a": "3 disjoint clusters, N_r=48, MSE vs P_t, heterogeneous rank selection",
    "fig4b": "3 disjoint clusters, N_r=48, MSE vs K, heterogeneous rank selection",
    "fig5a": "2 overlapping clusters, N_r=48, MSE vs P_t, inner-rank search",
    "fig5b": "2 overlapping clusters, N_r=48, MSE vs K, inner-rank search",
    "fig6a": "N_r=30, P_t=24 dBm, MSE vs AoA shift delta: DisDAB / OvpDAB / Reference",
    "fig6b": "N_r=30, P_t=24 dBm, MSE vs K: DisDAB / OvpDAB / Reference",
}


def builtin_scenario(name):
    """Scenario configuration for one of the built-in setups (see ``SCENARIOS``)."""
    try:
        params = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; valid names: {', '.join(SCENARIOS)}") from None
    params = {k: (list(map(list, v)) if k == "aoa_ranges" else list(v) if isinstance(v, list) else v)
              for k, v in params.items()}
    return ScenarioConfig(name=name, **params).validate()


def cluster_ranges(config, sweep_value=None):
    """AoA ranges of all clusters for one sweep value."""
    if config.sweep_name == "delta_deg" and sweep_value is not None:
        return [[lo + s * sweep_value, hi + s * sweep_value]
                for (lo, hi), s in zip(config.aoa_ranges, config.delta_shifts)]
    return [list(r) for r in config.aoa_ranges]


def _overlaps(ranges):
    ranges = sorted(ranges)
    return any(ranges[i + 1][0] <= ranges[i][1] for i in range(len(ranges) - 1))


def build_models(config, ranges):
    geom = ArrayGeometry(config.n_rx, config.spacing)
    models = []
    for lo, hi in ranges:
        spec = ClusterSpec(lo, hi)
        cov = build_covariance(geom, spec)
        models.append(decompose_cluster(cov, analytic_rank(geom, spec, config.payload_dim)))
    return models


def _trial_block(config, ranges, n_devices, methods, trials):
    """P2 objectives, shape (len(trials), len(methods)), for a block of trials."""
    models = build_models(config, ranges)
    dims = SystemDims(config.n_tx, config.payload_dim, len(models))
    gain = path_loss_gain(config.distance_km)
    out = np.empty((len(trials), len(methods)))
    for i, t in enumerate(trials):
        channels = []
        for g, m in enumerate(models):
            rngs = [device_rng(config.seed, t, g, k) for k in range(n_devices)]
            channels += sample_channels(m, dims, gain, rngs, cluster_index=g)
        for j, name in enumerate(methods):
            A = METHODS[name](models, channels, dims)
            try:
                out[i, j] = p2_objective(A, channels)
            except RankDeficiencyError:
                # no common eta > 0 exists for this draw: the aggregation error is unbounded
                out[i, j] = np.inf
    return out


def _mean_stderr(x):
    n = len(x)
    mean = math.fsum(x) / n
    if math.isinf(mean):
        return mean, math.inf
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in x) / (n - 1)
    return mean, math.sqrt(var / n)


def run_scenario(config, n_jobs=1, per_entry=False, block_size=25):
    """Run every sweep value and method of ``config``.

    Parameters
    ----------
    config : ScenarioConfig
    n_jobs : int
        Worker processes for trial blocks. Results do not depend on it.
    per_entry : bool
        Divide the MSE by the payload dimension.
    block_size : int
        Trials per parallel task.

    Returns
    -------
    list of ResultRow
    """
    config.validate()
    methods = list(config.methods)
    blocks = [list(range(s, min(s + block_size, config.trials))) for s in range(0, config.trials, block_size)]
    cache = {}
    rows = []
    for value in config.sweep_values:
        ranges = cluster_ranges(config, value)
        n_devices = int(value) if config.sweep_name == "k" else config.n_devices
        p_t_dbm = value if config.sweep_name == "p_t_dbm" else config.p_t_dbm
        if any(m.startswith("DisDAB") for m in methods) and _overlaps(ranges):
            log.warning("%s: disjoint design applied to overlapping AoA ranges %s", config.name, ranges)
        key = (tuple(map(tuple, ranges)), n_devices)
        if key not in cache:
            if n_jobs == 1:
                parts = [_trial_block(config, ranges, n_devices, methods, b) for b in blocks]
            else:
                parts = Parallel(n_jobs=n_jobs)(
                    delayed(_trial_block)(config, ranges, n_devices, methods, b) for b in blocks
                )
            cache[key] = np.concatenate(parts, axis=0)
        p2 = cache[key]
        n_inf = np.isinf(p2).sum(axis=0)
        for name, n in zip(methods, n_inf):
            if n:
                log.warning("%s at %s=%g: %d of %d trials rank deficient (MSE = inf)",
                            name, config.sweep_name, value, n, config.trials)
        budget = LinkBudget.from_dbm(p_t_dbm, config.noise_density_dbm_hz, config.bandwidth_hz)
        scale = budget.n0 / budget.p_t / (config.payload_dim if per_entry else 1)
        for j, name in enumerate(methods):
            mean, se = _mean_stderr((scale * p2[:, j]).tolist())
            rows.append(ResultRow(config.name, config.sweep_name, float(value), name, mean, se, config.trials))
    return rows


def _fmt(x):
    return f"{x:.8e}"


def format_csv(rows):
    rows = list(rows)
    if not rows:
        raise ValueError("no result rows to write")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.scenario, r.sweep_name, _fmt(r.sweep_value), r.method,
                    _fmt(r.mean_mse), _fmt(r.std_err), r.trials])
    return buf.getvalue()


def emit_csv(rows, destination):
    """Write rows as UTF-8 CSV to a path or binary/text stream; return bytes written."""
    data = format_csv(rows).encode("utf-8")
    if hasattr(destination, "write"):
        target = getattr(destination, "buffer", destination)
        try:
            target.write(data)
        except TypeError:
            target.write(data.decode("utf-8"))
        target.flush()
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return len(data)


def load_config(path):
    """Read a YAML scenario file whose keys are :class:`ScenarioConfig` fields."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping of fields")
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    try:
        config = ScenarioConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config.validate()


def config_to_dict(config):
    return asdict(config)


def with_overrides(config, seed=None, trials=None):
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if trials is not None:
        changes["trials"] = trials
    return replace(config, **changes).validate() if changes else config
