"""Experiment orchestration: grids, Monte Carlo batches, CSV emission.

A spec file is a flat YAML mapping; grid keys (p_k, n_s, n_sen, rho) accept a
scalar or a list and the run covers their cross product. Each grid point
yields analytic rows and simulated rows sharing identical key columns.

CSV schema (one header line), numbers formatted with 6 significant digits:
figure,scenario,p_k,n_s,tau,N_sen,rho,R_sen,d_bin_m,source,metric,mean,ci95,trials,error
Inapplicable fields are left empty. Model errors surface as rows with the
error column set rather than being dropped.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import yaml

from . import analytic, metrics
from .analytic import PcnParams, SpsConfig
from .errors import ConfigError, ModelError
from .simcore import FullyConnected, PartiallyConnected, Scenario, TrialResult, run_trial

__all__ = [
    "ExperimentSpec",
    "GridPoint",
    "CSV_FIELDS",
    "FIGURE_IDS",
    "load_spec",
    "reproduce_spec",
    "run_experiment",
    "read_csv",
    "default_out_dir",
]

CSV_FIELDS = [
    "figure",
    "scenario",
    "p_k",
    "n_s",
    "tau",
    "N_sen",
    "rho",
    "R_sen",
    "d_bin_m",
    "source",
    "metric",
    "mean",
    "ci95",
    "trials",
    "error",
]

FIGURE_IDS = ("4a", "4b", "4c", "5a", "5b", "5c")

OUT_DIR_ENV = "SPSBENCH_OUT"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "out"))


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a scenario family swept over a parameter grid."""

    name: str
    scenario: str  # "fully_connected" | "partially_connected"
    p_k: tuple[float, ...]
    n_s: tuple[int, ...]
    figure: str = ""
    tau: float = 10.0
    t_s: float = 1.0
    n_sen: tuple[int, ...] = ()  # fully connected grid axis
    rho: tuple[float, ...] = ()  # road grid axis (veh/km)
    r_sen_km: float = 0.4
    road_km: float = 5.0
    trials: int = 40
    duration_s: float = 300.0
    warmup_s: float = 10.0
    base_seed: int = 20240701
    bin_width_m: float = 25.0

    def __post_init__(self):
        if self.scenario not in ("fully_connected", "partially_connected"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.duration_s <= 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        if self.warmup_s < 0:
            raise ConfigError(f"warmup_s must be non-negative, got {self.warmup_s}")
        if self.base_seed < 0:
            raise ConfigError(f"base_seed must be non-negative, got {self.base_seed}")
        if not self.p_k or not self.n_s:
            raise ConfigError("p_k and n_s grids must be non-empty")
        if self.scenario == "fully_connected" and not self.n_sen:
            raise ConfigError("fully connected spec needs an n_sen grid")
        if self.scenario == "partially_connected" and not self.rho:
            raise ConfigError("partially connected spec needs a rho grid")
        # Fail fast on any invalid grid point.
        for _ in self.grid_points():
            pass

    def grid_points(self) -> list["GridPoint"]:
        points = []
        if self.scenario == "fully_connected":
            for p_k, n_s, n_sen in itertools.product(self.p_k, self.n_s, self.n_sen):
                cfg = SpsConfig(p_k=p_k, n_s=n_s, t_s=self.t_s, tau=self.tau)
                points.append(
                    GridPoint(
                        cfg=cfg,
                        scenario=FullyConnected(n_vehicles=n_sen + 1),
                        n_sen=float(n_sen),
                        pcn=None,
                    )
                )
        else:
            for p_k, n_s, rho in itertools.product(self.p_k, self.n_s, self.rho):
                cfg = SpsConfig(p_k=p_k, n_s=n_s, t_s=self.t_s, tau=self.tau)
                pcn = PcnParams(rho=rho, r_sen_km=self.r_sen_km)
                points.append(
                    GridPoint(
                        cfg=cfg,
                        scenario=PartiallyConnected(
                            road_km=self.road_km, rho=rho, r_sen_km=self.r_sen_km
                        ),
                        n_sen=pcn.n_sen,
                        pcn=pcn,
                    )
                )
        return points


@dataclass(frozen=True)
class GridPoint:
    cfg: SpsConfig
    scenario: Scenario
    n_sen: float
    pcn: PcnParams | None


_SPEC_KEYS = {
    "name",
    "figure",
    "scenario",
    "p_k",
    "n_s",
    "tau",
    "t_s",
    "n_sen",
    "rho",
    "r_sen_km",
    "road_km",
    "trials",
    "duration_s",
    "warmup_s",
    "base_seed",
    "bin_width_m",
}
_GRID_KEYS = {"p_k", "n_s", "n_sen", "rho"}


def load_spec(path: str | Path) -> ExperimentSpec:
    """Parse a flat YAML experiment spec."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: spec must be a flat key/value mapping")
    unknown = set(raw) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key in _GRID_KEYS:
            seq = value if isinstance(value, (list, tuple)) else [value]
            kwargs[key] = tuple(seq)
        else:
            kwargs[key] = value
    kwargs.setdefault("name", Path(path).stem)
    try:
        return ExperimentSpec(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{path}: {e}") from e


def reproduce_spec(figure: str) -> ExperimentSpec:
    """Built-in spec reproducing one result figure's data."""
    fc = dict(scenario="fully_connected", trials=40, duration_s=300.0)
    pc = dict(
        scenario="partially_connected",
        trials=40,
        duration_s=500.0,
        rho=(200.0,),
        r_sen_km=0.4,
        road_km=5.0,
        bin_width_m=25.0,
    )
    specs = {
        "4a": ExperimentSpec(
            name="fig4a", figure="4a", p_k=(0.0, 0.8), n_s=(5,),
            n_sen=(100, 200, 300, 400), **fc,
        ),
        "4b": ExperimentSpec(
            name="fig4b", figure="4b",
            p_k=tuple(round(0.1 * i, 1) for i in range(10)), n_s=(5,),
            n_sen=(100, 200, 300, 400), **fc,
        ),
        "4c": ExperimentSpec(
            name="fig4c", figure="4c", p_k=(0.0, 0.8), n_s=(5, 10, 15),
            n_sen=(50, 100, 200, 400), **fc,
        ),
        "5a": ExperimentSpec(
            name="fig5a", figure="5a", p_k=(0.0, 0.8), n_s=(5,), **pc,
        ),
        "5b": ExperimentSpec(
            name="fig5b", figure="5b", p_k=(0.0,), n_s=(5, 10, 15), **pc,
        ),
        "5c": ExperimentSpec(
            name="fig5c", figure="5c", p_k=(0.0, 0.8), n_s=(5, 10, 15), **pc,
        ),
    }
    if figure not in specs:
        raise ConfigError(
            f"unknown figure id {figure!r}; valid ids: {', '.join(FIGURE_IDS)}"
        )
    return specs[figure]


# ---------------------------------------------------------------------------
# execution


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return ""
    if v == int(v) and abs(v) < 1e15:
        return _fmt(int(v))
    return f"{v:.6g}"


def _row(spec: ExperimentSpec, point: GridPoint, **kw) -> dict:
    base = {
        "figure": spec.figure,
        "scenario": spec.scenario,
        "p_k": _fmt(point.cfg.p_k),
        "n_s": _fmt(point.cfg.n_s),
        "tau": _fmt(point.cfg.tau),
        "N_sen": _fmt(point.n_sen),
        "rho": _fmt(point.pcn.rho) if point.pcn else "",
        "R_sen": _fmt(point.pcn.r_sen_km) if point.pcn else "",
        "d_bin_m": "",
        "source": "",
        "metric": "",
        "mean": "",
        "ci95": "",
        "trials": "",
        "error": "",
    }
    base.update({k: _fmt(v) for k, v in kw.items()})
    return base


def _bin_centers(spec: ExperimentSpec) -> list[float]:
    n_bins = int(math.ceil(spec.r_sen_km * 1000.0 / spec.bin_width_m))
    return [(b + 0.5) * spec.bin_width_m for b in range(n_bins)]


def _analytic_rows(spec: ExperimentSpec, point: GridPoint) -> list[dict]:
    rows = []
    if point.pcn is None:
        try:
            prr = analytic.prr_fcn(point.cfg, point.n_sen)
        except ModelError as e:
            return [_row(spec, point, source="analytic", error=str(e))]
        thr = analytic.throughput(point.cfg, prr)
        rows.append(_row(spec, point, source="analytic", metric="prr", mean=prr))
        rows.append(_row(spec, point, source="analytic", metric="throughput", mean=thr))
        return rows
    thr_values = []
    for center in _bin_centers(spec):
        try:
            prr = analytic.prr_pcn(point.cfg, point.pcn, center)
        except ModelError as e:
            rows.append(
                _row(spec, point, d_bin_m=center, source="analytic", error=str(e))
            )
            continue
        thr = analytic.throughput(point.cfg, prr)
        thr_values.append(thr)
        rows.append(
            _row(spec, point, d_bin_m=center, source="analytic", metric="prr", mean=prr)
        )
        rows.append(
            _row(
                spec, point, d_bin_m=center, source="analytic",
                metric="throughput", mean=thr,
            )
        )
    if thr_values:
        # network throughput: unweighted mean over the distance bins
        rows.append(
            _row(
                spec, point, source="analytic", metric="throughput",
                mean=sum(thr_values) / len(thr_values),
            )
        )
    return rows


def _trial_task(args) -> TrialResult:
    scenario, cfg, seed, duration_s, warmup_s, deaf = args
    return run_trial(
        scenario, cfg, seed, duration_s, warmup_s, deaf_sensing=deaf
    )


def run_trials(
    scenario: Scenario,
    cfg: SpsConfig,
    *,
    trials: int,
    duration_s: float,
    warmup_s: float,
    base_seed: int,
    jobs: int | None = None,
    deaf_sensing: bool = True,
    pool: ProcessPoolExecutor | None = None,
) -> list[TrialResult]:
    """Run independent trials with seeds base_seed + index; results are
    returned in trial-index order regardless of worker scheduling."""
    if warmup_s >= duration_s:
        warmup_s = 0.0  # degenerate run: count everything
    tasks = [
        (scenario, cfg, base_seed + i, duration_s, warmup_s, deaf_sensing)
        for i in range(trials)
    ]
    jobs = jobs or os.cpu_count() or 1
    if pool is not None:
        return list(pool.map(_trial_task, tasks))
    if jobs <= 1 or trials == 1:
        return [_trial_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, trials)) as ex:
        return list(ex.map(_trial_task, tasks))


def _sim_rows(
    spec: ExperimentSpec,
    point: GridPoint,
    jobs: int | None,
    strict_paper_mode: bool,
    pool: ProcessPoolExecutor | None = None,
) -> list[dict]:
    trials = run_trials(
        point.scenario,
        point.cfg,
        trials=spec.trials,
        duration_s=spec.duration_s,
        warmup_s=spec.warmup_s,
        base_seed=spec.base_seed,
        jobs=jobs,
        deaf_sensing=not strict_paper_mode,
        pool=pool,
    )
    rows = []
    if point.pcn is None:
        agg = metrics.aggregate_all_pairs(trials)
        rows.append(
            _row(
                spec, point, source="sim", metric="prr",
                mean=agg.prr_mean, ci95=agg.prr_ci95, trials=agg.n_trials,
            )
        )
        rows.append(
            _row(
                spec, point, source="sim", metric="throughput",
                mean=agg.throughput_mean, ci95=agg.throughput_ci95,
                trials=agg.n_trials,
            )
        )
        return rows
    groups = metrics.bin_by_distance(trials, spec.bin_width_m)
    for agg in metrics.aggregate(groups, trials):
        rows.append(
            _row(
                spec, point, d_bin_m=agg.d_bin_m, source="sim", metric="prr",
                mean=agg.prr_mean, ci95=agg.prr_ci95, trials=agg.n_trials,
            )
        )
        rows.append(
            _row(
                spec, point, d_bin_m=agg.d_bin_m, source="sim",
                metric="throughput", mean=agg.throughput_mean,
                ci95=agg.throughput_ci95, trials=agg.n_trials,
            )
        )
    net = metrics.network_throughput_by_trial(trials, spec.bin_width_m)
    rows.append(
        _row(
            spec, point, source="sim", metric="throughput",
            mean=net.throughput_mean, ci95=net.throughput_ci95,
            trials=net.n_trials,
        )
    )
    return rows


def run_experiment(
    spec: ExperimentSpec,
    out_dir: str | Path | None = None,
    *,
    jobs: int | None = None,
    simulate: bool = True,
    strict_paper_mode: bool = False,
) -> tuple[Path, int]:
    """Run every grid point and write <name>.csv; returns (path, error_rows).

    Each grid point contributes analytic rows and, when simulate is set,
    simulated rows keyed identically. Model errors become rows with the
    error column filled.
    """
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    n_errors = 0
    pool = None
    jobs = jobs or os.cpu_count() or 1
    try:
        if simulate and jobs > 1 and spec.trials > 1:
            pool = ProcessPoolExecutor(max_workers=jobs)
        for point in spec.grid_points():
            point_rows = _analytic_rows(spec, point)
            if simulate:
                point_rows += _sim_rows(spec, point, jobs, strict_paper_mode, pool)
            n_errors += sum(1 for r in point_rows if r["error"])
            rows.extend(point_rows)
    finally:
        if pool is not None:
            pool.shutdown()
    path = out / f"{spec.name}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path, n_errors


def read_csv(path: str | Path) -> list[dict]:
    """Read a result CSV back into dicts (values stay strings)."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
