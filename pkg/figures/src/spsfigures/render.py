"""Render one result figure from a spsbench CSV.

Expected CSV schema (header line):
figure,scenario,p_k,n_s,tau,N_sen,rho,R_sen,d_bin_m,source,metric,mean,ci95,trials,error

Analytic rows become lines, simulated rows become markers with 95% CI error
bars; the legend is keyed by the parameters that vary in that figure.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["FIGURES", "FigureSpec", "RenderError", "render"]

REQUIRED_COLUMNS = {
    "figure", "scenario", "p_k", "n_s", "tau", "N_sen", "rho", "R_sen",
    "d_bin_m", "source", "metric", "mean", "ci95", "trials", "error",
}

MARKERS = ["o", "s", "^", "D", "v", "*", "P", "X"]


class RenderError(RuntimeError):
    """The CSV cannot back the requested figure."""


@dataclass(frozen=True)
class FigureSpec:
    """How one figure is assembled from CSV rows."""

    figure_id: str
    x_column: str
    metric: str
    series_columns: tuple[str, ...]
    x_label: str
    y_label: str
    title: str
    distance_binned: bool  # True: per-bin rows; False: rows without d_bin_m


FIGURES: dict[str, FigureSpec] = {
    "4a": FigureSpec(
        "4a", "N_sen", "throughput", ("p_k",),
        "sensed vehicles $N_{sen}$", "average throughput (pkts/s)",
        "Fully connected: throughput vs $N_{sen}$ ($n_s=5$)", False,
    ),
    "4b": FigureSpec(
        "4b", "p_k", "prr", ("N_sen",),
        "keeping probability $p_k$", "packet reception ratio",
        "Fully connected: PRR vs $p_k$ ($n_s=5$)", False,
    ),
    "4c": FigureSpec(
        "4c", "n_s", "throughput", ("N_sen", "p_k"),
        "subchannels $n_s$", "average throughput (pkts/s)",
        "Fully connected: throughput vs $n_s$", False,
    ),
    "5a": FigureSpec(
        "5a", "d_bin_m", "throughput", ("p_k",),
        "tx-rx distance (m)", "average throughput (pkts/s)",
        "Road: throughput vs distance ($n_s=5$)", True,
    ),
    "5b": FigureSpec(
        "5b", "d_bin_m", "throughput", ("n_s",),
        "tx-rx distance (m)", "average throughput (pkts/s)",
        "Road: throughput vs distance ($p_k=0$)", True,
    ),
    "5c": FigureSpec(
        "5c", "n_s", "throughput", ("p_k",),
        "subchannels $n_s$", "network throughput (pkts/s)",
        "Road: network throughput vs $n_s$", False,
    ),
}


def _load_rows(csv_path: str | Path, spec: FigureSpec) -> list[dict]:
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise RenderError(f"{csv_path}: empty CSV")
        missing = REQUIRED_COLUMNS - set(reader.fieldnames)
        if missing:
            raise RenderError(f"{csv_path}: missing columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise RenderError(f"{csv_path}: no data rows")
    rows = [r for r in rows if not r["error"]]
    tagged = [r for r in rows if r["figure"] == spec.figure_id]
    if not tagged:
        raise RenderError(
            f"{csv_path}: no rows tagged figure={spec.figure_id!r}"
        )
    out = []
    for r in tagged:
        if r["metric"] != spec.metric:
            continue
        if spec.distance_binned != bool(r["d_bin_m"]):
            continue
        out.append(r)
    if not out:
        raise RenderError(
            f"{csv_path}: no {spec.metric} rows usable for figure {spec.figure_id}"
        )
    return out


def _series_label(spec: FigureSpec, key: tuple[str, ...]) -> str:
    names = {"p_k": "$p_k$", "n_s": "$n_s$", "N_sen": "$N_{sen}$"}
    return ", ".join(f"{names[c]}={v}" for c, v in zip(spec.series_columns, key))


def render(
    figure_id: str,
    csv_path: str | Path,
    out_path: str | Path,
    *,
    raster: bool = False,
) -> Path:
    """Render figure_id from csv_path to out_path; returns the written path.

    Vector (SVG) by default, PNG with raster=True. Output carries no
    timestamps, so identical input gives identical bytes.
    """
    if figure_id not in FIGURES:
        raise RenderError(
            f"unknown figure {figure_id!r}; known: {', '.join(sorted(FIGURES))}"
        )
    spec = FIGURES[figure_id]
    rows = _load_rows(csv_path, spec)

    series: dict[tuple[str, ...], dict[str, list]] = {}
    for r in rows:
        key = tuple(r[c] for c in spec.series_columns)
        bucket = series.setdefault(key, {"analytic": [], "sim": []})
        x = float(r[spec.x_column])
        mean = float(r["mean"])
        ci = float(r["ci95"]) if r["ci95"] else 0.0
        bucket[r["source"]].append((x, mean, ci))

    plt.rcParams["svg.hashsalt"] = "spsfigures"
    fig, ax = plt.subplots(figsize=(5.2, 3.9), constrained_layout=True)
    any_sim = False
    for i, key in enumerate(sorted(series, key=lambda k: tuple(float(v) for v in k))):
        label = _series_label(spec, key)
        color = f"C{i % 10}"
        ana = sorted(series[key]["analytic"])
        sim = sorted(series[key]["sim"])
        if ana:
            ax.plot(
                [p[0] for p in ana], [p[1] for p in ana],
                color=color, lw=1.6, label=f"model, {label}",
            )
        if sim:
            any_sim = True
            ax.errorbar(
                [p[0] for p in sim], [p[1] for p in sim],
                yerr=[p[2] for p in sim], color=color, ls="none",
                marker=MARKERS[i % len(MARKERS)], ms=5, capsize=3,
                label=f"sim, {label}",
            )
    if not any_sim:
        print(
            f"warning: {csv_path} holds no simulated rows for figure "
            f"{figure_id}; rendering model lines only",
            file=sys.stderr,
        )
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    if raster:
        fig.savefig(out, format="png", dpi=150)
    else:
        fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
