"""Reduction of raw trial accounting to the plotted quantities.

Measurement conventions:
* PRR counts MAC collisions only: received / (sent - hd_blocked). Half-duplex
  slot clashes are excluded from the denominator so the ratio is comparable
  with the collision model; they still depress throughput.
* Throughput is measured directly as receptions per counted second.
* Confidence intervals are normal-approximation 95% intervals across
  per-trial means; trials are the independent replication unit (pairs within
  a trial are correlated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simcore import PartiallyConnected, TrialResult

__all__ = [
    "AggregateResult",
    "pair_throughput",
    "pair_prr",
    "pooled_prr",
    "edge_free_tx_mask",
    "bin_by_distance",
    "aggregate",
    "aggregate_all_pairs",
    "network_throughput",
    "network_throughput_by_trial",
]


@dataclass(frozen=True)
class AggregateResult:
    """One plotted point: mean and CI over trials for one pair group."""

    group: str
    d_bin_m: float | None
    prr_mean: float
    prr_ci95: float
    throughput_mean: float
    throughput_ci95: float
    n_trials: int
    n_pairs: int
    ci_flagged: bool  # True when a CI cannot be formed (single trial)


def pair_throughput(packets_received, counted_duration_s: float):
    """Received packets per second, directly measured."""
    if counted_duration_s <= 0:
        raise ValueError(f"counted duration must be positive, got {counted_duration_s}")
    return np.asarray(packets_received, dtype=float) / counted_duration_s


def pair_prr(trial: TrialResult, idx=None) -> np.ndarray:
    """Per-pair MAC-collision PRR; NaN where the pair never had a decodable
    transmission (receiver always half-duplex blocked)."""
    received = trial.packets_received
    decodable = trial.counted_periods - trial.packets_hd_blocked
    if idx is not None:
        received = received[idx]
        decodable = decodable[idx]
    out = np.full(received.shape, np.nan)
    np.divide(received, decodable, out=out, where=decodable > 0)
    return out


def pooled_prr(trials: Sequence[TrialResult], masks=None) -> float:
    """PRR pooled over pairs and trials: total received / total decodable."""
    received = 0
    decodable = 0
    for t, trial in enumerate(trials):
        idx = slice(None) if masks is None else masks[t]
        received += int(trial.packets_received[idx].sum())
        decodable += int(
            (trial.counted_periods - trial.packets_hd_blocked[idx]).sum()
        )
    if decodable == 0:
        return float("nan")
    return received / decodable


def edge_free_tx_mask(trial: TrialResult) -> np.ndarray:
    """Pairs whose transmitter is clear of the road ends by 2*R_sen, so the
    transmitter's sensing range and every receiver's hidden region are fully
    populated."""
    scn = trial.scenario
    if not isinstance(scn, PartiallyConnected):
        return np.ones(trial.tx_ids.size, dtype=bool)
    margin = 2.0 * scn.r_sen_km * 1000.0
    road = scn.road_km * 1000.0
    tx_pos = trial.vehicle_positions_m[trial.tx_ids]
    return (tx_pos >= margin) & (tx_pos <= road - margin)


def bin_by_distance(
    trials: Sequence[TrialResult], bin_width_m: float
) -> dict[float, list[np.ndarray]]:
    """Group pairs by transmitter-receiver distance.

    Returns bin center -> one pair-index array per trial. Pairs sitting
    exactly at the sensing range fall into the last bin. Only edge-free
    transmitters are included.
    """
    if bin_width_m <= 0:
        raise ValueError(f"bin width must be positive, got {bin_width_m}")
    if not trials:
        return {}
    scn = trials[0].scenario
    if not isinstance(scn, PartiallyConnected):
        raise ValueError("distance binning applies to the road scenario only")
    r_sen_m = scn.r_sen_km * 1000.0
    n_bins = int(math.ceil(r_sen_m / bin_width_m))

    per_trial: list[dict[int, np.ndarray]] = []
    occupied: set[int] = set()
    for trial in trials:
        keep = edge_free_tx_mask(trial)
        idx_bin = np.minimum(
            (trial.pair_dist_m // bin_width_m).astype(int), n_bins - 1
        )
        sels = {}
        for b in range(n_bins):
            sel = np.flatnonzero(keep & (idx_bin == b))
            if sel.size:
                sels[b] = sel
                occupied.add(b)
        per_trial.append(sels)
    empty = np.empty(0, dtype=np.int64)
    return {
        (b + 0.5) * bin_width_m: [sels.get(b, empty) for sels in per_trial]
        for b in sorted(occupied)
    }


def _ci95(values: np.ndarray) -> float:
    if values.size <= 1:
        return 0.0
    return 1.96 * values.std(ddof=1) / math.sqrt(values.size)


def aggregate(
    groups: dict, trials: Sequence[TrialResult], *, group_prefix: str = ""
) -> list[AggregateResult]:
    """Mean over per-trial group means with a 95% CI across trials.

    groups maps a bin center (or None for one whole-population group) to one
    pair-index array per trial. Groups that are empty in every trial are
    omitted.
    """
    if not trials:
        raise ValueError("need at least one trial")
    out = []
    for key, idx_per_trial in groups.items():
        prr_means, thr_means = [], []
        n_pairs = 0
        for trial, idx in zip(trials, idx_per_trial):
            if idx is None:
                continue
            idx = np.asarray(idx)
            if idx.size == 0:
                continue
            n_pairs = max(n_pairs, int(idx.size))
            prr = pair_prr(trial, idx)
            if np.isnan(prr).all():
                prr_means.append(np.nan)
            else:
                prr_means.append(float(np.nanmean(prr)))
            thr = pair_throughput(
                trial.packets_received[idx], trial.counted_duration_s
            )
            thr_means.append(float(thr.mean()))
        if not thr_means:
            continue
        prr_arr = np.asarray([v for v in prr_means if not np.isnan(v)])
        thr_arr = np.asarray(thr_means)
        out.append(
            AggregateResult(
                group=f"{group_prefix}{key}" if key is not None else group_prefix,
                d_bin_m=key if isinstance(key, float) else None,
                prr_mean=float(prr_arr.mean()) if prr_arr.size else float("nan"),
                prr_ci95=_ci95(prr_arr),
                throughput_mean=float(thr_arr.mean()),
                throughput_ci95=_ci95(thr_arr),
                n_trials=int(thr_arr.size),
                n_pairs=n_pairs,
                ci_flagged=thr_arr.size <= 1,
            )
        )
    return out


def aggregate_all_pairs(
    trials: Sequence[TrialResult], *, group: str = ""
) -> AggregateResult:
    """Aggregate with every pair in a single group (fully connected use)."""
    idx = [np.arange(t.tx_ids.size) for t in trials]
    results = aggregate({None: idx}, trials, group_prefix=group)
    if not results:
        raise ValueError("no pairs to aggregate")
    return results[0]


def network_throughput(curve: Sequence[AggregateResult]) -> float:
    """Network-level throughput: unweighted mean over distance bins."""
    if not curve:
        raise ValueError("empty distance curve")
    return float(np.mean([p.throughput_mean for p in curve]))


def network_throughput_by_trial(
    trials: Sequence[TrialResult], bin_width_m: float, *, group: str = ""
) -> AggregateResult:
    """Per-trial network throughput (mean over that trial's bin means),
    aggregated across trials; PRR fields carry the same reduction."""
    groups = bin_by_distance(trials, bin_width_m)
    if not groups:
        raise ValueError("empty distance curve")
    per_trial_thr = []
    per_trial_prr = []
    n_pairs = 0
    for t, trial in enumerate(trials):
        bin_thr, bin_prr = [], []
        for center, idx_per_trial in groups.items():
            idx = idx_per_trial[t]
            if idx is None or len(idx) == 0:
                continue
            n_pairs = max(n_pairs, int(len(idx)))
            bin_thr.append(
                float(
                    pair_throughput(
                        trial.packets_received[idx], trial.counted_duration_s
                    ).mean()
                )
            )
            prr = pair_prr(trial, idx)
            if not np.isnan(prr).all():
                bin_prr.append(float(np.nanmean(prr)))
        if bin_thr:
            per_trial_thr.append(float(np.mean(bin_thr)))
        if bin_prr:
            per_trial_prr.append(float(np.mean(bin_prr)))
    thr_arr = np.asarray(per_trial_thr)
    prr_arr = np.asarray(per_trial_prr)
    if thr_arr.size == 0:
        raise ValueError("no counted pairs in any trial")
    return AggregateResult(
        group=group,
        d_bin_m=None,
        prr_mean=float(prr_arr.mean()) if prr_arr.size else float("nan"),
        prr_ci95=_ci95(prr_arr),
        throughput_mean=float(thr_arr.mean()),
        throughput_ci95=_ci95(thr_arr),
        n_trials=int(thr_arr.size),
        n_pairs=n_pairs,
        ci_flagged=thr_arr.size <= 1,
    )
