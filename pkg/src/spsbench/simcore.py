"""Slot-accurate Monte Carlo simulator of the simplified SPS MAC.

Time advances in selection periods of 1/tau seconds (slots_per_period slots).
Every vehicle transmits exactly one packet per period on its reserved RBG.
Receptions fail on half-duplex conflicts (receiver transmitting in the same
slot) or MAC collisions (another vehicle audible to the receiver using the
same RBG cell, which covers hidden terminals on the road topology).

Vehicles on the road sit on a lattice with pitch 1/rho. A receiver at
position x hears transmitters in the half-open window (x - R_sen, x + R_sen];
on the lattice this makes the interior neighbour count exactly
2*R_sen*rho - 1 and the hidden-vehicle count at distance d exactly d*rho,
matching the analytical model's counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .analytic import SpsConfig
from .errors import ConfigError
from ._util import as_int

__all__ = [
    "FullyConnected",
    "PartiallyConnected",
    "Scenario",
    "Population",
    "VehicleState",
    "TrialResult",
    "PeriodReceptions",
    "build_scenario",
    "run_period",
    "detect_receptions",
    "run_trial",
    "occupancy_grid",
]


@dataclass(frozen=True)
class FullyConnected:
    """All n_vehicles sense each other; every vehicle has n_vehicles - 1
    neighbours."""

    n_vehicles: int

    def __post_init__(self):
        if self.n_vehicles < 2:
            raise ConfigError(f"need at least 2 vehicles, got {self.n_vehicles}")


@dataclass(frozen=True)
class PartiallyConnected:
    """Vehicles evenly spaced at 1/rho along a straight road of road_km
    kilometres, sensing range r_sen_km."""

    road_km: float
    rho: float
    r_sen_km: float

    def __post_init__(self):
        if self.rho <= 0 or self.r_sen_km <= 0 or self.road_km <= 0:
            raise ConfigError("road_km, rho and r_sen_km must be positive")
        if self.road_km < 4.0 * self.r_sen_km:
            raise ConfigError(
                f"road of {self.road_km} km cannot hold an edge-free vehicle "
                f"(needs at least 4*r_sen = {4 * self.r_sen_km} km)"
            )
        _ = self.n_vehicles

    @property
    def n_vehicles(self) -> int:
        n = as_int(self.rho * self.road_km, "vehicle count rho*road_km")
        if n < 2:
            raise ConfigError(f"need at least 2 vehicles, got {n}")
        return n

    @property
    def spacing_m(self) -> float:
        return 1000.0 / self.rho


Scenario = Union[FullyConnected, PartiallyConnected]


@dataclass(frozen=True)
class VehicleState:
    """Introspection snapshot of one vehicle."""

    id: int
    position_m: float
    reserved_rbg: tuple[int, int]  # (slot, subchannel)
    rc: int
    sensing_record: frozenset[tuple[int, int]]  # cells heard busy last period


@dataclass(frozen=True)
class PeriodReceptions:
    """Per-pair outcome of one period, aligned with Population pair arrays."""

    success: np.ndarray  # bool, packet decoded by rx
    hd_blocked: np.ndarray  # bool, rx was transmitting in tx's slot


class Population:
    """Mutable simulator state plus the static pair topology.

    Pair arrays list every ordered (tx, rx) combination where rx can hear tx.
    For a given tx the rx entries are contiguous and sorted, which the
    per-period collision marking relies on.
    """

    def __init__(self, scenario: Scenario, cfg: SpsConfig, seed: int):
        self.scenario = scenario
        self.cfg = cfg
        self.seed = seed
        n_rbgs = cfg.n_rbgs

        if isinstance(scenario, FullyConnected):
            n = scenario.n_vehicles
            self.positions_m = np.zeros(n)
            # everyone hears everyone
            self.delta_lo, self.delta_hi = -(n - 1), n - 1
        else:
            n = scenario.n_vehicles
            self.positions_m = np.arange(n, dtype=float) * scenario.spacing_m
            steps = scenario.r_sen_km * scenario.rho  # R_sen / spacing
            hi = int(np.floor(steps + 1e-9))
            # half-open (-R, R]: the index exactly at -R is out of range
            lo = -hi if abs(steps - hi) > 1e-9 else -(hi - 1)
            if hi < 1:
                raise ConfigError("sensing range shorter than vehicle spacing")
            self.delta_lo, self.delta_hi = lo, hi

        self.n = n
        rng = np.random.default_rng([seed, 0])
        self.rbg = rng.integers(0, n_rbgs, size=n, dtype=np.int32)
        self.rc = rng.integers(1, cfg.rc_init + 1, size=n, dtype=np.int32)
        self.last_tx: np.ndarray | None = None
        self.starvation_events = 0
        self.reselections = 0

        self.pair_tx, self.pair_rx, self.pair_start = self._build_pairs()
        self.pair_dist_m = np.abs(
            self.positions_m[self.pair_tx] - self.positions_m[self.pair_rx]
        )

    def _build_pairs(self):
        n = self.n
        tx_chunks, rx_chunks = [], []
        start = np.zeros(n + 1, dtype=np.int64)
        for u in range(n):
            # receivers that hear u: u - v in [delta_lo, delta_hi]
            lo = max(0, u - self.delta_hi)
            hi = min(n - 1, u - self.delta_lo)
            rx = np.arange(lo, hi + 1, dtype=np.int32)
            rx = rx[rx != u]
            rx_chunks.append(rx)
            tx_chunks.append(np.full(rx.size, u, dtype=np.int32))
            start[u + 1] = start[u] + rx.size
        return np.concatenate(tx_chunks), np.concatenate(rx_chunks), start

    # -- introspection -----------------------------------------------------

    def hearers(self, tx: int) -> np.ndarray:
        """Receiver indices that hear vehicle tx."""
        s, e = self.pair_start[tx], self.pair_start[tx + 1]
        return self.pair_rx[s:e]

    def heard_by(self, rx: int) -> np.ndarray:
        """Transmitter indices audible to vehicle rx."""
        lo = max(0, rx + self.delta_lo)
        hi = min(self.n - 1, rx + self.delta_hi)
        out = np.arange(lo, hi + 1, dtype=np.int64)
        return out[out != rx]

    def vehicle_state(self, i: int, *, deaf_sensing: bool = True) -> VehicleState:
        n_s = self.cfg.n_s
        cell = int(self.rbg[i])
        record: frozenset[tuple[int, int]] = frozenset()
        if self.last_tx is not None:
            heard = self.last_tx[self.heard_by(i)]
            if deaf_sensing:
                own_slot = int(self.last_tx[i]) // n_s
                heard = heard[heard // n_s != own_slot]
            record = frozenset((int(c) // n_s, int(c) % n_s) for c in heard)
        return VehicleState(
            id=i,
            position_m=float(self.positions_m[i]),
            reserved_rbg=(cell // n_s, cell % n_s),
            rc=int(self.rc[i]),
            sensing_record=record,
        )


def build_scenario(scenario: Scenario, cfg: SpsConfig, seed: int) -> Population:
    """Place vehicles and draw their initial reservations.

    Every vehicle receives an independent uniform RBG and a uniform residual
    counter in {1, ..., rc_init}, desynchronising the reselection epochs.
    """
    return Population(scenario, cfg, seed)


def occupancy_grid(transmissions: np.ndarray, cfg: SpsConfig) -> dict[tuple[int, int], list[int]]:
    """Per-period occupancy map: (slot, subchannel) -> transmitting ids."""
    grid: dict[tuple[int, int], list[int]] = {}
    n_s = cfg.n_s
    for vid, cell in enumerate(transmissions):
        grid.setdefault((int(cell) // n_s, int(cell) % n_s), []).append(vid)
    return grid


def _reselect(pop: Population, snapshot: np.ndarray, v: int, rng, deaf_sensing: bool) -> int:
    """Pick a new cell for vehicle v from the cells it heard idle this period."""
    cfg = pop.cfg
    lo = max(0, v + pop.delta_lo)
    hi = min(pop.n - 1, v + pop.delta_hi)
    heard = snapshot[lo : hi + 1]
    if deaf_sensing:
        own_slot = snapshot[v] // cfg.n_s
        heard = heard[heard // cfg.n_s != own_slot]
    else:
        mask = np.ones(heard.size, dtype=bool)
        mask[v - lo] = False  # own transmission is not a foreign reservation
        heard = heard[mask]
    avail = np.ones(cfg.n_rbgs, dtype=bool)
    avail[heard] = False
    idle = np.flatnonzero(avail)
    if idle.size == 0:
        pop.starvation_events += 1
        return int(rng.integers(cfg.n_rbgs))
    return int(idle[rng.integers(idle.size)])


def run_period(
    pop: Population, rng: np.random.Generator, *, deaf_sensing: bool = True
) -> np.ndarray:
    """Advance one selection period; returns this period's transmissions.

    Sequence: every vehicle transmits on its reserved cell; counters
    decrement; vehicles whose counter expired keep the cell with probability
    p_k or reselect uniformly from the cells their own sensing of the period
    just elapsed marked idle; either way the counter resets. With
    deaf_sensing a vehicle senses nothing in the slot it transmitted in.
    """
    cfg = pop.cfg
    snapshot = pop.rbg.copy()
    pop.rc -= 1
    expired = np.flatnonzero(pop.rc == 0)
    for v in expired:
        if rng.random() < cfg.p_k:
            continue  # keep the reserved cell for another round
        pop.reselections += 1
        pop.rbg[v] = _reselect(pop, snapshot, int(v), rng, deaf_sensing)
    pop.rc[expired] = cfg.rc_init
    pop.last_tx = snapshot
    return snapshot


def detect_receptions(pop: Population, transmissions: np.ndarray) -> PeriodReceptions:
    """Decide every in-range ordered pair's reception for one period.

    rx decodes tx's packet iff rx was not transmitting in tx's slot and no
    third vehicle audible to rx used tx's exact cell.
    """
    n_s = pop.cfg.n_s
    slots = transmissions // n_s
    hd = slots[pop.pair_tx] == slots[pop.pair_rx]

    collided = np.zeros(pop.pair_tx.size, dtype=bool)
    order = np.argsort(transmissions, kind="stable")
    sorted_cells = transmissions[order]
    run_starts = np.flatnonzero(
        np.concatenate(([True], sorted_cells[1:] != sorted_cells[:-1]))
    )
    run_ends = np.concatenate((run_starts[1:], [sorted_cells.size]))
    contested = np.flatnonzero(run_ends - run_starts >= 2)
    # two cell users only interact when their audiences overlap, i.e. their
    # lattice indices are within `reach`; far apart they reuse the cell freely
    reach = pop.delta_hi - pop.delta_lo
    pair_rx, pair_start = pop.pair_rx, pop.pair_start
    d_lo, d_hi = pop.delta_lo, pop.delta_hi
    for k in contested:
        users = order[run_starts[k] : run_ends[k]].tolist()  # ascending
        m = len(users)
        near_lo = 0
        for i, u in enumerate(users):
            while users[near_lo] < u - reach:
                near_lo += 1
            # merged rx intervals [w - d_hi, w - d_lo] over nearby w != u
            intervals: list[list[int]] = []
            j = near_lo
            while j < m and users[j] <= u + reach:
                w = users[j]
                j += 1
                if w == u:
                    continue
                a, b = w - d_hi, w - d_lo
                if intervals and a <= intervals[-1][1] + 1:
                    if b > intervals[-1][1]:
                        intervals[-1][1] = b
                else:
                    intervals.append([a, b])
            if not intervals:
                continue
            s0, e0 = pair_start[u], pair_start[u + 1]
            rx_slice = pair_rx[s0:e0]
            for a, b in intervals:
                ii = rx_slice.searchsorted(a, side="left")
                jj = rx_slice.searchsorted(b, side="right")
                if ii < jj:
                    collided[s0 + ii : s0 + jj] = True
    return PeriodReceptions(success=~hd & ~collided, hd_blocked=hd)


@dataclass
class TrialResult:
    """Per-pair packet accounting of one independent trial."""

    scenario: Scenario
    cfg: SpsConfig
    seed: int
    counted_periods: int
    counted_duration_s: float
    tx_ids: np.ndarray
    rx_ids: np.ndarray
    pair_dist_m: np.ndarray
    packets_received: np.ndarray
    packets_hd_blocked: np.ndarray
    vehicle_positions_m: np.ndarray
    starvation_events: int = 0
    reselections: int = 0
    flagged: bool = False

    @property
    def packets_sent(self) -> np.ndarray:
        """Each pair's tx sent one packet in every counted period."""
        return np.full(self.tx_ids.size, self.counted_periods, dtype=np.int64)

    def equals(self, other: "TrialResult") -> bool:
        return (
            self.scenario == other.scenario
            and self.cfg == other.cfg
            and self.seed == other.seed
            and self.counted_periods == other.counted_periods
            and np.array_equal(self.tx_ids, other.tx_ids)
            and np.array_equal(self.rx_ids, other.rx_ids)
            and np.array_equal(self.pair_dist_m, other.pair_dist_m)
            and np.array_equal(self.packets_received, other.packets_received)
            and np.array_equal(self.packets_hd_blocked, other.packets_hd_blocked)
            and self.starvation_events == other.starvation_events
            and self.reselections == other.reselections
        )


def run_trial(
    scenario: Scenario,
    cfg: SpsConfig,
    seed: int,
    duration_s: float,
    warmup_s: float = 10.0,
    *,
    deaf_sensing: bool = True,
) -> TrialResult:
    """Simulate floor(duration_s*tau) periods, discarding the warmup.

    Fully deterministic for a given (scenario, cfg, seed): the single RNG
    stream drives initial placement and every reselection in vehicle order.
    """
    if warmup_s < 0 or duration_s < warmup_s:
        raise ConfigError("need duration_s >= warmup_s >= 0")
    total = int(np.floor(duration_s * cfg.tau))
    warmup = int(np.floor(warmup_s * cfg.tau))

    pop = build_scenario(scenario, cfg, seed)
    rng = np.random.default_rng([seed, 1])  # placement drew from stream [seed, 0]
    received = np.zeros(pop.pair_tx.size, dtype=np.int64)
    hd_blocked = np.zeros(pop.pair_tx.size, dtype=np.int64)

    for period in range(total):
        snapshot = run_period(pop, rng, deaf_sensing=deaf_sensing)
        if period < warmup:
            continue
        outcome = detect_receptions(pop, snapshot)
        received += outcome.success
        hd_blocked += outcome.hd_blocked

    counted = total - warmup
    flagged = (
        pop.reselections > 0
        and pop.starvation_events > 0.5 * pop.reselections
    )
    return TrialResult(
        scenario=scenario,
        cfg=cfg,
        seed=seed,
        counted_periods=counted,
        counted_duration_s=counted / cfg.tau,
        tx_ids=pop.pair_tx,
        rx_ids=pop.pair_rx,
        pair_dist_m=pop.pair_dist_m,
        packets_received=received,
        packets_hd_blocked=hd_blocked,
        vehicle_positions_m=pop.positions_m,
        starvation_events=pop.starvation_events,
        reselections=pop.reselections,
        flagged=flagged,
    )
