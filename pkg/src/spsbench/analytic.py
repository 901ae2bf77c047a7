"""Closed-form throughput model of the sensing-based SPS MAC.

All quantities are per selection period of 1/tau seconds: each vehicle sends
one packet per period on its reserved RBG (one subchannel in one slot). The
packet reception ratio (PRR) seen by a receiver is driven by resource
selection collisions, and in range-limited topologies additionally by hidden
vehicles; the half-duplex (HD) loss enters the throughput as a separate
factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

from ._util import as_int as _as_int
from .errors import ConfigError, DomainError, IterationError, OverloadError

__all__ = [
    "SpsConfig",
    "FcnParams",
    "PcnParams",
    "CurvePoint",
    "hd_probability",
    "num_rbgs",
    "available_rbgs",
    "p_rs_closed_form",
    "p_rs_binomial_sum",
    "prr_fcn",
    "prr_rsc",
    "prr_pcn",
    "throughput",
    "sweep",
]

@dataclass(frozen=True)
class SpsConfig:
    """Scheduler parameters and the quantities derived from them.

    p_k   resource keeping probability in [0, 1]
    n_s   number of subchannels per slot
    t_s   slot duration in milliseconds
    tau   packet generation rate in packets/second
    """

    p_k: float
    n_s: int
    t_s: float = 1.0
    tau: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.p_k <= 1.0:
            raise ConfigError(f"p_k must lie in [0, 1], got {self.p_k}")
        if self.n_s < 1 or int(self.n_s) != self.n_s:
            raise ConfigError(f"n_s must be a positive integer, got {self.n_s}")
        if self.t_s <= 0:
            raise ConfigError(f"t_s must be positive, got {self.t_s}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        # Trip the derived-quantity validation eagerly.
        _ = self.slots_per_period, self.n_rbgs, self.rc_init

    @property
    def alpha(self) -> float:
        """Counter scale tying the re-selection counter to the packet rate."""
        return 100.0 / max(20.0, 1000.0 / self.tau)

    @property
    def rc_init(self) -> int:
        """Initial re-selection counter, the mean of the standard interval."""
        rc = round(10.0 * self.alpha)
        if rc < 1:
            raise ConfigError(
                f"initial re-selection counter 10*alpha={10 * self.alpha:.3g} "
                "does not round to a positive integer"
            )
        return int(rc)

    @property
    def slots_per_period(self) -> int:
        """Slots in one selection period of 1/tau seconds."""
        return _as_int(1000.0 / (self.tau * self.t_s), "slots per period (1000/(tau*t_s))")

    @property
    def n_rbgs(self) -> int:
        """RBGs selectable within one selection window."""
        return _as_int(
            1000.0 * self.n_s / (self.tau * self.t_s), "RBG count (1000*n_s/(tau*t_s))"
        )


@dataclass(frozen=True)
class FcnParams:
    """Fully connected network: every vehicle senses n_sen others."""

    n_sen: int

    def __post_init__(self):
        if self.n_sen < 0:
            raise ConfigError(f"n_sen must be non-negative, got {self.n_sen}")


@dataclass(frozen=True)
class PcnParams:
    """Partially connected linear road: density rho (veh/km), sensing range
    r_sen_km (km). Every interior vehicle senses 2*r_sen*rho - 1 others."""

    rho: float
    r_sen_km: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if self.r_sen_km <= 0:
            raise ConfigError(f"r_sen_km must be positive, got {self.r_sen_km}")
        if 2.0 * self.r_sen_km * self.rho < 1.0:
            raise ConfigError(
                "sensing window holds less than one vehicle "
                f"(2*r_sen*rho = {2 * self.r_sen_km * self.rho:.3g} < 1)"
            )

    @property
    def n_sen(self) -> float:
        return 2.0 * self.r_sen_km * self.rho - 1.0

    @property
    def r_sen_m(self) -> float:
        return self.r_sen_km * 1000.0


@dataclass(frozen=True)
class CurvePoint:
    """One point of an analytic sweep."""

    abscissa: float
    prr: float
    throughput: float


def hd_probability(cfg: SpsConfig) -> float:
    """Probability that a reception fails because the receiver is itself
    transmitting in the same slot (with 1 ms subframes)."""
    return cfg.tau / 1000.0


def num_rbgs(cfg: SpsConfig) -> int:
    """RBGs available to choose from in one selection window."""
    return cfg.n_rbgs


def available_rbgs(n_rbgs: float, n_sen: float, prr: float) -> float:
    """Expected number of idle RBGs in the selection window.

    Each collision ties two vehicles to one RBG, so n_sen neighbours occupy
    (1+prr)*n_sen/2 distinct RBGs in expectation. Kept real-valued.
    """
    if not 0.0 <= prr <= 1.0:
        raise DomainError(f"prr must lie in [0, 1], got {prr}")
    n_a = n_rbgs - (1.0 + prr) * n_sen / 2.0
    if n_a <= 0.0:
        raise OverloadError(
            f"no available RBGs: N_r={n_rbgs}, N_sen={n_sen}, prr={prr} "
            f"gives N_a={n_a:.3g}"
        )
    return n_a


def p_rs_closed_form(cfg: SpsConfig, n_sen: float, n_avail: float) -> float:
    """Collision probability for a reselecting vehicle, closed form."""
    if n_avail <= 0:
        raise DomainError(f"n_avail must be positive, got {n_avail}")
    if n_sen < 0:
        raise DomainError(f"n_sen must be non-negative, got {n_sen}")
    per_vehicle = (1.0 - cfg.p_k) / (10.0 * cfg.alpha * n_avail)
    if per_vehicle > 1.0:
        raise DomainError(
            f"per-vehicle same-RBG probability {per_vehicle:.3g} exceeds 1; "
            "the model does not cover this regime"
        )
    return 1.0 - (1.0 - per_vehicle) ** n_sen


def p_rs_binomial_sum(cfg: SpsConfig, n_sen: int, n_avail: float) -> float:
    """Collision probability for a reselecting vehicle, by explicit summation
    over how many of the n_sen sensed vehicles reselect in the same window.

    Exact-summation counterpart of :func:`p_rs_closed_form`; terms are
    evaluated in log space so large n_sen cannot overflow.
    """
    if n_avail < 1.0:
        raise DomainError(f"n_avail must be >= 1 for the summation, got {n_avail}")
    if n_sen < 0 or int(n_sen) != n_sen:
        raise DomainError(f"n_sen must be a non-negative integer, got {n_sen}")
    n_sen = int(n_sen)
    q = (1.0 - cfg.p_k) / (10.0 * cfg.alpha)
    if q > 1.0:
        raise DomainError(
            f"reselection probability (1-p_k)/(10*alpha) = {q:.3g} exceeds 1"
        )
    if n_sen == 0 or q == 0.0:
        return 0.0
    log_miss = math.log1p(-1.0 / n_avail) if n_avail > 1.0 else None
    total = 0.0
    ln_n_fact = math.lgamma(n_sen + 1)
    for n in range(1, n_sen + 1):
        if q == 1.0:
            if n != n_sen:
                continue
            pmf = 1.0
        else:
            ln_pmf = (
                ln_n_fact
                - math.lgamma(n + 1)
                - math.lgamma(n_sen - n + 1)
                + n * math.log(q)
                + (n_sen - n) * math.log1p(-q)
            )
            pmf = math.exp(ln_pmf)
        collide = 1.0 if log_miss is None else -math.expm1(n * log_miss)
        total += pmf * collide
    return total


def _prr_fcn_rhs(cfg: SpsConfig, n_sen: float, prr: float) -> float:
    n_a = available_rbgs(cfg.n_rbgs, n_sen, prr)
    per_vehicle = (1.0 - cfg.p_k) / (10.0 * cfg.alpha * n_a)
    if per_vehicle > 1.0:
        raise OverloadError(
            f"available RBGs N_a={n_a:.3g} too scarce: per-vehicle same-RBG "
            f"probability {per_vehicle:.3g} exceeds 1"
        )
    return (cfg.p_k + (1.0 - per_vehicle) ** n_sen) / (1.0 + cfg.p_k)


@lru_cache(maxsize=4096)
def _prr_fcn_cached(cfg: SpsConfig, n_sen: float, tol: float, max_iter: int) -> float:
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    prr = 1.0
    for _ in range(max_iter):
        rhs = _prr_fcn_rhs(cfg, n_sen, prr)
        if abs(rhs - prr) <= tol:
            return prr
        # Damping keeps the iterate well inside [0, 1] near overload.
        prr = 0.5 * (prr + rhs)
    raise IterationError(
        f"PRR fixed point did not converge within {max_iter} iterations",
        residual=abs(rhs - prr),
    )


def prr_fcn(
    cfg: SpsConfig, n_sen: float, *, tol: float = 1e-10, max_iter: int = 10_000
) -> float:
    """Steady-state PRR in a network where all n_sen+1 vehicles sense each
    other, solved as the fixed point of the mutually dependent PRR and
    available-RBG expressions."""
    if n_sen < 0:
        raise DomainError(f"n_sen must be non-negative, got {n_sen}")
    return _prr_fcn_cached(cfg, float(n_sen), tol, max_iter)


def prr_rsc(d_m: float, r_sen_m: float, prr_fully_connected: float) -> float:
    """PRR due to resource selection collisions at transmitter-receiver
    distance d_m, interpolated from the fully connected value: only the
    vehicles common to both sensing ranges contribute collisions."""
    if not 0.0 <= d_m <= r_sen_m:
        raise DomainError(
            f"distance {d_m} m outside the modelled range [0, {r_sen_m}] m"
        )
    return 1.0 - ((2.0 * r_sen_m - d_m) / (2.0 * r_sen_m)) * (1.0 - prr_fully_connected)


def prr_pcn(cfg: SpsConfig, pcn: PcnParams, d_m: float) -> float:
    """PRR on a linear road at distance d_m, combining selection collisions
    with hidden-vehicle collisions. The hidden-vehicle count d*rho is kept
    real-valued."""
    base = prr_fcn(cfg, pcn.n_sen)
    rsc = prr_rsc(d_m, pcn.r_sen_m, base)
    visible_share = cfg.n_rbgs - pcn.n_sen / 2.0
    if visible_share <= 1.0:
        raise OverloadError(
            f"hidden vehicles have no RBGs left to pick from: "
            f"N_r - N_sen/2 = {visible_share:.3g} <= 1"
        )
    n_hidden = (d_m / 1000.0) * pcn.rho
    return rsc * (1.0 - 1.0 / visible_share) ** n_hidden


def throughput(cfg: SpsConfig, prr: float) -> float:
    """Average per-vehicle throughput in packets/second."""
    if not 0.0 <= prr <= 1.0:
        raise DomainError(f"prr must lie in [0, 1], got {prr}")
    return cfg.tau * prr * (1.0 - cfg.tau / 1000.0)


def sweep(
    cfg: SpsConfig,
    kind: str,
    grid: Iterable[float],
    *,
    n_sen: float | None = None,
    pcn: PcnParams | None = None,
) -> list[CurvePoint]:
    """Evaluate an analytic curve over a parameter grid.

    kind selects the abscissa: "n_sen", "p_k" or "n_s" (fully connected,
    "p_k"/"n_s" additionally need n_sen), or "d" (road distance in meters,
    needs pcn). Model errors are re-raised tagged with the offending grid
    value.
    """
    points: list[CurvePoint] = []
    for value in grid:
        try:
            if kind == "n_sen":
                prr = prr_fcn(cfg, value)
            elif kind == "p_k":
                if n_sen is None:
                    raise ConfigError("sweep over p_k needs n_sen")
                prr = prr_fcn(replace(cfg, p_k=value), n_sen)
            elif kind == "n_s":
                if n_sen is None:
                    raise ConfigError("sweep over n_s needs n_sen")
                prr = prr_fcn(replace(cfg, n_s=int(value)), n_sen)
            elif kind == "d":
                if pcn is None:
                    raise ConfigError("sweep over d needs pcn")
                prr = prr_pcn(cfg, pcn, value)
            else:
                raise ConfigError(f"unknown sweep kind {kind!r}")
        except (OverloadError, DomainError, IterationError) as e:
            raise type(e)(f"sweep {kind}={value!r}: {e}") from e
        # tau is fixed across every sweep kind, so the template config
        # prices the throughput correctly at every point.
        points.append(CurvePoint(float(value), prr, throughput(cfg, prr)))
    return points
