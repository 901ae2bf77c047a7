"""Throughput workbench for the sensing-based SPS MAC of NR-V2X sidelink
mode 2: a closed-form model, a slot-level Monte Carlo simulator, and a
harness that cross-validates the two.

Root measurement convention shared by model and simulator:
* PRR counts MAC collisions only; receiver half-duplex loss is measured and
  priced separately (throughput = tau * PRR * (1 - P_HD)).
"""

from . import analytic, harness, metrics, simcore
from .analytic import (
    CurvePoint,
    FcnParams,
    PcnParams,
    SpsConfig,
    available_rbgs,
    hd_probability,
    num_rbgs,
    p_rs_binomial_sum,
    p_rs_closed_form,
    prr_fcn,
    prr_pcn,
    prr_rsc,
    sweep,
    throughput,
)
from .errors import ConfigError, DomainError, IterationError, ModelError, OverloadError

__version__ = "0.1.0"
