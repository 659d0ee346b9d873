"""Accumulate-then-forward relaying: battery Markov chain outage analysis and simulation."""

from .battery import (
    BatteryGrid,
    SingularChainError,
    build_transition_matrix,
    cooperation_probability,
    discretize_harvest,
    stationary_distribution,
)
from .fading import (
    ChannelDraw,
    RicianSumSpec,
    cdf_h_rd_max,
    cdf_h_sd,
    cdf_h_sr,
    marcum_q,
    sample_channels,
    sum_snr_cdf,
)
from .outage import OutageReport, atf_outage, direct_outage, phi_mode_i, phi_mode_ii, phi_mode_iii
from .params import (
    InvalidParameterError,
    LinkGains,
    SystemParams,
    dbm_to_watts,
    derive_link_gains,
    snr_thresholds,
    watts_to_dbm,
)
from .simulate import SimConfig, SimResult, run, step

__version__ = "0.1.0"
