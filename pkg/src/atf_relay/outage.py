"""Closed-form outage probability of ATF and of direct transmission."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .battery import BatteryGrid, HarvestTable, build_transition_matrix, cooperation_probability, stationary_distribution
from .fading import cdf_h_sd, clamp_probability, sum_snr_cdf
from .params import LinkGains, SystemParams, derive_link_gains


@dataclass(frozen=True)
class OutageReport:
    p_out: float
    p_mode_I: float
    p_mode_II: float
    p_mode_III: float
    phi_I: float
    phi_II: float
    phi_III: float
    p_direct: float
    P_E: float

    def reassembled(self) -> float:
        return self.p_mode_I * self.phi_I + self.p_mode_II * self.phi_II + self.p_mode_III * self.phi_III

    def as_dict(self) -> dict:
        return asdict(self)


def phi_mode_i(p: SystemParams, g: LinkGains) -> float:
    """Outage when the source transmits alone for the whole block."""
    return float(cdf_h_sd(g.Omega_SD, p.gamma1 * p.N0 / p.P_S))


def phi_mode_ii(p: SystemParams, g: LinkGains) -> float:
    """Outage with the source sending twice and the destination combining both copies."""
    return float(cdf_h_sd(g.Omega_SD, p.gamma0 * p.N0 / (2.0 * p.P_S)))


def phi_mode_iii(p: SystemParams, g: LinkGains) -> float:
    """Outage of the direct plus relayed copy, relay transmitting at 2 E_T."""
    gbar_sd = p.P_S * g.Omega_SD / p.N0
    gbar_rd = 2.0 * p.E_T * g.Omega_RD / p.N0
    return sum_snr_cdf(p.gamma0, gbar_sd, gbar_rd, p.N)


def direct_outage(p: SystemParams, g: LinkGains | None = None) -> float:
    g = g or derive_link_gains(p)
    return phi_mode_i(p, g)


def atf_outage(p: SystemParams, g: LinkGains | None = None, M: np.ndarray | None = None,
               pi: np.ndarray | None = None, table: HarvestTable | None = None) -> OutageReport:
    """Outage of the ATF protocol by total probability over the three modes.

    The battery chain (``M``, ``pi``) is built when not supplied. The
    current block's S-R gain is independent of the battery state, so the
    Mode II/III split factors as ``P_E * Pr{gamma_SR < gamma0}``.
    """
    g = g or derive_link_gains(p)
    grid = BatteryGrid.from_params(p)
    table = table or HarvestTable.build(p, g)
    if pi is None:
        if M is None:
            M = build_transition_matrix(p, g, grid, table)
        pi = stationary_distribution(M)
    P_E = cooperation_probability(pi, grid)
    fail = table.F_dec  # Pr{gamma_SR < gamma0}

    phis = phi_mode_i(p, g), phi_mode_ii(p, g), phi_mode_iii(p, g)
    modes = 1.0 - P_E, P_E * fail, P_E * table.S_dec
    p_out = clamp_probability(sum(m * f for m, f in zip(modes, phis)))
    return OutageReport(
        p_out=p_out,
        p_mode_I=modes[0], p_mode_II=modes[1], p_mode_III=modes[2],
        phi_I=phis[0], phi_II=phis[1], phi_III=phis[2],
        p_direct=phis[0], P_E=P_E,
    )
