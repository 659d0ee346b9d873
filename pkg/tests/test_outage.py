import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atf_relay.battery import BatteryGrid
from atf_relay.outage import atf_outage, direct_outage, phi_mode_i, phi_mode_ii, phi_mode_iii
from atf_relay.params import SystemParams, dbm_to_watts, derive_link_gains

from oracles import sample_sum_snr, two_exp_sum_cdf

REF = SystemParams()
G = derive_link_gains(REF)
N_MC = 10_000_000


def _within_3se(value, hits, n):
    emp = hits / n
    se = np.sqrt(max(emp * (1 - emp), 1 / n) / n)
    return abs(value - emp) < 3 * se


def test_phi_zero_rate():
    p = REF.with_(R=0)
    g = derive_link_gains(p)
    assert phi_mode_i(p, g) == 0.0 and phi_mode_ii(p, g) == 0.0 and phi_mode_iii(p, g) == 0.0
    assert atf_outage(p, g).p_out == 0.0


def test_phi_large_power_vanishes():
    p = REF.with_(P_S=1e9)
    assert phi_mode_i(p, derive_link_gains(p)) < 1e-9


def test_mode_ii_threshold_is_stricter_at_unit_rate():
    assert phi_mode_ii(REF, G) > phi_mode_i(REF, G)


def test_phi_i_ii_against_sampling():
    rng = np.random.default_rng(31)
    h = rng.exponential(G.Omega_SD, N_MC)
    snr = REF.P_S * h / REF.N0
    assert _within_3se(phi_mode_i(REF, G), np.count_nonzero(snr < REF.gamma1), N_MC)
    assert _within_3se(phi_mode_ii(REF, G), np.count_nonzero(2 * snr < REF.gamma0), N_MC)


def test_phi_iii_against_sampling():
    s = REF.P_S * G.Omega_SD / REF.N0
    r = 2 * REF.E_T * G.Omega_RD / REF.N0
    draws = sample_sum_snr(np.random.default_rng(32), N_MC, s, r, REF.N)
    assert _within_3se(phi_mode_iii(REF, G), np.count_nonzero(draws < REF.gamma0), N_MC)


def test_phi_iii_single_antenna_hand_integral():
    p = REF.with_(N=1)
    s = p.P_S * G.Omega_SD / p.N0
    r = 2 * p.E_T * G.Omega_RD / p.N0
    assert phi_mode_iii(p, G) == pytest.approx(two_exp_sum_cdf(p.gamma0, s, r), abs=1e-10)


def test_phi_iii_strong_relay_below_phi_ii():
    p = REF.with_(E_T=REF.C, d_RD=0.5)
    g = derive_link_gains(p)
    assert phi_mode_iii(p, g) < phi_mode_ii(p, g)


def test_phi_iii_monotone_in_threshold_and_antennas():
    ets = np.linspace(1e-5, REF.C, 25)
    vals = [phi_mode_iii(REF.with_(E_T=e), G) for e in ets]
    assert np.all(np.diff(vals) <= 1e-15)
    byN = [phi_mode_iii(REF.with_(N=n), G) for n in range(1, 9)]
    assert np.all(np.diff(byN) <= 1e-15)


def test_direct_equals_phi_i_and_decreases_in_power():
    ps = dbm_to_watts(np.arange(0, 50, 2.0))
    vals = []
    for w in ps:
        p = REF.with_(P_S=float(w))
        g = derive_link_gains(p)
        assert direct_outage(p, g) == phi_mode_i(p, g)
        vals.append(direct_outage(p))
    assert np.all(np.diff(vals) < 0)


def test_direct_sweep_endpoints_against_sampling():
    rng = np.random.default_rng(33)
    h = rng.exponential(G.Omega_SD, N_MC)
    for dbm in (10, 36):
        p = REF.with_(P_S=dbm_to_watts(dbm))
        hits = np.count_nonzero(p.P_S * h / p.N0 < p.gamma1)
        assert _within_3se(direct_outage(p), hits, N_MC)


def test_report_reference_config():
    rep = atf_outage(REF, G)
    d = rep.as_dict()
    assert all(0 <= v <= 1 for v in d.values())
    assert rep.p_mode_I + rep.p_mode_II + rep.p_mode_III == pytest.approx(1, abs=1e-9)
    assert rep.reassembled() == pytest.approx(rep.p_out, abs=1e-12)
    assert rep.p_direct == phi_mode_i(REF, G)
    # cooperation helps at the reference point
    assert rep.p_out < rep.p_direct


def test_no_cooperation_reduces_to_direct():
    # point mass on the empty battery: P_E = 0
    grid = BatteryGrid.from_params(REF)
    pi = np.zeros(REF.L + 1)
    pi[0] = 1
    rep = atf_outage(REF, G, pi=pi)
    assert rep.P_E == 0 and rep.p_out == rep.phi_I
    assert grid.t >= 1


def test_unreachable_full_battery_equals_direct():
    p = REF.with_(P_S=dbm_to_watts(0), E_T=REF.C)
    rep = atf_outage(p)
    assert rep.P_E < 1e-20
    assert abs(rep.p_out - direct_outage(p)) <= 1e-12


def test_high_power_decoding_limit():
    p = REF.with_(P_S=dbm_to_watts(60))
    rep = atf_outage(p)
    assert rep.p_mode_II < 1e-12
    assert rep.p_out == pytest.approx(rep.P_E * rep.phi_III + (1 - rep.P_E) * rep.phi_I, rel=1e-9, abs=1e-300)


def test_outage_nonincreasing_in_power():
    for N in (2, 6):
        vals = [atf_outage(REF.with_(P_S=dbm_to_watts(x), N=N, L=20)).p_out for x in range(10, 38, 2)]
        assert np.all(np.diff(vals) <= 1e-15)


@given(ps=st.floats(5, 40), N=st.integers(1, 6), L=st.integers(1, 30), frac=st.floats(0.01, 1), R=st.floats(0, 2))
@settings(max_examples=40, deadline=None)
def test_report_invariants(ps, N, L, frac, R):
    p = REF.with_(P_S=dbm_to_watts(ps), N=N, L=L, E_T=frac * REF.C, R=R)
    rep = atf_outage(p)
    assert all(0 <= v <= 1 for v in rep.as_dict().values())
    assert rep.p_mode_I + rep.p_mode_II + rep.p_mode_III == pytest.approx(1, abs=1e-9)
    assert rep.reassembled() == pytest.approx(rep.p_out, abs=1e-12)
