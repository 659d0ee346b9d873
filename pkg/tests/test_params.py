import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from atf_relay.params import (
    ConfigError,
    InvalidParameterError,
    SystemParams,
    build_params,
    dbm_to_watts,
    derive_link_gains,
    load_config,
    parse_power,
    path_loss_gain,
    snr_thresholds,
    watts_to_dbm,
)


def test_path_loss_examples():
    assert path_loss_gain(0.0, 3) == 1.0
    assert path_loss_gain(0.0, 2) == 1.0
    assert path_loss_gain(5, 3) == pytest.approx(1 / 126, rel=1e-15)
    assert path_loss_gain(50, 3) == pytest.approx(1 / 125001, rel=1e-15)


def test_derive_link_gains_reference_geometry():
    g = derive_link_gains(SystemParams())
    assert g.Omega_SR == pytest.approx(7.936507936507937e-3)
    assert g.Omega_SD == pytest.approx(7.99994e-6, rel=1e-5)
    assert g.Omega_RD == pytest.approx(1 / (1 + 45**3))


@pytest.mark.parametrize("d, alpha", [(-1, 3), (5, 1.5), (5, 6), (math.inf, 3)])
def test_path_loss_rejects(d, alpha):
    with pytest.raises(InvalidParameterError):
        path_loss_gain(d, alpha)


@given(st.floats(0.5, 500), st.floats(0.5, 500), st.floats(2, 5))
def test_path_loss_monotone_in_distance(d1, d2, alpha):
    lo, hi = sorted((d1, d2))
    assert path_loss_gain(lo, alpha) >= path_loss_gain(hi, alpha)


@given(st.floats(1.01, 500), st.floats(2, 5), st.floats(2, 5))
def test_path_loss_monotone_in_alpha(d, a1, a2):
    lo, hi = sorted((a1, a2))
    assert path_loss_gain(d, lo) >= path_loss_gain(d, hi)


def test_dbm_examples():
    assert dbm_to_watts(30) == 1.0
    assert dbm_to_watts(0) == pytest.approx(1e-3, rel=1e-15)
    assert dbm_to_watts(-60) == pytest.approx(1e-9, rel=1e-15)


@given(st.floats(-200, 200))
def test_dbm_roundtrip(x):
    assert watts_to_dbm(dbm_to_watts(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)
    w = dbm_to_watts(x)
    assert dbm_to_watts(watts_to_dbm(w)) == pytest.approx(w, rel=1e-12)


@pytest.mark.parametrize("R, g0, g1", [(1, 3, 1), (0, 0, 0), (2, 15, 3)])
def test_snr_thresholds(R, g0, g1):
    assert snr_thresholds(SystemParams(R=R)) == (g0, g1)


@given(st.floats(0, 8))
def test_threshold_identity(R):
    g0, g1 = snr_thresholds(SystemParams(R=R))
    assert g0 >= g1 >= 0
    assert g0 == pytest.approx(g1 * g1 + 2 * g1, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("bad", [
    {"eta": 0}, {"eta": 1.2}, {"alpha": 1.9}, {"N": 0}, {"L": 0}, {"E_T": 0},
    {"E_T": 6e-3}, {"P_S": -1}, {"d_SR": 0}, {"K": -0.1}, {"N": 2.5},
])
def test_params_invariants(bad):
    with pytest.raises(InvalidParameterError):
        SystemParams(**bad)


def test_parse_power_units():
    assert parse_power("30 dBm") == 1.0
    assert parse_power("-60dbm") == pytest.approx(1e-9)
    assert parse_power("2.5 W") == 2.5
    assert parse_power("0.1") == 0.1
    with pytest.raises(ConfigError):
        parse_power("3 mW")


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "P_S = 20 dBm   # trailing comment\n"
        "N0 = 1e-9 w\n"
        "\n"
        "N = 4\n"
        "grid = 10:20:2\n"
    )
    p, extras = load_config(path, ["L=10", "E_T=5e-4"])
    assert p.P_S == pytest.approx(0.1)
    assert p.N0 == 1e-9 and p.N == 4 and p.L == 10 and p.E_T == 5e-4
    assert extras == {"grid": "10:20:2"}


def test_config_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("P_S 30\n")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        build_params({"N": "two"})
    with pytest.raises(ConfigError):
        build_params({"L": "2.5"})
