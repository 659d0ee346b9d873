"""System configuration, unit conversion and derived constants.

Everything downstream works in SI units with a normalized block length
(T = 1), so an energy in joules and a power in watts over one block are the
same number. dBm only appears when reading configuration.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping


class InvalidParameterError(ValueError):
    """Raised when a parameter is outside its physical or protocol range."""


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    if w <= 0:
        raise InvalidParameterError(f"power must be positive, got {w!r}")
    return 10.0 * math.log10(w) + 30.0


def path_loss_gain(d: float, alpha: float) -> float:
    """Mean channel power gain ``1 / (1 + d**alpha)`` for distance ``d``."""
    if not (d >= 0 and math.isfinite(d)):
        raise InvalidParameterError(f"distance must be finite and >= 0, got {d!r}")
    if not 2.0 <= alpha <= 5.0:
        raise InvalidParameterError(f"path-loss exponent must lie in [2, 5], got {alpha!r}")
    return 1.0 / (1.0 + d**alpha)


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol constants of the three-node network.

    Defaults are the evaluation setup of the ATF protocol: 50/5/45 m
    geometry, alpha = 3, K = 10, N0 = -60 dBm, eta = 0.5, R = 1, with the
    battery used by the power-sweep preset (C = 5 mJ, E_T = 0.1 mJ, L = 100).
    """

    P_S: float = 1.0  # W (30 dBm)
    N0: float = 1e-9  # W (-60 dBm)
    eta: float = 0.5
    R: float = 1.0
    N: int = 2
    K: float = 10.0
    d_SD: float = 50.0
    d_SR: float = 5.0
    d_RD: float = 45.0
    alpha: float = 3.0
    C: float = 5e-3
    L: int = 100
    E_T: float = 1e-4

    def __post_init__(self):
        checks = [
            (0 < self.eta <= 1, "eta must lie in (0, 1]"),
            (2 <= self.alpha <= 5, "alpha must lie in [2, 5]"),
            (self.N >= 1 and int(self.N) == self.N, "N must be a positive integer"),
            (self.L >= 1 and int(self.L) == self.L, "L must be a positive integer"),
            (self.K >= 0, "K must be >= 0"),
            (self.R >= 0, "R must be >= 0"),
            (self.P_S > 0 and self.N0 > 0, "powers must be positive"),
            (min(self.d_SD, self.d_SR, self.d_RD) > 0, "distances must be positive"),
            (self.C > 0, "battery capacity must be positive"),
            (0 < self.E_T <= self.C * (1 + 1e-12), "need 0 < E_T <= C"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidParameterError(msg)
        for name in ("P_S", "N0", "eta", "R", "K", "d_SD", "d_SR", "d_RD", "alpha", "C", "E_T"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", int(self.L))

    @property
    def gamma0(self) -> float:
        return snr_thresholds(self)[0]

    @property
    def gamma1(self) -> float:
        return snr_thresholds(self)[1]

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class LinkGains:
    Omega_SD: float
    Omega_SR: float
    Omega_RD: float


def derive_link_gains(p: SystemParams) -> LinkGains:
    return LinkGains(
        Omega_SD=path_loss_gain(p.d_SD, p.alpha),
        Omega_SR=path_loss_gain(p.d_SR, p.alpha),
        Omega_RD=path_loss_gain(p.d_RD, p.alpha),
    )


def snr_thresholds(p: SystemParams) -> tuple[float, float]:
    """Return ``(gamma0, gamma1)``.

    gamma0 = 2**(2R) - 1 is the decoding threshold for a half-block
    transmission; gamma1 = 2**R - 1 applies to a full block.
    """
    if p.R < 0:
        raise InvalidParameterError("rate must be >= 0")
    return 2.0 ** (2.0 * p.R) - 1.0, 2.0**p.R - 1.0


# ---------------------------------------------------------------------------
# configuration files

PARAM_KEYS = tuple(f.name for f in fields(SystemParams))
_POWER_KEYS = {"P_S", "N0"}
_INT_KEYS = {"N", "L"}
_POWER_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(dbm|w)?\s*$", re.IGNORECASE)


class ConfigError(InvalidParameterError):
    """Raised for malformed configuration files or overrides."""


def parse_power(text: str) -> float:
    """Parse ``"30 dBm"``, ``"1e-9 W"`` or a bare number (watts)."""
    m = _POWER_RE.match(str(text))
    if not m:
        raise ConfigError(f"cannot parse power {text!r}")
    value = float(m.group(1))
    unit = (m.group(2) or "w").lower()
    return dbm_to_watts(value) if unit == "dbm" else value


def parse_value(key: str, text: str):
    try:
        if key in _POWER_KEYS:
            return parse_power(text)
        if key in _INT_KEYS:
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines, ignoring blanks and ``#`` comments."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_params(raw: Mapping[str, str], base: SystemParams | None = None) -> tuple[SystemParams, dict[str, str]]:
    """Split raw key/value strings into SystemParams and leftover extras.

    Unknown keys are returned untouched so experiment presets can carry
    sweep grids alongside the physical parameters.
    """
    base = base or SystemParams()
    changes, extras = {}, {}
    for key, value in raw.items():
        if key in PARAM_KEYS:
            changes[key] = parse_value(key, value)
        else:
            extras[key] = value
    return replace(base, **changes), extras


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> tuple[SystemParams, dict[str, str]]:
    raw = read_config_file(path) if path else {}
    raw.update(parse_overrides(overrides))
    return build_params(raw)
