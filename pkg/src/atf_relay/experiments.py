"""Parameter sweeps, exhaustive E_T search and the direct-transmission comparison.

Results are long-format tables (one row per grid point, series and method)
so any plotting tool can rebuild the outage-vs-P_S, outage-vs-E_T and
ATF-vs-direct curves.
"""

from __future__ import annotations

import csv
import itertools
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .battery import HarvestTable
from .outage import atf_outage, direct_outage
from .params import ConfigError, SystemParams, dbm_to_watts, derive_link_gains, parse_power, parse_value
from .simulate import SimConfig, run

VARIABLES = ("P_S", "E_T", "N", "L")
OUTPUTS = ("analytic", "sim-continuous", "sim-discrete", "direct")
SWEEP_FIELDS = ("variable", "value", "series", "method", "outage", "standard_error", "wall_time", "error")
COMPARE_FIELDS = ("P_S_dbm", "series", "direct", "atf_optimal", "E_T_opt", "ratio")


def parse_grid(text: str) -> list[float]:
    """``"10:36:2"`` (inclusive) or ``"2,4,6"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"range grid must be start:stop:step, got {text!r}")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def parse_series(text: str) -> list[dict[str, str]]:
    """``"N=2,4,6; L=10,100"`` -> cartesian product of overrides."""
    groups = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"series entry must be key=v1,v2,..., got {chunk!r}")
        key, values = chunk.split("=", 1)
        groups.append([(key.strip(), v.strip()) for v in values.split(",") if v.strip()])
    return [dict(combo) for combo in itertools.product(*groups)] if groups else [{}]


def _series_label(series: dict[str, str]) -> str:
    return ";".join(f"{k}={v}" for k, v in series.items())


def apply_override(p: SystemParams, key: str, value) -> SystemParams:
    """Set one field from a sweep axis or series value; bare P_S numbers are dBm."""
    text = str(value).strip()
    if key == "P_S":
        if not text.lower().endswith(("dbm", "w")):
            text += " dBm"
        return p.with_(P_S=parse_power(text))
    return p.with_(**{key: parse_value(key, text)})


@dataclass(frozen=True)
class SweepSpec:
    """One swept variable, optional series overrides, requested outputs.

    ``P_S`` grid values are dBm; series values for ``P_S`` without a unit
    are dBm as well.
    """

    variable: str
    grid: Sequence[float]
    base: SystemParams = field(default_factory=SystemParams)
    outputs: Sequence[str] = ("analytic", "direct")
    series: Sequence[dict] = ({},)
    blocks: int = 1_000_000
    warmup: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError(f"sweep variable must be one of {VARIABLES}")
        if len(self.grid) == 0:
            raise ConfigError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}; choose from {OUTPUTS}")

    def points(self):
        for si, series in enumerate(self.series):
            for vi, value in enumerate(self.grid):
                for method in self.outputs:
                    yield si, vi, series, value, method


def _evaluate(spec: SweepSpec, si: int, vi: int, series: dict, value: float, method: str) -> dict:
    row = {"variable": spec.variable, "value": repr(value), "series": _series_label(series),
           "method": method, "outage": "", "standard_error": "", "error": ""}
    t0 = time.perf_counter()
    try:
        p = spec.base
        for k, v in series.items():
            p = apply_override(p, k, v)
        p = apply_override(p, spec.variable, value)
        if method == "analytic":
            row["outage"] = repr(atf_outage(p).p_out)
        elif method == "direct":
            row["outage"] = repr(direct_outage(p))
        else:
            seed = int(np.random.SeedSequence([spec.seed, si, vi]).generate_state(1, np.uint64)[0])
            model = method.split("-", 1)[1]
            res = run(p, SimConfig(spec.blocks, spec.warmup, seed, model))
            row["outage"] = repr(res.outage_rate)
            row["standard_error"] = repr(res.standard_error)
    except Exception as exc:  # recorded per point; the sweep goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time"] = f"{time.perf_counter() - t0:.6f}"
    return row


def _evaluate_packed(args):
    return _evaluate(*args)


def sweep(spec: SweepSpec, workers: int = 1, timing: bool = True) -> list[dict]:
    """Evaluate every (series, grid point, method); rows sorted deterministically.

    With ``timing=False`` the wall_time column is left empty so output is
    byte-reproducible.
    """
    jobs = [(spec, *pt) for pt in spec.points()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_evaluate_packed, jobs, chunksize=4))
    else:
        rows = [_evaluate_packed(j) for j in jobs]
    order = {m: i for i, m in enumerate(OUTPUTS)}
    keyed = sorted(zip(jobs, rows), key=lambda jr: (jr[0][1], jr[0][2], order[jr[0][5]]))
    rows = [r for _, r in keyed]
    if not timing:
        for r in rows:
            r["wall_time"] = ""
    return rows


def et_curve(p: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Analytic outage for every candidate threshold E_T = eps_k, k = 1..L."""
    g = derive_link_gains(p)
    table = HarvestTable.build(p, g)
    levels = np.arange(1, p.L + 1) * p.C / p.L
    outages = np.array([atf_outage(p.with_(E_T=float(e)), g, table=table).p_out for e in levels])
    return levels, outages


def optimal_et(p: SystemParams) -> tuple[float, float]:
    """Exhaustive search over the battery levels; ties go to the smaller E_T."""
    levels, outages = et_curve(p)
    k = int(np.argmin(outages))
    return float(levels[k]), float(outages[k])


def compare_direct(p: SystemParams, ps_grid_dbm: Iterable[float], series: Sequence[dict] = ({},)) -> list[dict]:
    rows = []
    for s in series:
        q = p
        for k, v in s.items():
            q = apply_override(q, k, v)
        for ps in ps_grid_dbm:
            point = q.with_(P_S=dbm_to_watts(ps))
            e_opt, atf = optimal_et(point)
            direct = direct_outage(point)
            rows.append({
                "P_S_dbm": repr(float(ps)), "series": _series_label(s), "direct": repr(direct),
                "atf_optimal": repr(atf), "E_T_opt": repr(e_opt),
                "ratio": repr(atf / direct) if direct > 0 else "",
            })
    return rows


def write_csv(rows: Iterable[dict], fieldnames: Sequence[str], out: str | Path | IO[str] | None = None) -> None:
    if out is None or out == "-":
        _dump(rows, fieldnames, sys.stdout)
    elif isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            _dump(rows, fieldnames, fh)
    else:
        _dump(rows, fieldnames, out)


def _dump(rows, fieldnames, fh):
    w = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
