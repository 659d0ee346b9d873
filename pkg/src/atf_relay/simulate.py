"""Block-level Monte Carlo simulation of the ATF protocol.

Two battery models are supported. ``continuous`` keeps the raw harvested
energy and spends exactly E_T; ``discrete`` quantizes harvests down to the
level grid and spends eps_T, which makes it an exact sample path of the
battery Markov chain.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import IO

import numpy as np

from .battery import BatteryGrid, discretize_harvest
from .fading import ChannelDraw, sample_channels
from .params import InvalidParameterError, LinkGains, SystemParams, derive_link_gains

MODE_I, MODE_II, MODE_III = 1, 2, 3
BATTERY_MODELS = ("continuous", "discrete")
_CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    blocks: int = 1_000_000
    warmup: int = 10_000
    seed: int = 0
    battery_model: str = "continuous"

    def __post_init__(self):
        if self.blocks < 1 or self.warmup < 0 or self.warmup >= self.blocks:
            raise InvalidParameterError("need blocks >= 1 and 0 <= warmup < blocks")
        if self.battery_model not in BATTERY_MODELS:
            raise InvalidParameterError(f"battery_model must be one of {BATTERY_MODELS}")


@dataclass
class SimResult:
    """Counts over the blocks after warmup; rates are derived so merging is exact."""

    counted: int
    outages: int
    mode_counts: tuple[int, int, int]
    level_histogram: np.ndarray | None = None
    battery_model: str = "continuous"
    outages_by_mode: tuple[int, int, int] = field(default=(0, 0, 0))

    @property
    def outage_rate(self) -> float:
        return self.outages / self.counted

    @property
    def standard_error(self) -> float:
        q = self.outage_rate
        return math.sqrt(q * (1.0 - q) / self.counted)

    @property
    def mode_fractions(self) -> tuple[float, float, float]:
        return tuple(c / self.counted for c in self.mode_counts)

    def level_distribution(self) -> np.ndarray | None:
        if self.level_histogram is None:
            return None
        return self.level_histogram / self.level_histogram.sum()

    CSV_FIELDS = ("battery_model", "blocks", "outages", "outage_rate", "standard_error",
                  "mode_I", "mode_II", "mode_III")

    def csv_row(self) -> dict:
        return {
            "battery_model": self.battery_model,
            "blocks": self.counted,
            "outages": self.outages,
            "outage_rate": repr(self.outage_rate),
            "standard_error": repr(self.standard_error),
            "mode_I": self.mode_counts[0],
            "mode_II": self.mode_counts[1],
            "mode_III": self.mode_counts[2],
        }


def merge_results(a: SimResult, b: SimResult) -> SimResult:
    """Pool two independent replications (count-weighted, order independent)."""
    if a.battery_model != b.battery_model:
        raise ValueError("cannot merge results from different battery models")
    hist = None
    if a.level_histogram is not None and b.level_histogram is not None:
        hist = a.level_histogram + b.level_histogram
    return SimResult(
        counted=a.counted + b.counted,
        outages=a.outages + b.outages,
        mode_counts=tuple(x + y for x, y in zip(a.mode_counts, b.mode_counts)),
        level_histogram=hist,
        battery_model=a.battery_model,
        outages_by_mode=tuple(x + y for x, y in zip(a.outages_by_mode, b.outages_by_mode)),
    )


def step(energy: float, draw: ChannelDraw, p: SystemParams, grid: BatteryGrid,
         battery_model: str = "continuous") -> tuple[int, float, bool]:
    """Advance one block. Returns ``(mode, energy at next block, outage)``.

    In the discrete model ``energy`` must sit on a grid level; harvests are
    quantized down to a level and forwarding spends eps_T instead of E_T.
    """
    discrete = battery_model == "discrete"
    gamma_sd = p.P_S * draw.H_SD / p.N0
    gamma_sr = p.P_S * draw.H_SR / p.N0
    need = grid.eps_T if discrete else p.E_T

    if energy < need:
        mode, harvest, outage = MODE_I, p.eta * p.P_S * draw.H_SR, gamma_sd < p.gamma1
    elif gamma_sr < p.gamma0:
        mode, harvest, outage = MODE_II, p.eta * p.P_S * draw.H_SR / 2.0, 2.0 * gamma_sd < p.gamma0
    else:
        gamma_d = (p.P_S * draw.H_SD + 2.0 * p.E_T * draw.H_RD) / p.N0
        mode, harvest, outage = MODE_III, None, gamma_d < p.gamma0

    if not discrete:
        new = energy - p.E_T if mode == MODE_III else min(energy + harvest, p.C)
        return mode, new, bool(outage)
    level = _level(energy, grid)
    if mode == MODE_III:
        level -= grid.t
    else:
        level = min(level + discretize_harvest(harvest, grid), grid.L)
    return mode, float(grid.levels[level]), bool(outage)


def _level(energy: float, grid: BatteryGrid) -> int:
    return int(round(energy * grid.L / grid.C))


def _block_arrays(p: SystemParams, g: LinkGains, grid: BatteryGrid, rng, n: int, discrete: bool):
    """Per-block quantities that do not depend on the battery state."""
    d = sample_channels(p, g, rng, n)
    gamma_sd = p.P_S * d.H_SD / p.N0
    decoded = p.P_S * d.H_SR / p.N0 >= p.gamma0
    out1 = gamma_sd < p.gamma1
    out2 = 2.0 * gamma_sd < p.gamma0
    out3 = (p.P_S * d.H_SD + 2.0 * p.E_T * d.H_RD) / p.N0 < p.gamma0
    e1 = p.eta * p.P_S * d.H_SR
    e2 = e1 / 2.0
    if discrete:
        e1, e2 = discretize_harvest(e1, grid), discretize_harvest(e2, grid)
    return d, decoded.tolist(), out1.tolist(), out2.tolist(), out3.tolist(), e1.tolist(), e2.tolist()


def run(p: SystemParams, cfg: SimConfig, g: LinkGains | None = None, grid: BatteryGrid | None = None,
        trace: IO[str] | str | Path | None = None) -> SimResult:
    """Simulate ``cfg.blocks`` blocks from an empty battery.

    Outages and modes are counted after ``cfg.warmup`` blocks. When
    ``trace`` is given, every block is written as a CSV line
    ``block,mode,battery,outage`` (battery at the start of the block).
    """
    g = g or derive_link_gains(p)
    grid = grid or BatteryGrid.from_params(p)
    rng = np.random.default_rng(cfg.seed)
    discrete = cfg.battery_model == "discrete"

    trace_fh, close_trace = None, False
    if trace is not None:
        if isinstance(trace, (str, Path)):
            trace_fh, close_trace = open(trace, "w", newline=""), True
        else:
            trace_fh = trace
        trace_fh.write("block,mode,battery,outage\n")

    L, C = grid.L, p.C
    need = grid.t if discrete else p.E_T
    consume = grid.t if discrete else p.E_T
    state = 0 if discrete else 0.0
    modes = [0, 0, 0]
    mode_out = [0, 0, 0]
    hist = [0] * (L + 1) if discrete else None

    m = 0
    try:
        while m < cfg.blocks:
            n = min(_CHUNK, cfg.blocks - m)
            _, decoded, out1, out2, out3, e1, e2 = _block_arrays(p, g, grid, rng, n, discrete)
            for j in range(n):
                before = state
                if state < need:
                    mode, out = 0, out1[j]
                    state = state + e1[j]
                elif not decoded[j]:
                    mode, out = 1, out2[j]
                    state = state + e2[j]
                else:
                    mode, out = 2, out3[j]
                    state = state - consume
                if mode != 2:
                    if discrete:
                        state = state if state < L else L
                    else:
                        state = state if state < C else C
                if m + j >= cfg.warmup:
                    modes[mode] += 1
                    mode_out[mode] += out
                    if discrete:
                        hist[before] += 1
                if trace_fh is not None:
                    level = float(grid.levels[before]) if discrete else before
                    trace_fh.write(f"{m + j},{mode + 1},{level!r},{int(out)}\n")
            m += n
    finally:
        if close_trace:
            trace_fh.close()

    return SimResult(
        counted=cfg.blocks - cfg.warmup,
        outages=sum(mode_out),
        mode_counts=tuple(modes),
        level_histogram=np.array(hist) if discrete else None,
        battery_model=cfg.battery_model,
        outages_by_mode=tuple(mode_out),
    )


def _run_one(args):
    p, cfg = args
    return run(p, cfg)


def run_replicated(p: SystemParams, cfg: SimConfig, replications: int, workers: int = 1) -> SimResult:
    """Independent replications with child seeds of ``cfg.seed``, pooled.

    Each replication simulates ``cfg.blocks`` blocks with its own warmup.
    The pooled result is the same for any ``workers`` value.
    """
    if replications < 1:
        raise InvalidParameterError("need at least one replication")
    seeds = np.random.SeedSequence(cfg.seed).spawn(replications)
    jobs = [(p, SimConfig(cfg.blocks, cfg.warmup, int(s.generate_state(1, np.uint64)[0]), cfg.battery_model))
            for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    return reduce(merge_results, results)


def write_result_csv(path: str | Path | IO[str], result: SimResult, extra: dict | None = None) -> None:
    extra = extra or {}
    fields_ = list(extra) + list(SimResult.CSV_FIELDS)
    row = {**extra, **result.csv_row()}
    if isinstance(path, (str, Path)):
        with open(path, "w", newline="") as fh:
            _write(fh, fields_, row)
    else:
        _write(path, fields_, row)


def _write(fh, fields_, row):
    w = csv.DictWriter(fh, fieldnames=fields_, lineterminator="\n")
    w.writeheader()
    w.writerow(row)
