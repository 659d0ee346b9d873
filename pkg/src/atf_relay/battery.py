"""Finite-state Markov chain of the relay battery.

The battery holds one of ``L + 1`` discrete levels ``eps_i = i C / L``.
Per block the relay either harvests (Modes I and II) or spends the
discretized threshold energy ``eps_T`` to forward (Mode III). Transition
probabilities come entirely from the CDF of the S-R channel gain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .fading import RicianSumSpec, cdf_h_sr, sf_h_sr
from .params import InvalidParameterError, LinkGains, SystemParams

ROW_SUM_TOL = 1e-9
_LEVEL_TIE = 1e-9


class SingularChainError(np.linalg.LinAlgError):
    """The chain has no unique stationary distribution (or the solve broke down)."""


@dataclass(frozen=True)
class BatteryGrid:
    L: int
    C: float
    E_T: float

    def __post_init__(self):
        if self.L < 1 or self.C <= 0:
            raise InvalidParameterError("need L >= 1 and C > 0")
        if not 0 < self.E_T:
            raise InvalidParameterError("E_T must be positive")
        # no level satisfies eps_j >= E_T
        if self.E_T > self.C * (1 + _LEVEL_TIE):
            raise InvalidParameterError(f"E_T = {self.E_T} exceeds battery capacity {self.C}")

    @classmethod
    def from_params(cls, p: SystemParams) -> "BatteryGrid":
        return cls(L=p.L, C=p.C, E_T=p.E_T)

    @cached_property
    def levels(self) -> np.ndarray:
        return np.arange(self.L + 1) * self.C / self.L

    @cached_property
    def t(self) -> int:
        """Index of eps_T, the smallest level j >= 1 with eps_j >= E_T.

        A relative slack of 1e-9 absorbs rounding when E_T is meant to sit
        exactly on a level (e.g. E_T = 1e-4 with C/L = 5e-5).
        """
        k = int(np.ceil(self.E_T * self.L / self.C * (1 - _LEVEL_TIE)))
        return min(max(k, 1), self.L)

    @property
    def eps_T(self) -> float:
        return float(self.levels[self.t])


def discretize_harvest(E_H, grid: BatteryGrid):
    """Index of the largest level strictly below ``E_H`` (0 if none), capped at L."""
    idx = np.searchsorted(grid.levels, np.asarray(E_H, dtype=float), side="left") - 1
    idx = np.clip(idx, 0, grid.L)
    return int(idx) if np.ndim(idx) == 0 else idx


@dataclass(frozen=True)
class HarvestTable:
    """H_SR CDF/survival values at every threshold the matrix needs.

    ``mode1[k]`` / ``mode2[k]`` hold thresholds ``k C/(eta P_S L)`` and
    ``2 k C/(eta P_S L)`` for k = 0..L+1; ``decode`` is ``gamma0 N0 / P_S``.
    These do not depend on E_T, so one table serves a whole E_T search.
    """

    mode1: np.ndarray
    mode2: np.ndarray
    F1: np.ndarray
    S1: np.ndarray
    F2: np.ndarray
    S2: np.ndarray
    decode: float
    F_dec: float
    S_dec: float

    @classmethod
    def build(cls, p: SystemParams, g: LinkGains) -> "HarvestTable":
        spec = RicianSumSpec.from_params(p, g)
        k = np.arange(p.L + 2)
        u = k * p.C / (p.eta * p.P_S * p.L)
        dec = p.gamma0 * p.N0 / p.P_S
        x = np.concatenate([u, 2 * u, [dec]])
        F, S = cdf_h_sr(spec, x), sf_h_sr(spec, x)
        n = p.L + 2
        return cls(u, 2 * u, F[:n], S[:n], F[n:2 * n], S[n:2 * n], dec, float(F[-1]), float(S[-1]))

    @staticmethod
    def _between(F, S, lo, hi):
        # Pr{lo <= H < hi}, taken from whichever side of the median is accurate
        return F[hi] - F[lo] if F[hi] <= 0.5 else S[lo] - S[hi]

    def bin1(self, k: int) -> float:
        return self._between(self.F1, self.S1, k, k + 1)

    def bin2(self, k: int) -> float:
        return self._between(self.F2, self.S2, k, k + 1)

    def mode2_to_decode(self, k: int) -> float:
        """Pr{2kC/(eta P_S L) <= H < gamma0 N0/P_S}."""
        if self.F_dec <= 0.5:
            return self.F_dec - self.F2[k]
        return self.S2[k] - self.S_dec


def build_transition_matrix(p: SystemParams, g: LinkGains, grid: BatteryGrid | None = None,
                            table: HarvestTable | None = None) -> np.ndarray:
    """Return the (L+1) x (L+1) row-stochastic battery transition matrix.

    Rows with ``eps_i < eps_T`` are Mode I (harvest for a whole block).
    Other rows split into Mode II (decode failure, half-block harvest,
    capped by the decoding threshold) and Mode III (discharge by eps_T).
    Mode II branch conditions compare the decoding threshold against the
    harvest bin edges, all expressed as S-R channel gains.
    """
    grid = grid or BatteryGrid.from_params(p)
    table = table or HarvestTable.build(p, g)
    L, t = grid.L, grid.t
    dec = table.decode
    v = table.mode2
    M = np.zeros((L + 1, L + 1))

    for i in range(L + 1):
        if i < t:
            # Mode I: empty / partially / fully charged
            for k in range(L - i):
                M[i, i + k] = table.bin1(k)
            M[i, L] += table.S1[L - i]
            continue

        M[i, i - t] += table.S_dec  # Mode III discharge
        if i == L:
            M[L, L] += table.F_dec
            continue

        # Mode II, harvest discretized to k levels
        M[i, i] += table.F_dec if dec < v[1] else table.F2[1]
        for k in range(1, L - i):
            if dec < v[k]:
                prob = 0.0
            elif dec < v[k + 1]:
                prob = table.mode2_to_decode(k)
            else:
                prob = table.bin2(k)
            M[i, i + k] += prob
        if dec >= v[L - i]:
            M[i, L] += table.mode2_to_decode(L - i)

    if np.any(M < -1e-15):
        raise ArithmeticError("negative transition probability")
    M = np.clip(M, 0.0, None)
    err = np.abs(M.sum(axis=1) - 1.0).max()
    if err > ROW_SUM_TOL:
        raise ArithmeticError(f"transition rows do not sum to one (max error {err:.3g})")
    return M


def _gth(M: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman state reduction (subtraction free)."""
    A = np.array(M, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise SingularChainError(f"state {k} cannot reach lower states; chain is reducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def _is_valid_stationary(M, pi, tol=1e-8) -> bool:
    return (np.all(np.isfinite(pi)) and pi.min() >= -1e-12 and abs(pi.sum() - 1) <= 1e-9
            and np.abs(M.T @ pi - pi).max() <= tol)


def stationary_distribution(M: np.ndarray, method: str = "auto") -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix.

    ``direct`` solves ``(M^T - I + B) pi = b`` with B all ones and b a ones
    vector. ``gth`` uses state reduction, which survives chains whose
    transition probabilities span hundreds of orders of magnitude (very low
    source power). ``auto`` tries ``direct`` and falls back to ``gth`` when
    the result fails the residual check.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError("transition matrix must be square")
    if method not in ("auto", "direct", "gth"):
        raise ValueError(f"unknown method {method!r}")

    if method in ("auto", "direct"):
        A = M.T - np.eye(n) + 1.0
        try:
            pi = np.linalg.solve(A, np.ones(n))
        except np.linalg.LinAlgError as exc:
            if method == "direct":
                raise SingularChainError(str(exc)) from exc
            pi = None
        if pi is not None and _is_valid_stationary(M, pi):
            return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()
        if method == "direct":
            raise SingularChainError("linear solve did not yield a stationary distribution")

    pi = _gth(M)
    if not _is_valid_stationary(M, pi):
        raise SingularChainError("state reduction did not yield a stationary distribution")
    return pi


def cooperation_probability(pi: np.ndarray, grid: BatteryGrid) -> float:
    """P_E: steady-state probability that the battery holds at least eps_T."""
    return float(min(1.0, np.sum(pi[grid.t:])))


def dump_chain_csv(path: str | Path, M: np.ndarray, pi: np.ndarray | None = None) -> None:
    """Write M row-major (and pi as a last row, if given) with index headers."""
    n = M.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i"] + [str(j) for j in range(n)])
        for i in range(n):
            w.writerow([i] + [repr(float(x)) for x in M[i]])
        if pi is not None:
            w.writerow(["pi"] + [repr(float(x)) for x in pi])
