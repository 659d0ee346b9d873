"""Channel statistics for the mixed Rician/Rayleigh three-node network.

Contains the generalized Marcum Q-function, CDFs of the three channel power
gains, the closed-form CDF of the Mode III end-to-end SNR, and samplers.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import special

from .params import InvalidParameterError, LinkGains, SystemParams

# Poisson-tail bound used to stop the Marcum series.
_TAIL_ABS = 1e-16
_TAIL_REL = 1e-15
_CLAMP_TOL = 1e-9
_DEGENERATE_REL = 1e-9


class NumericalError(ArithmeticError):
    """A probability left [0, 1] by more than rounding can explain."""


def clamp_probability(x):
    """Clip to [0, 1]; excursions beyond 1e-9 indicate a bug, so raise."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_CLAMP_TOL) or np.any(arr > 1 + _CLAMP_TOL) or np.any(np.isnan(arr)):
        raise NumericalError(f"probability out of range: {arr[(arr < 0) | (arr > 1) | np.isnan(arr)][:5]}")
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _poisson_mixture(order: int, mu: float, x: np.ndarray, upper: bool) -> np.ndarray:
    """sum_n Pois(n; mu) * G(order + n, x), G = regularized upper/lower gamma.

    Terms are added until the discarded Poisson mass (times the largest
    remaining gamma factor) is below 1e-16 absolute and 1e-15 relative to
    the partial sum, so tiny tail probabilities keep their relative accuracy.

    The gamma factors across orders follow from one incomplete-gamma call
    and the recurrence ``Q(s+1, x) = Q(s, x) + x^s e^{-x} / s!``, run upward
    for the upper function and downward for the lower one so that only
    non-negative quantities are ever added.
    """
    gfun = special.gammaincc if upper else special.gammainc
    if mu == 0.0:
        return gfun(order, x)
    nmax = int(mu + 12.0 * np.sqrt(mu) + 40)
    cap = 4 * nmax + 2000
    while True:
        total = _mixture_sum(order, mu, x, nmax, upper)
        tail = special.pdtrc(nmax - 1, mu)
        if not upper:
            tail = tail * special.gammainc(order + nmax, x)
        ok = (tail <= _TAIL_ABS) & ((tail <= _TAIL_REL * total) | (tail < 1e-300))
        if np.all(ok) or nmax > cap:
            return total
        nmax *= 2


def _mixture_sum(order: int, mu: float, x: np.ndarray, nmax: int, upper: bool, chunk: int = 1 << 14) -> np.ndarray:
    n = np.arange(nmax, dtype=float)
    w = np.exp(-mu + n * np.log(mu) - special.gammaln(n + 1))
    s = order + n[:-1]
    if upper:
        # weight of increment m is sum_{n > m} w_n
        inc_weight = np.cumsum(w[::-1])[::-1][1:]
        anchor = special.gammaincc(order, x)
    else:
        # weight of increment m is sum_{n <= m} w_n
        inc_weight = np.cumsum(w)[:-1]
        anchor = special.gammainc(order + nmax - 1, x)
    out = anchor * w.sum()
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    lg = special.gammaln(s + 1)
    for lo in range(0, x.size, chunk):
        sl = slice(lo, lo + chunk)
        d = np.exp(s[None, :] * logx[sl, None] - x[sl, None] - lg[None, :])
        out[sl] += d @ inc_weight
    return out


def _check_marcum_args(order, a, b):
    if order < 1 or int(order) != order:
        raise InvalidParameterError(f"Marcum Q order must be a positive integer, got {order!r}")
    if a < 0 or np.any(np.asarray(b) < 0):
        raise InvalidParameterError("Marcum Q arguments must be non-negative")


def marcum_q(order: int, a: float, b):
    """Generalized Marcum Q-function ``Q_order(a, b)``.

    Evaluated as a Poisson mixture of regularized upper incomplete gamma
    functions, ``sum_n e^{-a^2/2} (a^2/2)^n / n! * Q(order + n, b^2/2)``.
    ``b`` may be an array.
    """
    _check_marcum_args(order, a, b)
    bb = np.asarray(b, dtype=float)
    out = _poisson_mixture(int(order), 0.5 * a * a, (0.5 * bb * bb).ravel(), upper=True)
    return clamp_probability(out.reshape(bb.shape))


def marcum_p(order: int, a: float, b):
    """Complement ``1 - Q_order(a, b)``, summed directly for accuracy near 0."""
    _check_marcum_args(order, a, b)
    bb = np.asarray(b, dtype=float)
    out = _poisson_mixture(int(order), 0.5 * a * a, (0.5 * bb * bb).ravel(), upper=False)
    return clamp_probability(out.reshape(bb.shape))


@dataclass(frozen=True)
class RicianSumSpec:
    """Sum of ``N`` i.i.d. Rician power gains with factor ``K`` and mean ``Omega`` each."""

    N: int
    K: float
    Omega: float

    def __post_init__(self):
        if self.N < 1 or self.K < 0 or self.Omega <= 0:
            raise InvalidParameterError(f"invalid Rician sum spec {self}")

    @classmethod
    def from_params(cls, p: SystemParams, g: LinkGains) -> "RicianSumSpec":
        return cls(N=p.N, K=p.K, Omega=g.Omega_SR)

    def marcum_args(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise InvalidParameterError("CDF argument must be >= 0")
        a = np.sqrt(2.0 * self.N * self.K)
        b = np.sqrt(2.0 * (self.K + 1.0) * x / self.Omega)
        return a, b


def cdf_h_sr(spec: RicianSumSpec, x):
    """CDF of H_SR: ``1 - Q_N(sqrt(2NK), sqrt(2(K+1)x/Omega))``."""
    a, b = spec.marcum_args(x)
    return marcum_p(spec.N, a, b)


def sf_h_sr(spec: RicianSumSpec, x):
    """Survival function of H_SR, i.e. ``Q_N(...)`` without the subtraction."""
    a, b = spec.marcum_args(x)
    return marcum_q(spec.N, a, b)


def cdf_h_sd(Omega_SD: float, y):
    if Omega_SD <= 0:
        raise InvalidParameterError("Omega_SD must be positive")
    y = np.asarray(y, dtype=float)
    return clamp_probability(-np.expm1(-y / Omega_SD))


def cdf_h_rd_max(N: int, Omega_RD: float, x):
    """CDF of the largest of ``N`` i.i.d. exponential gains (antenna selection)."""
    if Omega_RD <= 0 or N < 1:
        raise InvalidParameterError("need Omega_RD > 0 and N >= 1")
    x = np.asarray(x, dtype=float)
    return clamp_probability((-np.expm1(-x / Omega_RD)) ** N)


def _phi(u: float, gamma: float) -> float:
    # u * (1 - exp(-gamma/u))
    return -u * np.expm1(-gamma / u)


def _dphi(u: float, gamma: float) -> float:
    t = gamma / u
    return -np.expm1(-t) - t * np.exp(-t)


def sum_snr_cdf(gamma: float, gbar_SD: float, gbar_RD: float, N: int) -> float:
    """``Pr{gamma_SD + gamma_RD < gamma}`` in closed form.

    gamma_SD is exponential with mean ``gbar_SD``; gamma_RD is the maximum
    of ``N`` i.i.d. exponentials with mean ``gbar_RD``. Expanding the density
    of the maximum, ``N/g * sum_k C(N-1,k) (-1)^k exp(-(k+1)x/g)``, and
    convolving gives::

        N sum_k C(N-1,k) (-1)^k [s(1-e^{-gamma/s}) - g/(k+1) (1-e^{-(k+1)gamma/g})]
                                / ((k+1)s - g)

    with s = gbar_SD, g = gbar_RD. Terms whose denominator vanishes (to
    1e-9 relative) are replaced by their limit ``(1 - e^{-t}(1+t))/(k+1)``,
    t = gamma/s.
    """
    if gbar_SD <= 0 or gbar_RD <= 0:
        raise InvalidParameterError("mean SNRs must be positive")
    if N < 1:
        raise InvalidParameterError("N must be >= 1")
    if gamma < 0:
        raise InvalidParameterError("threshold must be >= 0")
    if gamma == 0:
        return 0.0
    s = gbar_SD
    total = 0.0
    for k in range(N):
        h = gbar_RD / (k + 1)
        denom = (k + 1) * s - gbar_RD
        if abs(denom) < _DEGENERATE_REL * max((k + 1) * s, gbar_RD):
            term = _dphi(s, gamma) / (k + 1)
        else:
            term = (_phi(s, gamma) - _phi(h, gamma)) / denom
        total += comb(N - 1, k) * (-1) ** k * term
    return clamp_probability(N * total)


@dataclass(frozen=True)
class ChannelDraw:
    """Realized channel power gains for one block (or arrays for many)."""

    H_SR: np.ndarray | float
    H_RD: np.ndarray | float
    H_SD: np.ndarray | float


def sample_channels(p: SystemParams, g: LinkGains, rng: np.random.Generator, size: int | None = None) -> ChannelDraw:
    """Draw block-fading channel power gains.

    The S-R elements are complex Gaussian with a real-axis LoS mean
    ``sqrt(K Omega/(K+1))`` and per-dimension variance ``Omega/(2(K+1))``;
    R-D uses the best of N Rayleigh elements; S-D is Rayleigh.
    """
    shape = (1 if size is None else size, p.N)
    los = np.sqrt(p.K * g.Omega_SR / (p.K + 1.0))
    sigma = np.sqrt(g.Omega_SR / (2.0 * (p.K + 1.0)))
    re = rng.normal(los, sigma, shape)
    im = rng.normal(0.0, sigma, shape)
    h_sr = np.sum(re * re + im * im, axis=1)
    h_rd = rng.exponential(g.Omega_RD, shape).max(axis=1)
    h_sd = rng.exponential(g.Omega_SD, shape[0])
    if size is None:
        return ChannelDraw(float(h_sr[0]), float(h_rd[0]), float(h_sd[0]))
    return ChannelDraw(h_sr, h_rd, h_sd)
