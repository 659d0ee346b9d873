"""Independent reference computations used by the test-suite.

Nothing here calls into the code paths it is used to check: the Marcum
function is integrated numerically from its definition, the sum-SNR CDF is
sampled by inverse transform, and battery transitions are sampled from
numpy's non-central chi-square generator.
"""

import numpy as np
from scipy import integrate, special


def marcum_q_quad(N, a, b):
    """Q_N(a, b) = a^{1-N} int_b^inf x^N exp(-(x^2+a^2)/2) I_{N-1}(a x) dx."""
    if a == 0:
        # I_{N-1}(ax)/a^{N-1} -> (x/2)^{N-1}/Gamma(N)
        f = lambda x: x**N * np.exp(-x * x / 2) * (x / 2) ** (N - 1) / special.gamma(N)
        peak = np.sqrt(max(2 * N - 1, 1))
    else:
        # ive(v, z) = iv(v, z) e^{-z}
        f = lambda x: x**N / a ** (N - 1) * special.ive(N - 1, a * x) * np.exp(-((x - a) ** 2) / 2)
        peak = a + np.sqrt(N)
    upper = max(b, peak) + 40.0
    pts = [p for p in (peak,) if b < p < upper]
    val, _ = integrate.quad(f, b, upper, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def two_exp_sum_cdf(gamma, s, g):
    """Pr{X + Y < gamma}, X ~ Exp(mean s), Y ~ Exp(mean g), integrated by hand."""
    if s == g:
        return 1 - np.exp(-gamma / s) * (1 + gamma / s)
    return 1 - (s * np.exp(-gamma / s) - g * np.exp(-gamma / g)) / (s - g)


def sample_sum_snr(rng, n, s, g, N, chunk=2_000_000):
    """Count of draws with Exp(s) + max of N Exp(g) < gamma, by inverse transform."""
    def draw(k):
        u1, u2 = rng.random(k), rng.random(k)
        x = -s * np.log1p(-u1)
        y = -g * np.log1p(-(u2 ** (1.0 / N)))
        return x + y
    out = []
    done = 0
    while done < n:
        k = min(chunk, n - done)
        out.append(draw(k))
        done += k
    return np.concatenate(out)


def sample_h_sr(rng, n, N, K, Omega):
    """H_SR as scaled non-central chi-square with 2N degrees of freedom."""
    scale = Omega / (2 * (K + 1))
    if K == 0:
        return scale * rng.chisquare(2 * N, n)
    return scale * rng.noncentral_chisquare(2 * N, 2 * N * K, n)


def empirical_transition_row(rng, i, n, *, L, C, E_T, eta, P_S, N0, R, N, K, Omega):
    """Sample n next levels from level i by applying the protocol rule directly."""
    eps = C / L
    t = int(np.ceil(E_T / eps - 1e-9))
    h = sample_h_sr(rng, n, N, K, Omega)
    nxt = np.empty(n, dtype=int)
    if i < t:
        k = np.ceil(eta * P_S * h / eps) - 1
        nxt[:] = np.minimum(i + np.maximum(k, 0), L)
    else:
        ok = P_S * h / N0 >= 2 ** (2 * R) - 1
        k = np.ceil(eta * P_S * h / 2 / eps) - 1
        nxt[:] = np.minimum(i + np.maximum(k, 0), L)
        nxt[ok] = i - t
    return np.bincount(nxt, minlength=L + 1) / n
