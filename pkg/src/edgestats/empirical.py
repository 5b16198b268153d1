"""Empirical-distribution plumbing shared by the samplers and experiments.

Nothing in here knows about kernels or matrices: just sorted-sample CDFs,
Kolmogorov-Smirnov distances, total variation, and the exact law of a sum of
independent Bernoulli variables.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


def ks_statistic(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup distance against a callable CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n == 0:
        raise DomainError("empty sample")
    f = np.asarray(cdf(xs), dtype=float)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - f), np.max(f - (grid - 1.0 / n))))


def ks_two_sample(a, b) -> float:
    """Two-sample KS distance, ties handled by pooled-grid evaluation."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("empty sample")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ecdf(samples):
    """Return a vectorized empirical CDF t -> P_hat[X <= t]."""
    xs = np.sort(np.asarray(samples, dtype=float))
    if xs.size == 0:
        raise DomainError("empty sample")

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(xs, t, side="right") / xs.size
        return float(out) if out.shape == () else out

    return f


def dkw_epsilon(n: int, confidence: float = 0.99) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz confidence band."""
    if n < 1 or not 0 < confidence < 1:
        raise DomainError("need n >= 1 and confidence in (0, 1)")
    return float(np.sqrt(np.log(2.0 / (1.0 - confidence)) / (2.0 * n)))


def tv_distance(p, q) -> float:
    """Total variation between two finitely supported laws (padded with zeros)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = max(p.size, q.size)
    pp = np.zeros(m)
    qq = np.zeros(m)
    pp[: p.size] = p
    qq[: q.size] = q
    return float(0.5 * np.sum(np.abs(pp - qq)))


def poisson_binomial(probs) -> np.ndarray:
    """Exact count law of independent Bernoulli(p_k) trials, by convolution.

    Entry j of the result is P[sum of indicators = j]; length len(probs) + 1.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.size and (np.min(probs) < 0 or np.max(probs) > 1):
        raise DomainError("Bernoulli probabilities must lie in [0, 1]")
    law = np.zeros(probs.size + 1)
    law[0] = 1.0
    for k, p in enumerate(probs):
        law[1 : k + 2] = law[1 : k + 2] * (1.0 - p) + law[: k + 1] * p
        law[0] *= 1.0 - p
    return law
