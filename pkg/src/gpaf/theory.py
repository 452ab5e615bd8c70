"""Quantitative predictions of the growth model, computed independently.

Everything here is closed-form or a recursion in the parameters
(m, alpha, delta) plus the kernel's attractiveness integral; nothing
touches a simulated graph. These values are the oracle side of the
verification suite:

* the limiting degree fractions p_k, solving
      p_k = a*(k-1+delta)*p_{k-1} - a*(k+delta)*p_k + s_k,
  with a = m / (alpha * Theta), p_{m-1} = 0 and a source term s_k on
  m <= k <= 2m from the self-loop law of a fresh vertex;
* the tail exponent 1 + alpha*(1 + delta/(2m)) of p_k;
* the expected total attraction I*(2m+delta)*sigma at a uniform point;
* the deviation scale of the total attraction;
* the degree-growth exponent a = m / (alpha*Theta) of early vertices.

The self-loop law is Binomial(m, 1 - 2/alpha): with high probability
the normalizer sits on its lower-bound branch alpha*Theta*I*sigma while
the total attraction concentrates at 2*Theta*I*sigma, so each of the m
draws is a self-loop with probability 1 - 2/alpha. The pmf at degree k
is C(m, k-m) * (1 - 2/alpha)**(k-m) * (2/alpha)**(2m-k); the exponent
2m-k on the success-complement is forced by the binomial itself (the
variant with exponent 2k-m does not sum to one, which the test suite
demonstrates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .process import ProcessParams

__all__ = [
    "selfloop_degree_pmf",
    "selfloop_pmf_table",
    "limit_degree_distribution",
    "DegreeDistribution",
    "powerlaw_exponent",
    "degree_growth_exponent",
    "expected_total_attraction",
    "concentration_band",
    "TheoryPrediction",
    "predict",
    "table_tail_slope",
]


def _require_supercritical(alpha: float) -> None:
    if not alpha > 2.0:
        raise ValueError("the degree-sequence predictions require alpha > 2")


def selfloop_degree_pmf(m: int, alpha: float, k: int) -> float:
    """P(a fresh vertex is inserted with degree k), k in [m, 2m].

    Binomial(m, 1 - 2/alpha) evaluated at k - m self-loops. Out-of-range
    k yields 0.
    """
    _require_supercritical(alpha)
    if m < 1:
        raise ValueError("m must be >= 1")
    j = k - m
    if j < 0 or j > m:
        return 0.0
    p = 1.0 - 2.0 / alpha
    return math.comb(m, j) * p**j * (1.0 - p) ** (m - j)


def selfloop_pmf_table(m: int, alpha: float):
    """(degrees m..2m, probabilities) of the insertion-degree law."""
    ks = np.arange(m, 2 * m + 1)
    probs = np.array([selfloop_degree_pmf(m, alpha, int(k)) for k in ks])
    return ks, probs


@dataclass(frozen=True)
class DegreeDistribution:
    """Limiting degree fractions p_k on m <= k <= k_max.

    truncation_deficit is 1 - sum(p), the mass beyond k_max.
    """

    k: np.ndarray
    p: np.ndarray
    truncation_deficit: float


def limit_degree_distribution(m: int, alpha: float, delta: float,
                              k_max: int = 1_000_000) -> DegreeDistribution:
    """Solve the limiting recursion for the degree fractions p_k.

    Rearranged for forward evaluation:
        p_k = (a*(k-1+delta)*p_{k-1} + s_k) / (1 + a*(k+delta)),
    with a = m/(alpha*Theta), p_{m-1} = 0, and s_k the insertion-degree
    pmf for m <= k <= 2m (zero beyond). Past k = 2m the ratio
    p_k / p_{k-1} = (k-1+delta) / (k+delta+alpha*Theta/m) makes the
    tail a pure product, evaluated as a cumulative product.
    """
    _require_supercritical(alpha)
    if not delta > -m:
        raise ValueError("delta must satisfy delta > -m")
    if k_max < 2 * m:
        raise ValueError("k_max must be at least 2m")
    theta = (2.0 * m + delta) / 2.0
    a = m / (alpha * theta)
    inv_a = alpha * theta / m

    ks = np.arange(m, k_max + 1)
    p = np.empty(ks.size)
    prev = 0.0
    for i in range(2 * m - m + 1):  # k = m .. 2m
        k = m + i
        s_k = selfloop_degree_pmf(m, alpha, k)
        prev = (a * (k - 1 + delta) * prev + s_k) / (1.0 + a * (k + delta))
        p[i] = prev
    tail_k = ks[m + 1 :]  # k = 2m+1 .. k_max
    if tail_k.size:
        ratios = (tail_k - 1 + delta) / (tail_k + delta + inv_a)
        p[m + 1 :] = p[m] * np.cumprod(ratios)
    total = float(p.sum())
    return DegreeDistribution(k=ks, p=p, truncation_deficit=1.0 - total)


def powerlaw_exponent(m: int, alpha: float, delta: float) -> float:
    """Tail exponent of the degree fractions: 1 + alpha*(1 + delta/(2m)).

    Algebraically identical to 1 + alpha*Theta/m.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not delta > -m:
        raise ValueError("delta must satisfy delta > -m")
    if not alpha > 0.0:
        raise ValueError("alpha must be > 0")
    return 1.0 + alpha * (1.0 + delta / (2.0 * m))


def degree_growth_exponent(m: int, alpha: float, delta: float) -> float:
    """Exponent a = m / (alpha*Theta) governing E[degree] growth of a fixed vertex."""
    theta = (2.0 * m + delta) / 2.0
    return m / (alpha * theta)


def expected_total_attraction(params: ProcessParams, sigma: int) -> float:
    """E[T(U)] = I * (2m + delta) * sigma for a uniform point U."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return params.attraction_integral() * (2.0 * params.m + params.delta) * sigma


def concentration_band(params: ProcessParams, sigma: int) -> float:
    """Deviation scale of the total attraction at vertex count sigma.

    Theta * I * (sigma**(2/alpha) + sqrt(sigma)*log(sigma)) * log(n);
    empirical |T - E T| should rarely exceed this for alpha > 2.
    """
    _require_supercritical(params.alpha)
    if sigma < 2:
        raise ValueError("sigma must be >= 2")
    i_n = params.attraction_integral()
    return (params.theta * i_n
            * (sigma ** (2.0 / params.alpha) + math.sqrt(sigma) * math.log(sigma))
            * math.log(params.n))


@dataclass(frozen=True)
class TheoryPrediction:
    """Bundle of every prediction for one parameter set."""

    degree_distribution: DegreeDistribution
    tail_exponent: float
    expected_attraction_slope: float   # I * (2m + delta), the per-sigma slope
    selfloop_k: np.ndarray
    selfloop_p: np.ndarray
    degree_growth_a: float


def predict(params: ProcessParams, k_max: int = 100_000) -> TheoryPrediction:
    """All predictions for one parameter set (requires alpha > 2)."""
    dist = limit_degree_distribution(params.m, params.alpha, params.delta, k_max)
    ks, probs = selfloop_pmf_table(params.m, params.alpha)
    return TheoryPrediction(
        degree_distribution=dist,
        tail_exponent=powerlaw_exponent(params.m, params.alpha, params.delta),
        expected_attraction_slope=params.attraction_integral()
        * (2.0 * params.m + params.delta),
        selfloop_k=ks,
        selfloop_p=probs,
        degree_growth_a=degree_growth_exponent(params.m, params.alpha, params.delta),
    )


def table_tail_slope(k: np.ndarray, p: np.ndarray, k_lo: float, k_hi: float) -> float:
    """Least-squares slope of log p against log k over [k_lo, k_hi]."""
    mask = (k >= k_lo) & (k <= k_hi) & (p > 0)
    if mask.sum() < 2:
        raise ValueError("not enough table points in the requested range")
    return float(np.polyfit(np.log(k[mask]), np.log(p[mask]), 1)[0])
