"""
Diophantine — How badly a coefficient a is approximated by rationals.

``diophantine_constant`` is the exhaustive min over small denominators;
the continued-fraction helpers estimate the asymptotic constant, which
for quadratic irrationals is larger than the small-n minimum.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# partial quotients below this remainder are treated as a terminated expansion
_CF_EPS = 1e-12


def _dist_to_integers(x: np.ndarray) -> np.ndarray:
    return np.abs(x - np.rint(x))


def diophantine_constant(a: float, n_max: int, tau0: float) -> float:
    """
    Best γ0 with |m − a n| ≥ γ0/|n|^τ0 for all 1 ≤ |n| ≤ n_max.

    Equals min_n n^τ0·dist(a n, Z); the sign of n does not matter.
    The value is non-increasing in ``n_max``. For the golden ratio with
    τ0 = 1 the minimum sits at n = 1 (2 − a ≈ 0.382), while the large-n
    behaviour tends to the tail constant 1/√5 ≈ 0.447; use
    ``lagrange_tail_estimate`` for that limit.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    n = np.arange(1, n_max + 1, dtype=float)
    values = n ** tau0 * _dist_to_integers(a * n)
    return float(values.min())


def worst_denominator(a: float, n_max: int, tau0: float) -> Tuple[int, float]:
    """The n attaining ``diophantine_constant`` and the value there."""
    n = np.arange(1, n_max + 1, dtype=float)
    values = n ** tau0 * _dist_to_integers(a * n)
    k = int(np.argmin(values))
    return k + 1, float(values[k])


def continued_fraction(a: float, depth: int = 20) -> List[int]:
    """Partial quotients [a0; a1, a2, ...], stopping early for rationals."""
    quotients: List[int] = []
    x = float(a)
    for _ in range(depth):
        q = math.floor(x)
        quotients.append(int(q))
        frac = x - q
        if frac < _CF_EPS:
            break
        x = 1.0 / frac
    return quotients


def convergents(quotients: List[int]) -> List[Tuple[int, int]]:
    """(p_k, q_k) for each prefix of the expansion."""
    out = []
    p_prev, p = 1, quotients[0]
    q_prev, q = 0, 1
    out.append((p, q))
    for c in quotients[1:]:
        p_prev, p = p, c * p + p_prev
        q_prev, q = q, c * q + q_prev
        out.append((p, q))
    return out


def lagrange_tail_estimate(a: float, depth: int = 20, tail: Optional[int] = None) -> float:
    """
    Estimate liminf_n n·dist(a n, Z) from the tail of the convergents.

    For the golden ratio the limit is 1/√5.
    """
    conv = convergents(continued_fraction(a, depth))
    tail = tail or max(1, len(conv) // 2)
    samples = [q * abs(q * a - p) for p, q in conv[-tail:]]
    estimate = min(samples)
    logger.debug("tail estimate for a=%r over %d convergents: %.6g", a, len(samples), estimate)
    return float(estimate)


@dataclass(frozen=True)
class NonresonanceResult:
    """Outcome of the |m − a n| ≥ γ1/|m|^{3/2} scan."""
    passed: bool
    worst_m: int
    worst_n: int
    ratio: float


def nonresonance_margin(a: float, gamma1: float, m_max: int) -> NonresonanceResult:
    """
    Check |m − a n| ≥ γ1/max(1, |m|^{3/2}) for 1 ≤ m ≤ m_max and every integer n.

    For each m only the nearest n = round(m/a) matters. ``ratio`` is the
    smallest |m − a n|·max(1, m^{3/2})/γ1; the check passes iff it is ≥ 1.
    """
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    m = np.arange(1, m_max + 1, dtype=float)
    n = np.rint(m / a)
    ratios = np.abs(m - a * n) * np.maximum(1.0, m ** 1.5) / gamma1
    k = int(np.argmin(ratios))
    ratio = float(ratios[k])
    return NonresonanceResult(ratio >= 1.0, k + 1, int(n[k]), ratio)
