"""
Normalized associated Legendre tables at Gauss–Legendre nodes.

``P[l, m + l_max, k]`` holds the θ-part of Y_l^m at node k, so that
Y_l^m(θ, φ) = P_l^m(cos θ)·e^{imφ} is orthonormal on S² and carries the
Condon–Shortley phase. Negative orders use P_l^{−m} = (−1)^m P_l^m.
"""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=32)
def gauss_nodes(n_theta: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, weights, θ) with x = cos θ, nodes ordered from the north pole."""
    x, w = leggauss(n_theta)
    x, w = x[::-1].copy(), w[::-1].copy()
    theta = np.arccos(x)
    for arr in (x, w, theta):
        arr.setflags(write=False)
    return x, w, theta


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=32)
def legendre_table(n_theta: int, l_max: int) -> np.ndarray:
    """
    Orthonormal P_l^m at the Gauss nodes for 0 ≤ l ≤ l_max, −l ≤ m ≤ l.

    Uses the forward column recurrence on Q_l^m = P_l^m / sin^m θ, which
    stays O(1); the sin^m factor is applied per order in log space so
    high orders underflow to zero instead of overflowing.
    """
    x, _, theta = gauss_nodes(n_theta)
    log_sin = np.log(np.sin(theta))
    width = 2 * l_max + 1
    table = np.zeros((l_max + 1, width, n_theta))

    q_mm = np.full(n_theta, 1.0 / math.sqrt(4.0 * math.pi))
    for m in range(0, l_max + 1):
        if m > 0:
            q_mm = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * q_mm
        column = {m: q_mm}
        if m + 1 <= l_max:
            column[m + 1] = math.sqrt(2.0 * m + 3.0) * x * q_mm
        for l in range(m + 2, l_max + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            column[l] = a * (x * column[l - 1] - b * column[l - 2])

        sin_m = np.exp(m * log_sin)
        sign = -1.0 if m % 2 else 1.0
        for l, q in column.items():
            p = q * sin_m
            table[l, l_max + m] = p
            if m > 0:
                table[l, l_max - m] = sign * p
    return _freeze(table)


def _raise_order(table: np.ndarray, l_max: int) -> np.ndarray:
    """dP_l^m/dθ = ½[β P_l^{m+1} − α P_l^{m−1}] with the ladder coefficients."""
    out = np.zeros_like(table)
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            alpha = math.sqrt((l + m) * (l - m + 1.0))
            beta = math.sqrt((l - m) * (l + m + 1.0))
            acc = np.zeros(table.shape[-1])
            if m + 1 <= l:
                acc += beta * table[l, l_max + m + 1]
            if m - 1 >= -l:
                acc -= alpha * table[l, l_max + m - 1]
            out[l, l_max + m] = 0.5 * acc
    return out


@lru_cache(maxsize=16)
def legendre_derivatives(n_theta: int, l_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """First and second θ-derivatives of ``legendre_table``."""
    table = legendre_table(n_theta, l_max)
    first = _raise_order(table, l_max)
    second = _raise_order(first, l_max)
    return _freeze(first), _freeze(second)
