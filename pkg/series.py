"""
Truncated power series in t.

Series are 1-D complex coefficient arrays in ascending order, the convention of
numpy.polynomial.polynomial. Products are truncated to a fixed order N.
"""
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P


def truncate(a: Sequence[complex], order: int) -> np.ndarray:
    """Coefficients of a up to t^order, zero-padded."""
    out = np.zeros(order + 1, dtype=complex)
    a = np.asarray(a, dtype=complex)[: order + 1]
    out[: len(a)] = a
    return out


def multiply(a: Sequence[complex], b: Sequence[complex], order: int) -> np.ndarray:
    return truncate(P.polymul(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)), order)


def reciprocal(a: Sequence[complex], order: int) -> np.ndarray:
    """
    Series of 1/a up to t^order.

    Raises:
        ZeroDivisionError: if a(0) == 0
    """
    a = truncate(a, order)
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term has no reciprocal")
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, order + 1):
        out[k] = -np.dot(a[1: k + 1], out[k - 1:: -1][:k]) / a[0]
    return out


def divide(num: Sequence[complex], den: Sequence[complex], order: int) -> np.ndarray:
    """Taylor coefficients of num/den at t = 0 up to t^order."""
    return multiply(num, reciprocal(den, order), order)


def edge_factor(d: complex, order: int) -> np.ndarray:
    """
    Series of (2 + t(1+d)) / (2 + t(1-d)), the per-edge factor of e_t.

    Written as (1 + t(1+d)/2) * sum_k (-(1-d)/2)^k t^k.
    """
    ratio = -(1 - d) / 2
    geometric = ratio ** np.arange(order + 1)
    return multiply([1.0, (1 + d) / 2], geometric, order)


def path_product(steps: Iterable[complex], order: int) -> np.ndarray:
    """Product of edge_factor over the steps of one path, taken in path order."""
    out = truncate([1.0], order)
    for d in steps:
        out = multiply(out, edge_factor(d, order), order)
    return out


def evaluate(coefficients: Sequence[complex], t: complex) -> complex:
    return complex(P.polyval(t, np.asarray(coefficients, dtype=complex)))


def trim(coefficients: Sequence[complex], tol: float = 0.0) -> np.ndarray:
    """Drop trailing coefficients with modulus <= tol (keeps at least one)."""
    c = np.asarray(coefficients, dtype=complex)
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= tol:
        n -= 1
    return c[:n].copy()
