"""Bessel functions of the first kind and their principal-branch inverses.

Small arguments use the ascending power series directly. Larger arguments
use Miller's backward recurrence normalised with
``J_0 + 2 (J_2 + J_4 + ...) = 1``, which stays accurate where the series
suffers cancellation.
"""
from __future__ import annotations

import math

from .errors import DomainError, UnsatisfiableCalibration

Z_MAX = 20.0
SERIES_LIMIT = 6.0

#: first maximum of J_1 and its value; the principal (monotone) branch is [0, J1_ARGMAX]
J1_ARGMAX = 1.8411837813406593
J1_MAX = 0.5818652242815963
#: first zero of J_0
J0_FIRST_ZERO = 2.404825557695773


def _series(n: int, z: float) -> float:
    half = 0.5 * z
    term = half**n / math.factorial(n)
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if abs(term) <= 1e-17 * abs(total) or k > 200:
            return total


def _miller(n: int, z: float) -> float:
    start = 2 * ((max(n, int(z)) + 15 + int(math.sqrt(40 * max(n, z)))) // 2)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    wanted = 0.0
    for k in range(start, 0, -1):
        j_prev = 2 * k / z * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
            wanted *= 1e-250
        if k - 1 == n:
            wanted = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j_cur
    norm += j_cur  # k - 1 == 0 term
    if n == 0:
        wanted = j_cur
    return wanted / norm


def bessel_j(order: int, z: float) -> float:
    """``J_order(z)`` for integer ``order >= 0`` and ``|z| <= 20``."""
    if int(order) != order or order < 0:
        raise DomainError(f"order must be a non-negative integer, got {order!r}")
    order = int(order)
    z = float(z)
    if not abs(z) <= Z_MAX:
        raise DomainError(f"|z| must be <= {Z_MAX}, got {z!r}")
    sign = -1.0 if (z < 0 and order % 2) else 1.0
    z = abs(z)
    if z == 0.0:
        return 1.0 if order == 0 else 0.0
    if z <= SERIES_LIMIT:
        return sign * _series(order, z)
    return sign * _miller(order, z)


def invert_j1(target: float, tol: float = 1e-13) -> float:
    """Solve ``J_1(f) = target`` for ``f`` on ``[0, J1_ARGMAX]`` by bisection."""
    target = float(target)
    if not 0.0 <= target <= J1_MAX:
        raise UnsatisfiableCalibration(
            f"J_1 target {target!r} outside principal-branch range [0, {J1_MAX}]"
        )
    if target == 0.0:
        return 0.0
    lo, hi = 0.0, J1_ARGMAX
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bessel_j(1, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
