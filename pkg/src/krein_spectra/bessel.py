"""Bessel zeros by power series and bisection.

Used as the analytic reference for the clamped-disk buckling spectrum,
whose eigenvalues are ``(j_{m,s} / R)^2`` for ``m >= 1`` with multiplicity 2
when ``m >= 2``.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext

_DIGITS = 60


def bessel_j(m: int, x: float) -> float:
    """J_m(x) from its power series, summed in 60-digit decimal arithmetic.

    The extra digits absorb the cancellation between terms, which in double
    precision would cost about ``x / ln(10)`` digits.
    """
    if x == 0:
        return 1.0 if m == 0 else 0.0
    with localcontext() as ctx:
        ctx.prec = _DIGITS
        half = Decimal(repr(float(x))) / 2
        term = half**m / math.factorial(m)
        total = term
        q = -half * half
        eps = Decimal(10) ** (-_DIGITS + 5)
        k = 0
        while True:
            k += 1
            term = term * q / (k * (k + m))
            total += term
            if k > half and abs(term) <= eps * max(abs(total), eps):
                return float(total)


def bessel_zeros(m: int, count: int, step: float = 0.05, xtol: float = 1e-14) -> list:
    """First ``count`` positive zeros of J_m, bracketed on a grid then bisected."""
    zeros = []
    a = max(step, 1e-3)
    fa = bessel_j(m, a)
    while len(zeros) < count:
        b = a + step
        fb = bessel_j(m, b)
        if fa == 0.0:
            zeros.append(a)
        elif fa * fb < 0:
            lo, hi, flo = a, b, fa
            while hi - lo > xtol * hi:
                mid = 0.5 * (lo + hi)
                fm = bessel_j(m, mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            zeros.append(0.5 * (lo + hi))
        a, fa = b, fb
        if a > 40.0:
            raise ValueError("series evaluation is only trusted below x = 40")
    return zeros


def disk_buckling_eigenvalues(radius: float, count: int) -> list:
    """The ``count`` smallest clamped-disk buckling eigenvalues, with multiplicity."""
    per_order = count // 2 + 2
    vals = []
    m = 1
    while True:
        zs = bessel_zeros(m, per_order)
        if (zs[0] / radius) ** 2 > (sorted(vals)[count - 1] if len(vals) >= count else math.inf):
            break
        mult = 1 if m == 1 else 2
        for z in zs:
            vals.extend([(z / radius) ** 2] * mult)
        m += 1
    return sorted(vals)[:count]
