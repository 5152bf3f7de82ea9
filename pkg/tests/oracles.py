"""Independent reference computations used by the tests."""

import mpmath
import numpy as np


def det(m):
    m = [list(r) for r in m]
    n = len(m)
    if n == 1:
        return m[0][0]
    return sum((-1) ** j * m[0][j] * det([row[:j] + row[j + 1 :] for row in m[1:]]) for j in range(n))


def cofactor_inverse(m):
    """Adjugate / determinant, by Laplace expansion."""
    m = [list(map(complex, r)) for r in np.asarray(m)]
    n = len(m)
    d = det(m)
    inv = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(m) if k != i]
            inv[j, i] = (-1) ** (i + j) * (det(minor) if minor else 1.0) / d
    return inv


def chi2_sum_power_quantile(n, eps, dps=30):
    """x with P(chi2_{2n}/(2n) > x) = eps, by bisection on the regularized upper incomplete gamma."""
    with mpmath.workdps(dps):
        lo, hi = mpmath.mpf(0), mpmath.mpf(10 * n + 100)
        for _ in range(200):
            mid = (lo + hi) / 2
            if mpmath.gammainc(n, mid / 2, mpmath.inf, regularized=True) > eps:
                lo = mid
            else:
                hi = mid
        return float(lo / (2 * n))


def equal_cap_bisection(x, p_inc, iters=200):
    mag = np.abs(np.asarray(x))
    lo, hi = 0.0, float(mag.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(np.minimum(mag, mid) ** 2) > p_inc:
            hi = mid
        else:
            lo = mid
    return lo
