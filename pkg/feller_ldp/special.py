"""Regularized upper incomplete gamma function, evaluated in log space.

Power series for the lower function when z <= a + 1, continued fraction for the
upper function otherwise (the Cephes igam/igamc recurrences). Only the log of the
normalising factor z^a e^{-z} / Gamma(a) is formed, so tails far below the double
precision range keep a finite logarithm.
"""

import math

from scipy.special import gammaln

from feller_ldp.exceptions import NonConvergence, ParameterOutOfRange

TERM_TOLERANCE = 1e-14
MAX_TERMS = 100_000

big = 4.503599627370496e15
biginv = 2.22044604925031308085e-16


def _log_prefactor(a: float, z: float) -> float:
    return a * math.log(z) - z - gammaln(a)


def _lower_series(a: float, z: float) -> float:
    r = a
    c = 1.0
    total = 1.0
    for _ in range(MAX_TERMS):
        r += 1.0
        c *= z / r
        total += c
        if c / total <= TERM_TOLERANCE:
            return total / a
    raise NonConvergence(f"incomplete gamma series did not converge (a={a:g}, z={z:g})")


def _upper_fraction(a: float, z: float) -> float:
    y = 1.0 - a
    w = z + y + 1.0
    c = 0.0
    pkm2, qkm2 = 1.0, z
    pkm1, qkm1 = z + 1.0, w * z
    ans = pkm1 / qkm1
    for _ in range(MAX_TERMS):
        c += 1.0
        y += 1.0
        w += 2.0
        yc = y * c
        pk = pkm1 * w - pkm2 * yc
        qk = qkm1 * w - qkm2 * yc
        if qk != 0:
            r = pk / qk
            change = abs((ans - r) / r)
            ans = r
        else:
            change = 1.0
        pkm2, pkm1 = pkm1, pk
        qkm2, qkm1 = qkm1, qk
        if abs(pk) > big:
            pkm2 *= biginv
            pkm1 *= biginv
            qkm2 *= biginv
            qkm1 *= biginv
        if change <= TERM_TOLERANCE:
            return ans
    raise NonConvergence(f"incomplete gamma continued fraction did not converge (a={a:g}, z={z:g})")


def log_gammainc_upper(a: float, z: float) -> float:
    """log Q(a, z), Q(a, z) = Gamma(a, z) / Gamma(a)."""
    if a <= 0:
        raise ParameterOutOfRange('a', a, 'a > 0')
    if z <= 0:
        return 0.0
    if z <= a + 1.0:
        lower = math.exp(_log_prefactor(a, z)) * _lower_series(a, z)
        return math.log1p(-lower) if lower < 1.0 else -math.inf
    return _log_prefactor(a, z) + math.log(_upper_fraction(a, z))

