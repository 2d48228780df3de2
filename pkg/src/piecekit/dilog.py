"""Principal-branch complex dilogarithm ``Li2(w) = -int_0^w ln(1 - t)/t dt``."""

import cmath
import math
from fractions import Fraction

__all__ = ["dilog"]

_PI2_6 = math.pi ** 2 / 6.0


def _bernoulli(n):
    """B_0 .. B_n with B_1 = -1/2 (Akiyama-Tanigawa)."""
    out = []
    a = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    out[1] = -out[1]
    return out


def _series_coefficients(nterms=40):
    # Li2(w) = sum_n B_n u^(n+1) / (n+1)!,  u = -ln(1 - w)
    bern = _bernoulli(nterms)
    coeffs = []
    fact = 1
    for n, b in enumerate(bern):
        fact *= n + 1
        if b:
            coeffs.append((n + 1, float(b / fact)))
    return coeffs


_BERNOULLI_SERIES = _series_coefficients()


def _plain_series(w):
    total, term, k = 0j, w, 1
    while True:
        add = term / (k * k)
        total += add
        if abs(add) <= 1e-17 * abs(total):
            return total
        k += 1
        term *= w


def _bernoulli_series(w):
    u = -cmath.log(1.0 - w)
    u2 = u * u
    total = u - 0.25 * u2
    power = u
    for p, c in _BERNOULLI_SERIES:
        if p < 3:
            continue
        power *= u2
        term = c * power
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def dilog(w) -> complex:
    """Complex dilogarithm with the cut on ``[1, inf)``.

    On the cut the side is chosen by the sign of ``w.imag`` (signed zero
    included), so ``dilog(complex(2, 0.0))`` is the limit from above.
    """
    w = complex(w)
    if w == 0:
        return 0j
    if w == 1:
        return complex(_PI2_6)
    if abs(w) > 1.0:
        # inversion: Li2(w) + Li2(1/w) = -pi^2/6 - ln(-w)^2/2
        lw = cmath.log(-w)
        return -_PI2_6 - 0.5 * lw * lw - dilog(1.0 / w)
    if w.real > 0.5:
        # reflection: Li2(w) + Li2(1-w) = pi^2/6 - ln(w) ln(1-w)
        one_minus = 1.0 - w
        return _PI2_6 - cmath.log(w) * cmath.log(one_minus) - _dilog_disk(one_minus)
    return _dilog_disk(w)


def _dilog_disk(w):
    """|w| <= 1 and Re w <= 1/2 (or the reflected image of such a point)."""
    if w == 0:
        return 0j
    if abs(w) <= 0.5:
        return _plain_series(w)
    return _bernoulli_series(w)
