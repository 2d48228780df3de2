"""Globally adaptive Gauss-Kronrod (7, 15) quadrature.

This is the slow reference path.  It shares no code with the analytic
transforms and exists to cross-check them (tests, ``piecekit quad``).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

__all__ = ["QuadResult", "integrate", "gk15"]

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-node layout: -x[0..6], 0, +x[6..0]
_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_WK = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[7] = _WG[3]
_WG15[[13, 11, 9]] = _WG[:3]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    subdivisions: int


def gk15(h, a, b):
    """One panel: ``(kronrod, error_estimate)`` for ``int_a^b h``.

    ``h`` takes an array of the 15 interior nodes.
    """
    k, err, _ = _panel(h, a, b)
    return k, err


def _panel(h, a, b):
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    fv = np.asarray(h(c + r * _NODES))
    k = r * np.dot(_WK, fv)
    g = r * np.dot(_WG15, fv)
    mean = k / (2.0 * r) if r else 0.0
    resabs = abs(r) * np.dot(_WK, np.abs(fv))
    resasc = abs(r) * np.dot(_WK, np.abs(fv - mean))
    err = abs(k - g)
    if resasc and err:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(50 * _EPS * resabs, err)
    return k, float(err), float(resabs)


def _lift(g, vectorized):
    if vectorized:
        return lambda x: np.asarray(g(x))
    return lambda x: np.array([g(float(v)) for v in x])


def integrate(g, interval, rtol=1e-10, atol=0.0, *, singular=(False, False),
              limit=10_000, vectorized=False) -> QuadResult:
    """Adaptive integral of ``g`` over the finite ``interval``.

    Args:
        g: real or complex valued callable.  Never evaluated at the
            interval endpoints.
        singular: flags ``(left, right)``.  A flagged end is treated with the
            substitution ``x = end -/+ t**2``, which removes inverse
            square-root singularities and softens weaker ones.
        limit: maximum number of panels.
        vectorized: ``g`` accepts numpy arrays.

    Raises:
        NoConvergence: the panel limit was reached; carries the best value.
    """
    a, b = (float(v) for v in interval)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
        singular = singular[::-1]
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    f = _lift(g, vectorized)

    def substituted(end, direction):
        def h(t):
            x = end + direction * t * t
            keep = x != end  # rounded onto the singular end, where 2t ~ 0
            if keep.all():
                return f(x) * (2.0 * t)
            vals = f(x[keep]) if keep.any() else np.zeros(0)
            out = np.zeros(len(t), dtype=np.result_type(vals, float))
            out[keep] = vals * (2.0 * t[keep])
            return out
        return h

    left, right = substituted(a, 1.0), substituted(b, -1.0)

    panels = []
    sl, sr = singular
    if sl and sr:
        m = 0.5 * (a + b)
        panels += [(left, 0.0, math.sqrt(m - a)), (right, 0.0, math.sqrt(b - m))]
    elif sl:
        panels.append((left, 0.0, math.sqrt(b - a)))
    elif sr:
        panels.append((right, 0.0, math.sqrt(b - a)))
    else:
        panels.append((f, a, b))

    heap = []
    total, errsum, absum = 0.0, 0.0, 0.0
    counter = 0
    for h, lo, hi in panels:
        val, err, ra = _panel(h, lo, hi)
        heapq.heappush(heap, (-err, counter, h, lo, hi, val, ra))
        counter += 1
        total += val
        errsum += err
        absum += ra

    # the roundoff floor caps the attainable accuracy when the result cancels
    while errsum > max(atol, rtol * abs(total), 100 * _EPS * absum):
        if len(heap) >= limit:
            raise NoConvergence(sign * total, errsum, len(heap))
        nerr, _, h, lo, hi, val, ra = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # cannot split further; keep the panel and stop refining it
            raise NoConvergence(sign * total, errsum, len(heap) + 1)
        v1, e1, r1 = _panel(h, lo, mid)
        v2, e2, r2 = _panel(h, mid, hi)
        total += v1 + v2 - val
        errsum += e1 + e2 + nerr
        absum += r1 + r2 - ra
        for v, e, ra, l, r in ((v1, e1, r1, lo, mid), (v2, e2, r2, mid, hi)):
            heapq.heappush(heap, (-e, counter, h, l, r, v, ra))
            counter += 1

    total = sum(item[5] for item in heap)
    errsum = sum(-item[0] for item in heap)
    return QuadResult(sign * total, float(errsum), len(heap))
