"""Quadrature-free integral transforms of piecewise functions.

A transform ``(K o f)(X) = int f(x) K(x, X) dx`` is evaluated from kernel
primitives ``P(x, X; params)`` with ``dP/dx = F(x; params) K(x, X)``, one per
(kernel, formula) pair, by summing ``P(x2) - P(x1)`` over the pieces.

Two kernels are built in:

``"moment"``
    ``K(x, n) = x**n``.
``"hilbert"``
    ``K(x, z) = 1 / (z - x)``.  For real ``z = y`` the kernel is
    ``1 / (y - x + i0)``: the principal value plus ``-i pi f(y)``.

Further kernels are added with :func:`register_kernel`.
"""

from __future__ import annotations

import cmath
import math
import threading
from collections.abc import Callable
from dataclasses import dataclass

from .catalog import get_formula, moment_primitive, tail_roots
from .core import Parity, PiecewiseFunction, unfold
from .dilog import dilog
from .errors import (EmptyFunction, MissingPrimitive, RegistryFrozen,
                     SingularPoint, UnsupportedKernel)

__all__ = ["KernelPrimitive", "KernelRegistry", "REGISTRY", "register_kernel",
           "transform", "moments", "hilbert", "hilbert_primitive",
           "hilbert_piece"]


@dataclass(frozen=True)
class KernelPrimitive:
    """Closed-form primitive of ``F(x) K(x, X)`` for one formula.

    ``definite(x1, x2, X, params)`` may be supplied when a numerically
    better route than ``primitive(x2) - primitive(x1)`` exists.
    """

    kernel: str
    formula: str
    primitive: Callable
    definite: Callable | None = None

    def integrate(self, x1, x2, X, params):
        if self.definite is not None:
            return self.definite(x1, x2, X, params)
        return self.primitive(x2, X, params) - self.primitive(x1, X, params)


class KernelRegistry:
    """Write-once table of kernel primitives keyed by (kernel, formula).

    Registration is meant to happen during start-up; after :meth:`freeze`
    the table is read-only and safe to share between threads.
    """

    def __init__(self):
        self._table: dict[tuple[str, str], KernelPrimitive] = {}
        self._lock = threading.Lock()
        self._frozen = False

    def register(self, kernel, formula, primitive, definite=None):
        name = get_formula(formula).name
        with self._lock:
            if self._frozen:
                raise RegistryFrozen("kernel registry is frozen")
            key = (kernel, name)
            if key in self._table:
                raise ValueError(f"primitive for {key} already registered")
            self._table[key] = KernelPrimitive(kernel, name, primitive, definite)

    def freeze(self):
        with self._lock:
            self._frozen = True

    @property
    def frozen(self):
        return self._frozen

    def get(self, kernel, formula) -> KernelPrimitive:
        try:
            return self._table[(kernel, formula)]
        except KeyError:
            raise MissingPrimitive(formula, kernel) from None

    def __contains__(self, key):
        return key in self._table

    def kernels(self):
        return sorted({k for k, _ in self._table})


REGISTRY = KernelRegistry()


def register_kernel(kernel, formula, primitive, definite=None, *,
                    registry=REGISTRY):
    registry.register(kernel, formula, primitive, definite)


def _sum_pieces(pieces, kernel, X, registry):
    total = 0.0
    for p in pieces:
        x1, x2 = p.interval
        for t in p.terms:
            total = total + registry.get(kernel, t.formula).integrate(
                x1, x2, X, t.params)
    return total


def transform(f: PiecewiseFunction, kernel: str, X, *, registry=REGISTRY):
    """``int f(x) K(x, X) dx`` over the support of ``f``."""
    return _sum_pieces(unfold(f).pieces, kernel, X, registry)


def moments(f: PiecewiseFunction, n_max: int, *, registry=REGISTRY):
    """``[M_0, ..., M_{n_max}]`` with ``M_n = int x**n f(x) dx``."""
    if not f.pieces:
        raise EmptyFunction("moments of an empty function")
    out = []
    for n in range(n_max + 1):
        if f.parity is Parity.NONE:
            out.append(float(_sum_pieces(f.pieces, "moment", n, registry)))
        elif (n % 2 == 0) == (f.parity is Parity.EVEN):
            out.append(2.0 * float(_sum_pieces(f.pieces, "moment", n, registry)))
        else:
            out.append(0.0)
    return out


# -- Hilbert kernel --------------------------------------------------------

def _logabs(v):
    """``ln|v|`` with the principal-value convention ``ln|0| -> 0``.

    Coincident log singularities of adjacent pieces cancel in the
    principal value, so dropping them keeps the finite part.
    """
    v = abs(v)
    return math.log(v) if v else 0.0


def _plemelj(x1, x2, y, value_at):
    """``-i pi F(y)`` weighted by how much of ``y`` the piece owns."""
    if x1 < y < x2:
        w = 1.0
    elif y == x1 or y == x2:
        w = 0.5
    else:
        return 0j
    return complex(0.0, -math.pi * w * value_at(y))


def _series_length(ratio):
    """Terms of a geometric tail with this ratio (<= 1/2) to reach 1e-17."""
    return int(math.ceil(-39.2 / math.log(ratio))) + 2 if ratio > 0 else 2


def _taylor_shift(c, x0):
    """Coefficients of ``p(x0 + s)`` in powers of ``s``."""
    d = list(c)
    n = len(d)
    for i in range(n):
        for k in range(n - 2, i - 1, -1):
            d[k] += x0 * d[k + 1]
    return d


def _poly_cauchy_moments(zs, h, kmax, real):
    """``I_k = int_{-h}^{h} s**k / (zs - s) ds`` for k = 0..kmax."""
    # m_j = int_{-h}^{h} s**j ds
    def m(j):
        return 2.0 * h ** (j + 1) / (j + 1) if j % 2 == 0 else 0.0

    if abs(zs) >= 2.0 * abs(h):
        nterms = _series_length(abs(h) / abs(zs))
        out = []
        for k in range(kmax + 1):
            total, zpow = 0.0, zs
            for j in range(nterms):
                total += m(k + j) / zpow
                zpow *= zs
            out.append(total)
        return out
    if real:
        i0 = _logabs(zs + h) - _logabs(zs - h)
    else:
        i0 = cmath.log(zs + h) - cmath.log(zs - h)
    out = [i0]
    for k in range(1, kmax + 1):
        out.append(zs * out[-1] - m(k - 1))
    return out


def _poly_primitive_literal(x, z, c):
    """``-z**k ln(z - x) - sum_j z**j x**(k-j)/(k-j)`` summed over the terms.

    Cancels badly for large ``|z|``; kept as the textbook reference.
    """
    z = complex(z)
    total = 0j
    lg = cmath.log(z - x)
    for k, ck in enumerate(c):
        if not ck:
            continue
        acc = -z ** k * lg
        for j in range(k):
            acc -= z ** j * x ** (k - j) / (k - j)
        total += ck * acc
    return total


def _poly_primitive(x, z, c):
    """Primitive normalised to vanish at x = 0 (differs from the literal
    form by a constant)."""
    if x == 0.0:
        return 0j
    if x > 0:
        return _poly_definite(0.0, x, complex(z), c)
    return -_poly_definite(x, 0.0, complex(z), c)


def _poly_definite(x1, x2, z, c):
    z = complex(z)
    real = z.imag == 0.0
    mid, h = 0.5 * (x1 + x2), 0.5 * (x2 - x1)
    d = _taylor_shift(c, mid)
    zs = (z.real - mid) if real else z - mid
    ik = _poly_cauchy_moments(zs, h, len(d) - 1, real)
    total = sum(dk * v for dk, v in zip(d, ik))
    if real:
        y = z.real
        return complex(total) + _plemelj(x1, x2, y, lambda v: get_formula("POLY")(v, c))
    return complex(total)


# Anchored formulas reduce to Q(u, zeta) = int g(u) / (zeta - u) du with
# u = sigma (x - x0) >= 0 and zeta = sigma (z - x0).

def _q_log(u, zeta, real):
    if u == 0.0:
        return 0.0
    lu = math.log(u)
    if real:
        if zeta == 0.0:
            return -0.5 * lu * lu
        r = u / zeta
        return -(lu * _logabs(1.0 - r) + dilog(r).real)
    r = u / zeta
    return -(lu * cmath.log(1.0 - r) + dilog(r))


def _q_isrs(u, zeta, real):
    t = math.sqrt(u)
    if real:
        if zeta == 0.0:
            return 2.0 / t
        if zeta > 0:
            w = math.sqrt(zeta)
            return (_logabs(w + t) - _logabs(w - t)) / w
        a = math.sqrt(-zeta)
        return -2.0 * math.atan(t / a) / a
    w = cmath.sqrt(zeta)
    return 2.0 / w * cmath.atanh(t / w)


def _q_pow(u, zeta, b, real):
    """Half-integer exponent b >= -1/2 by upward recursion."""
    if real and zeta == 0.0:
        return -(u ** b) / b
    q = _q_isrs(u, zeta, real)
    e = -0.5
    while e < b:
        e += 1.0
        q = zeta * q - u ** e / e
    return q


def _q_xlog(u, zeta, real):
    lin = u * math.log(u) - u if u else 0.0
    if real and zeta == 0.0:
        return -lin
    return zeta * _q_log(u, zeta, real) - lin


def _series_g(kind, b):
    """``G_m(u) = int g(u) u**m du`` for the large-|zeta| expansion."""
    if kind == "log":
        def g(u, m):
            if u == 0.0:
                return 0.0
            return u ** (m + 1) * (math.log(u) - 1.0 / (m + 1)) / (m + 1)
    elif kind == "xlog":
        def g(u, m):
            if u == 0.0:
                return 0.0
            return u ** (m + 2) * (math.log(u) - 1.0 / (m + 2)) / (m + 2)
    else:
        def g(u, m):
            return u ** (m + b + 1) / (m + b + 1)
    return g


def _q_series(kind, b, ua, ub, zeta):
    """``Q(ub) - Q(ua)`` as ``sum_m [G_m(ub) - G_m(ua)] / zeta**(m+1)``."""
    g = _series_g(kind, b)
    total, zpow = 0.0, zeta
    for m in range(_series_length(max(ua, ub) / abs(zeta))):
        total += (g(ub, m) - g(ua, m)) / zpow
        zpow *= zeta
    return total


def _half_integer(b):
    return b > -1.0 and (2.0 * b) % 2.0 == 1.0


def _anchored_parts(name, params):
    """(kind, exponent, amplitude) for an anchored formula."""
    if name == "LOG":
        return "log", None, params[1]
    if name == "XLOG":
        return "xlog", None, params[1]
    if name == "ISRS":
        return "pow", -0.5, params[1]
    if name == "SQRT":
        return "pow", 0.5, params[1]
    b = params[1]
    if not _half_integer(b):
        raise UnsupportedKernel(
            f"Hilbert primitive of PLS needs a half-integer exponent, got b = {b!r}")
    return "pow", b, params[2]


def _q(kind, b, u, zeta, real):
    if kind == "log":
        return _q_log(u, zeta, real)
    if kind == "xlog":
        return _q_xlog(u, zeta, real)
    return _q_pow(u, zeta, b, real)


def _anchored_primitive(name):
    def primitive(x, z, params):
        kind, b, amp = _anchored_parts(name, params)
        x0 = params[0]
        sigma = 1.0 if x >= x0 else -1.0
        z = complex(z)
        factor = amp * sigma if kind == "xlog" else amp
        u, zeta = sigma * (x - x0), sigma * (z - x0)
        if abs(zeta) >= 2.0 * u:
            return factor * _q_series(kind, b, 0.0, u, zeta)
        return factor * _q(kind, b, u, zeta, False)
    return primitive


def _anchored_definite(name):
    form = get_formula(name)

    def definite(x1, x2, z, params):
        kind, b, amp = _anchored_parts(name, params)
        x0 = params[0]
        sigma = 1.0 if x0 <= x1 else -1.0
        z = complex(z)
        real = z.imag == 0.0
        zeta = sigma * (z.real - x0) if real else sigma * (z - x0)
        u1, u2 = sigma * (x1 - x0), sigma * (x2 - x0)
        factor = amp * sigma if kind == "xlog" else amp
        if abs(zeta) >= 2.0 * max(u1, u2):
            val = _q_series(kind, b, u1, u2, zeta)
        else:
            val = _q(kind, b, u2, zeta, real) - _q(kind, b, u1, zeta, real)
        val = factor * val
        if real:
            return complex(val) + _plemelj(x1, x2, z.real,
                                           lambda v: form(v, params))
        return complex(val)
    return definite


def _tail_term(x, z, r, c, real):
    """``c / ((x - r)(z - x))`` integrated in x (one partial fraction)."""
    lx = cmath.log(x - r) if r.imag else _logabs(x - r.real)
    if z == r:
        return c / (x - r)
    lz = _logabs(z.real - x) if real else cmath.log(z - x)
    return c / (z - r) * (lx - lz)


def _tail_primitive_at(x, z, params, real):
    p, q, a, b = params
    r1, r2 = tail_roots(p, q)
    if r1 == r2:
        # double real root: (a + b x)/(x - r)**2 = b/(x-r) + (a + b r)/(x-r)**2
        r = r1
        c2 = a + b * r.real
        out = _tail_term(x, z, r, b, real)
        if z == r:
            out += c2 / (2.0 * (x - r) ** 2)
        else:
            out += -c2 / ((z - r) * (x - r)) + _tail_term(x, z, r, c2 / (z - r), real)
        return out
    c1 = (a + b * r1) / (r1 - r2)
    c2 = (a + b * r2) / (r2 - r1)
    return _tail_term(x, z, r1, c1, real) + _tail_term(x, z, r2, c2, real)


def _tail_primitive(x, z, params):
    return complex(_tail_primitive_at(x, complex(z), params, False))


def _tail_definite(x1, x2, z, params):
    z = complex(z)
    real = z.imag == 0.0
    val = _tail_primitive_at(x2, z, params, real) - _tail_primitive_at(x1, z, params, real)
    if real:
        return complex(complex(val).real) + _plemelj(
            x1, x2, z.real, lambda v: get_formula("TAIL")(v, params))
    return complex(val)


def hilbert_primitive(name, x, z, params):
    """``P(x, z)`` with ``dP/dx = F(x) / (z - x)`` (non-real ``z``)."""
    return REGISTRY.get("hilbert", get_formula(name).name).primitive(x, z, params)


def hilbert_piece(name, params, interval, z):
    """``int F(x) / (z - x) dx`` over one interval."""
    x1, x2 = interval
    return REGISTRY.get("hilbert", get_formula(name).name).integrate(x1, x2, z, params)


def _check_real_axis(f: PiecewiseFunction, y: float):
    for p in f.pieces:
        x1, x2 = p.interval
        if (y == x1 and not p.included[0]) or (y == x2 and not p.included[1]):
            raise SingularPoint(y, "excluded endpoint")
        if not x1 <= y <= x2:
            continue
        for t in p.terms:
            form = get_formula(t.formula)
            if form.anchor is not None and form.singular(t.params) \
                    and t.params[form.anchor] == y:
                raise SingularPoint(y, f"{t.formula} anchor")


def hilbert(f: PiecewiseFunction, z, *, registry=REGISTRY) -> complex:
    """``H(z) = int f(x) / (z - x) dx``, no 1/pi prefactor.

    For real ``z`` returns the ``+i0`` limit ``PV int f(x)/(y - x) dx - i pi f(y)``.

    Raises:
        SingularPoint: real ``z`` at an excluded endpoint or at the anchor
            of a singular term.
        UnsupportedKernel: a PLS term with a non-half-integer exponent.
    """
    z = complex(z)
    g = unfold(f)
    if z.imag == 0.0:
        _check_real_axis(g, z.real)
        z = complex(z.real, 0.0)
    return complex(_sum_pieces(g.pieces, "hilbert", z, registry))


def _moment_kernel(name):
    def primitive(x, n, params):
        return moment_primitive(name, params, int(n), x)
    return primitive


def _register_builtins(registry):
    names = ("POLY", "LOG", "XLOG", "ISRS", "SQRT", "PLS", "TAIL")
    for name in names:
        registry.register("moment", name, _moment_kernel(name))
    registry.register("hilbert", "POLY", _poly_primitive, _poly_definite)
    for name in ("LOG", "XLOG", "ISRS", "SQRT", "PLS"):
        registry.register("hilbert", name, _anchored_primitive(name),
                          _anchored_definite(name))
    registry.register("hilbert", "TAIL", _tail_primitive, _tail_definite)


_register_builtins(REGISTRY)
