"""The seven built-in formulas.

Every formula is a parametric elementary function ``F(x; params)`` that can
be used as a term in the rule of a piece.  Besides evaluation, a formula
knows

* which of its parameters enter linearly (amplitude scaling, least squares),
* how its parameters transform under the mirror ``x -> -x``,
* which parameter values are admissible on a given interval,
* a closed-form primitive of ``x**n * F(x)`` (moments).

Singular formulas carry an anchor ``x0`` as their first parameter.  The
anchor must lie on or outside the closed interval of the piece, so that all
primitives stay continuous on the piece.

=======  ===================  ==============================================
name     params               value
=======  ===================  ==============================================
POLY     c0, ..., c(n-1)      sum c_k x**k
LOG      x0, A                A ln|x - x0|
XLOG     x0, A                A (x - x0) ln|x - x0|
ISRS     x0, A                A / sqrt|x - x0|
SQRT     x0, A                A sqrt|x - x0|
PLS      x0, b, A             A |x - x0|**b        (b > -1, b != 0)
TAIL     p, q, a, b           (a + b x) / (p + q x + x**2)
=======  ===================  ==============================================
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .errors import ArityMismatch, UnknownFormula

__all__ = [
    "Formula", "POLY", "LOG", "XLOG", "ISRS", "SQRT", "PLS", "TAIL",
    "FORMULAS", "get_formula", "register_formula", "formula_eval",
    "check_constraint", "moment_primitive", "reflect_params", "scale_params",
]


def _finish(value, like):
    """Return a Python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(value)
    return value


def _xlogx(v, k):
    """Primitive of ``v**k ln|v|``: ``v**(k+1) (ln|v| - 1/(k+1)) / (k+1)``.

    Zero at ``v == 0`` (the continuous limit).
    """
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = v ** (k + 1) * (np.log(np.abs(v)) - 1.0 / (k + 1)) / (k + 1)
    return np.where(v == 0.0, 0.0, out)


def _signed_power_primitive(v, k, b):
    """Primitive of ``v**k |v|**b`` continuous through ``v = 0`` (b > -1)."""
    v = np.asarray(v, dtype=float)
    e = k + b + 1.0
    return np.sign(v) ** (k + 1) * np.abs(v) ** e / e


class Formula:
    """A named parametric elementary function.

    Subclasses override ``_eval``, ``reflect``, ``_check``, ``_moment`` and
    declare ``name``, ``arity`` (``None`` for variadic) and ``linear``
    (indices of linear parameters).
    """

    name: str = ""
    arity: int | None = None
    linear: tuple[int, ...] = ()
    #: index of the anchor x0 among the params, or None
    anchor: int | None = None

    def __repr__(self):
        return self.name

    def validate_arity(self, params):
        params = tuple(float(p) for p in params)
        if self.arity is None:
            if len(params) < 1:
                raise ArityMismatch(f"{self.name} needs at least one parameter")
        elif len(params) != self.arity:
            raise ArityMismatch(f"{self.name} takes {self.arity} parameters, "
                                f"got {len(params)}")
        return params

    def __call__(self, x, params):
        params = self.validate_arity(params)
        xa = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = self._eval(xa, params)
        return _finish(value, x)

    def linear_indices(self, params) -> tuple[int, ...]:
        return self.linear

    def scale(self, params, c):
        """Parameters of ``c * F``."""
        params = list(self.validate_arity(params))
        for i in self.linear_indices(params):
            params[i] = c * params[i]
        return tuple(params)

    def reflect(self, params):
        """Parameters ``p'`` with ``F(-x; p') == F(x; p)``."""
        raise NotImplementedError

    def check(self, interval, params) -> str | None:
        """Return ``None`` when admissible on ``interval``, else a reason."""
        try:
            params = self.validate_arity(params)
        except ArityMismatch as exc:
            return str(exc)
        if not all(math.isfinite(p) for p in params):
            return f"{self.name}: non-finite parameter"
        x1, x2 = interval
        if self.anchor is not None:
            x0 = params[self.anchor]
            if x1 < x0 < x2:
                return (f"{self.name}: anchor x0 = {x0!r} inside the open "
                        f"interval ({x1!r}, {x2!r})")
        return self._check(interval, params)

    def _check(self, interval, params):
        return None

    def singular(self, params) -> bool:
        """True when the formula diverges at its anchor."""
        return False

    def moment(self, params, n, x):
        """Primitive in ``x`` of ``x**n * F(x; params)``."""
        if n < 0 or int(n) != n:
            raise ValueError("moment order must be a nonnegative integer")
        params = self.validate_arity(params)
        xa = np.asarray(x, dtype=float)
        return _finish(self._moment(params, int(n), xa), x)


class _Poly(Formula):
    name = "POLY"

    def _eval(self, x, c):
        out = np.zeros_like(x) + c[-1]
        for ck in reversed(c[:-1]):
            out = out * x + ck
        return out

    def linear_indices(self, params):
        return tuple(range(len(params)))

    def reflect(self, params):
        params = self.validate_arity(params)
        return tuple(-c if k % 2 else c for k, c in enumerate(params))

    def _moment(self, c, n, x):
        out = np.zeros_like(x)
        for k in reversed(range(len(c))):
            out = out * x + c[k] / (n + k + 1)
        return out * x ** (n + 1)


_NEAR_TERMS = 64  # 2**-64 tail at |x/x0| <= 1/2


def _log_taylor(x0, nterms):
    """Coefficients of ln|t - x0| in powers of t."""
    out = [math.log(abs(x0))]
    for j in range(1, nterms):
        out.append(-1.0 / (j * x0 ** j))
    return out


def _power_taylor(x0, b, nterms):
    """Coefficients of |t - x0|**b in powers of t."""
    out = [abs(x0) ** b]
    for j in range(1, nterms):
        out.append(out[-1] * (b - j + 1) / j * (-1.0 / x0))
    return out


class _Anchored(Formula):
    """Formulas of the shape ``A * g(x - x0)`` with the anchor first."""

    anchor = 0
    arity = 2
    linear = (1,)

    def reflect(self, params):
        x0, a = self.validate_arity(params)
        return (-x0, a)

    def _moment(self, params, n, x):
        # normalised to vanish at x = 0, which keeps |M| comparable to
        # |x**(n+1) F| wherever x**n F is small
        x0, amp = params[0], params[-1]
        if x0 == 0.0:
            return amp * self._from_anchor(params, n, x)
        base = self._from_anchor(params, n, np.zeros_like(x))
        far = self._from_anchor(params, n, x) - base
        near = np.abs(x) <= 0.5 * abs(x0)
        if not np.any(near):
            return amp * far
        return amp * np.where(near, self._near_origin(params, n, x), far)

    def _from_anchor(self, params, n, x):
        """Binomial expansion about x0; vanishes at the anchor."""
        x0 = params[0]
        v = x - x0
        out = np.zeros_like(x)
        for k in range(n + 1):
            coeff = math.comb(n, k) * x0 ** (n - k)
            if coeff:
                out = out + coeff * self._shifted(params, k, v)
        return out

    def _near_origin(self, params, n, x, nterms=_NEAR_TERMS):
        """Taylor series of g(x - x0) about 0 for |x| <= |x0|/2."""
        x0 = params[0]
        coeffs = self._taylor(params, nterms)
        out = np.zeros_like(x)
        for j in reversed(range(nterms)):
            out = out * x + coeffs[j] / (n + j + 1)
        return out * x ** (n + 1)

    def _taylor(self, params, nterms):
        raise NotImplementedError


class _Log(_Anchored):
    name = "LOG"

    def _eval(self, x, p):
        return p[1] * np.log(np.abs(x - p[0]))

    def singular(self, params):
        return True

    def _shifted(self, params, k, v):
        return _xlogx(v, k)

    def _taylor(self, params, nterms):
        return _log_taylor(params[0], nterms)


class _XLog(_Anchored):
    name = "XLOG"

    def _eval(self, x, p):
        v = x - p[0]
        return np.where(v == 0.0, 0.0, p[1] * v * np.log(np.abs(v)))

    def reflect(self, params):
        x0, a = self.validate_arity(params)
        return (-x0, -a)

    def _shifted(self, params, k, v):
        return _xlogx(v, k + 1)

    def _taylor(self, params, nterms):
        x0 = params[0]
        log = _log_taylor(x0, nterms)
        return [-x0 * log[0]] + [log[j - 1] - x0 * log[j] for j in range(1, nterms)]


class _Isrs(_Anchored):
    name = "ISRS"

    def _eval(self, x, p):
        return p[1] / np.sqrt(np.abs(x - p[0]))

    def singular(self, params):
        return True

    def _shifted(self, params, k, v):
        return _signed_power_primitive(v, k, -0.5)

    def _taylor(self, params, nterms):
        return _power_taylor(params[0], -0.5, nterms)


class _Sqrt(_Anchored):
    name = "SQRT"

    def _eval(self, x, p):
        return p[1] * np.sqrt(np.abs(x - p[0]))

    def _shifted(self, params, k, v):
        return _signed_power_primitive(v, k, 0.5)

    def _taylor(self, params, nterms):
        return _power_taylor(params[0], 0.5, nterms)


class _Pls(_Anchored):
    name = "PLS"
    arity = 3
    linear = (2,)

    def _eval(self, x, p):
        return p[2] * np.abs(x - p[0]) ** p[1]

    def reflect(self, params):
        x0, b, a = self.validate_arity(params)
        return (-x0, b, a)

    def _check(self, interval, params):
        b = params[1]
        if not b > -1.0:
            return f"PLS: exponent b = {b!r} must exceed -1"
        if b == 0.0:
            return "PLS: exponent b = 0 is excluded (use POLY)"
        return None

    def singular(self, params):
        return params[1] < 0

    def _shifted(self, params, k, v):
        return _signed_power_primitive(v, k, params[1])

    def _taylor(self, params, nterms):
        return _power_taylor(params[0], params[1], nterms)


def tail_roots(p, q):
    """Roots of ``x**2 + q x + p`` as a pair of complex numbers."""
    disc = complex(q * q - 4.0 * p)
    s = disc ** 0.5
    # avoid cancellation in -q +- s
    if q >= 0:
        r1 = (-q - s) / 2.0
    else:
        r1 = (-q + s) / 2.0
    r2 = p / r1 if r1 != 0 else -q - r1
    return r1, r2


def _cauchy_part(x, r, n):
    """``int_0^x t**n / (t - r) dt`` for ``r != 0`` off the path, complex.

    Equals ``r**n (log(1 - u) + sum_{k<=n} u**k / k)`` with ``u = x / r``;
    for ``|u| <= 1/2`` the tail ``-r**n sum_{k>n} u**k / k`` is summed
    instead.  Real ``r`` uses ``log|1 - u|``.
    """
    u = x / r
    real = r.imag == 0.0
    near = np.abs(u) <= 0.5
    out = np.zeros(np.shape(x), dtype=complex)
    if np.any(near):
        un = np.where(near, u, 0.0)
        tail = np.zeros_like(out)
        for k in reversed(range(n + 1, n + 1 + _NEAR_TERMS)):
            tail = tail * un + 1.0 / k
        out = np.where(near, -tail * un ** (n + 1), out)
    if not np.all(near):
        uf = np.where(near, 0.0, u)
        with np.errstate(divide="ignore"):
            log = np.log(np.abs(1.0 - uf)) if real else np.log(1.0 - uf)
        head = np.zeros_like(out)
        for k in reversed(range(1, n + 1)):
            head = head * uf + 1.0 / k
        out = np.where(near, out, log + head * uf)
    return r ** n * out


def _polydiv_quadratic(num, p, q):
    """Divide ``num`` (ascending coeffs) by ``x**2 + q x + p``.

    Returns ``(quotient, (r0, r1))`` with the remainder ``r0 + r1 x``.
    """
    rem = list(num)
    deg = len(rem) - 1
    quot = [0.0] * max(deg - 1, 1)
    for k in range(deg, 1, -1):
        t = rem[k]
        quot[k - 2] = t
        rem[k] = 0.0
        rem[k - 1] -= q * t
        rem[k - 2] -= p * t
    return quot, (rem[0], rem[1] if deg >= 1 else 0.0)


class _Tail(Formula):
    name = "TAIL"
    arity = 4
    linear = (2, 3)

    def _eval(self, x, prm):
        p, q, a, b = prm
        return (a + b * x) / (p + q * x + x * x)

    def reflect(self, params):
        p, q, a, b = self.validate_arity(params)
        return (p, -q, a, -b)

    def _check(self, interval, params):
        p, q = params[0], params[1]
        x1, x2 = interval
        if q * q - 4.0 * p < 0:
            return None
        for r in tail_roots(p, q):
            if x1 <= r.real <= x2:
                return (f"TAIL: denominator root {r.real!r} in "
                        f"[{x1!r}, {x2!r}]")
        return None

    def _moment(self, prm, n, x):
        # partial fractions over the roots; each part vanishes at x = 0 and
        # avoids the r**n sized cancellations of polynomial division
        p, q, a, b = prm
        r1, r2 = tail_roots(p, q)
        if r1 == r2 or r1 == 0 or r2 == 0:
            return self._closed_form(prm, n, x)
        x = np.asarray(x, dtype=float)
        out = 0.0
        for r, s in ((r1, r2), (r2, r1)):
            out = out + (a + b * r) / (r - s) * _cauchy_part(x, r, n)
        return np.real(out)

    def _closed_form(self, prm, n, x):
        p, q, a, b = prm
        num = [0.0] * (n + 2)
        num[n] += a
        num[n + 1] += b
        quot, (r0, r1) = _polydiv_quadratic(num, p, q)
        out = np.zeros_like(x)
        for k in reversed(range(len(quot))):
            out = out * x + quot[k] / (k + 1)
        out = out * x
        d = p + q * x + x * x
        out = out + 0.5 * r1 * np.log(np.abs(d))
        c = r0 - 0.5 * r1 * q
        if c:
            disc4 = 4.0 * p - q * q
            if disc4 > 0:
                s = math.sqrt(disc4)
                j = 2.0 / s * np.arctan((2.0 * x + q) / s)
            elif disc4 < 0:
                rp, rm = (r.real for r in tail_roots(p, q))
                j = np.log(np.abs((x - rp) / (x - rm))) / (rp - rm)
            else:
                j = -1.0 / (x + 0.5 * q)
            out = out + c * j
        return out


POLY = _Poly()
LOG = _Log()
XLOG = _XLog()
ISRS = _Isrs()
SQRT = _Sqrt()
PLS = _Pls()
TAIL = _Tail()

FORMULAS: dict[str, Formula] = {
    f.name: f for f in (POLY, LOG, XLOG, ISRS, SQRT, PLS, TAIL)
}


def register_formula(formula: Formula):
    """Add a user-defined formula to the catalog (names must be new)."""
    if formula.name in FORMULAS:
        raise ValueError(f"formula {formula.name!r} already registered")
    FORMULAS[formula.name] = formula


def get_formula(name) -> Formula:
    if isinstance(name, Formula):
        return name
    try:
        return FORMULAS[name]
    except KeyError:
        raise UnknownFormula(name) from None


def formula_eval(name, params: Sequence[float], x):
    return get_formula(name)(x, params)


def check_constraint(name, params, interval) -> str | None:
    """``None`` if ``params`` are admissible on ``interval``, else the reason."""
    return get_formula(name).check(interval, params)


def moment_primitive(name, params, n, x):
    return get_formula(name).moment(params, n, x)


def reflect_params(name, params):
    return get_formula(name).reflect(params)


def scale_params(name, params, c):
    return get_formula(name).scale(params, c)
