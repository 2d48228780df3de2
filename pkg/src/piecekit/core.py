"""Pieces and piecewise functions.

A :class:`Piece` is a finite interval, a pair of endpoint flags and a rule:
a sum of catalog formulas with their parameters.  A
:class:`PiecewiseFunction` is an ordered collection of non-overlapping
pieces with a parity tag.  Even and odd functions store only the half-axis
``x >= 0`` and are mirrored on evaluation.

Both classes are immutable.

>>> import math
>>> from piecekit import LOG
>>> sing = PiecewiseFunction("even",
...     Piece((0, 4), (False, True), LOG, [0, -1 / (2 * math.pi**2)]))
>>> sing(1.0), sing(-1.0), sing(5.0)
(-0.0, -0.0, 0.0)
>>> sing.support()
(-4.0, 4.0)
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .catalog import Formula, get_formula
from .errors import ConstraintViolation, EmptyFunction, MixedParity, ParseError

__all__ = ["Parity", "Term", "Piece", "PiecewiseFunction", "serialize",
           "deserialize", "constructor_text"]


class Parity(str, Enum):
    NONE = "none"
    EVEN = "even"
    ODD = "odd"

    def __str__(self):
        return self.value


class Term(NamedTuple):
    formula: str
    params: tuple[float, ...]

    def __call__(self, x):
        return get_formula(self.formula)(x, self.params)


def _as_terms(formulas, params) -> tuple[Term, ...]:
    if isinstance(formulas, (str, Formula)):
        formulas, params = [formulas], [params]
    formulas = list(formulas)
    params = list(params)
    if len(formulas) != len(params):
        raise ValueError("need one parameter vector per formula")
    terms = []
    for f, p in zip(formulas, params):
        form = get_formula(f)
        terms.append(Term(form.name, form.validate_arity(p)))
    return tuple(terms)


@dataclass(frozen=True, init=False)
class Piece:
    """An interval with a rule.

    ``Piece((0, 4), (False, True), LOG, [0, a])`` builds a one-term piece;
    pass a list of formulas and a list of parameter vectors for a sum.

    An endpoint flag ``False`` marks a point where the rule may be singular.
    """

    interval: tuple[float, float]
    included: tuple[bool, bool]
    terms: tuple[Term, ...]

    def __init__(self, interval, included=(True, True), formulas=None,
                 params=None, *, terms=None):
        x1, x2 = (float(v) for v in interval)
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise ConstraintViolation(f"piece interval ({x1}, {x2}) must be finite")
        if not x1 < x2:
            raise ConstraintViolation(f"piece interval needs x1 < x2, got ({x1}, {x2})")
        if terms is None:
            terms = _as_terms(formulas, params)
        else:
            terms = tuple(Term(get_formula(t[0]).name,
                               get_formula(t[0]).validate_arity(t[1])) for t in terms)
        if not terms:
            raise ConstraintViolation("a piece needs at least one term")
        for t in terms:
            reason = get_formula(t.formula).check((x1, x2), t.params)
            if reason:
                raise ConstraintViolation(reason)
        object.__setattr__(self, "interval", (x1, x2))
        object.__setattr__(self, "included", (bool(included[0]), bool(included[1])))
        object.__setattr__(self, "terms", terms)

    @property
    def formulas(self):
        return [t.formula for t in self.terms]

    def rule(self, x):
        """Sum of the terms at ``x``, regardless of the interval."""
        values = [t(x) for t in self.terms]
        if np.ndim(x) == 0 and len(values) > 1:
            try:
                # correctly rounded, so the result does not depend on term order
                return math.fsum(values)
            except (ValueError, OverflowError):
                pass  # inf - inf or overflow; plain sum propagates nan/inf
        out = values[0]
        for v in values[1:]:
            out = out + v
        return out

    def contains(self, x) -> bool:
        x1, x2 = self.interval
        return x1 < x < x2

    def scaled(self, c):
        return Piece(self.interval, self.included, terms=[
            (t.formula, get_formula(t.formula).scale(t.params, c))
            for t in self.terms])

    def mirrored(self, sign=1.0):
        """The piece for ``-x`` (interval negated, flags swapped)."""
        x1, x2 = self.interval
        terms = []
        for t in self.terms:
            form = get_formula(t.formula)
            p = form.reflect(t.params)
            if sign != 1.0:
                p = form.scale(p, sign)
            terms.append((t.formula, p))
        return Piece((-x2, -x1), self.included[::-1], terms=terms)


class PiecewiseFunction:
    """An immutable collection of pieces; zero outside its support.

    Args:
        parity: ``"none"``, ``"even"`` or ``"odd"``.
        pieces: a :class:`Piece` or a sequence of them.  Even and odd
            functions must have all pieces on ``x >= 0``.
    """

    __slots__ = ("parity", "pieces", "_edges")

    def __init__(self, parity="none", pieces=()):
        parity = Parity(parity)
        if isinstance(pieces, Piece):
            pieces = [pieces]
        pieces = tuple(sorted(pieces, key=lambda p: p.interval))
        for a, b in zip(pieces, pieces[1:]):
            if b.interval[0] < a.interval[1]:
                raise ConstraintViolation(
                    f"overlapping pieces {a.interval} and {b.interval}")
        if parity is not Parity.NONE and pieces and pieces[0].interval[0] < 0:
            raise ConstraintViolation(
                f"{parity.value} functions store pieces on x >= 0 only")
        object.__setattr__(self, "parity", parity)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_edges", np.array(
            [p.interval for p in pieces], dtype=float).reshape(-1, 2))

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseFunction is immutable")

    def __eq__(self, other):
        if not isinstance(other, PiecewiseFunction):
            return NotImplemented
        return self.parity == other.parity and self.pieces == other.pieces

    def __hash__(self):
        return hash((self.parity, self.pieces))

    def __len__(self):
        return len(self.pieces)

    def __repr__(self):
        n = len(self.pieces)
        kind = "" if self.parity is Parity.NONE else f" {self.parity.value}"
        if n == 0:
            return f"< Piecewise{kind} function with 0 pieces >"
        lo, hi = self.support()
        return (f"< Piecewise{kind} function with {n} piece{'s' * (n != 1)} "
                f"and support [{lo}, {hi}] >")

    def __str__(self):
        return constructor_text(self)

    # -- evaluation -----------------------------------------------------

    def _lookup(self, x):
        """Index of the piece whose rule applies at half-axis point ``x``.

        Interior points and endpoints flagged included win; an excluded
        endpoint falls back to the first piece touching it.  -1 outside.
        """
        fallback = -1
        for i, p in enumerate(self.pieces):
            x1, x2 = p.interval
            if x1 < x < x2:
                return i
            if x == x1 or x == x2:
                if (x == x1 and p.included[0]) or (x == x2 and p.included[1]):
                    return i
                if fallback < 0:
                    fallback = i
        return fallback

    def evaluate(self, x):
        """Value at ``x`` (scalar or array); 0 outside the support."""
        if np.ndim(x) == 0:
            return self._evaluate_scalar(float(x))
        x = np.asarray(x, dtype=float)
        return np.array([self._evaluate_scalar(v) for v in x.ravel()]).reshape(x.shape)

    __call__ = evaluate

    def _evaluate_scalar(self, x):
        if x == 0.0 and self.parity is Parity.ODD:
            return 0.0  # mean of the one-sided limits +-rule(0)
        xh = abs(x) if self.parity is not Parity.NONE else x
        i = self._lookup(xh)
        if i < 0:
            return 0.0
        value = self.pieces[i].rule(xh)
        if self.parity is Parity.ODD and x < 0:
            value = -value
        return value

    def support(self):
        if not self.pieces:
            raise EmptyFunction("empty piecewise function has no support")
        lo = self.pieces[0].interval[0]
        hi = max(p.interval[1] for p in self.pieces)
        if self.parity is not Parity.NONE:
            return (-hi, hi)
        return (lo, hi)

    # -- algebra ---------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, PiecewiseFunction):
            return NotImplemented
        return add(self, other)

    def __mul__(self, c):
        if isinstance(c, PiecewiseFunction):
            return NotImplemented
        return scale(self, c)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        if not isinstance(other, PiecewiseFunction):
            return NotImplemented
        return add(self, scale(other, -1.0))

    def unfold(self):
        return unfold(self)


def _covering(pieces, a, b):
    for p in pieces:
        if p.interval[0] <= a and b <= p.interval[1]:
            return p
    return None


def _flag_at(piece, x, side):
    """Endpoint flag of ``piece`` at ``x``; True where ``x`` is interior."""
    if x == piece.interval[side]:
        return piece.included[side]
    return True


def add(f: PiecewiseFunction, g: PiecewiseFunction) -> PiecewiseFunction:
    """Pointwise sum on the common refinement of both partitions.

    Term lists of covering pieces are concatenated; flags at a breakpoint
    are the AND of the contributing flags.  Parities must match.
    """
    if f.parity != g.parity:
        raise MixedParity(f"cannot add {f.parity.value} and {g.parity.value} "
                          "functions; unfold both first")
    cuts = sorted({x for p in f.pieces + g.pieces for x in p.interval})
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        src = [p for p in (_covering(f.pieces, a, b), _covering(g.pieces, a, b))
               if p is not None]
        if not src:
            continue
        left = all(_flag_at(p, a, 0) for p in src)
        right = all(_flag_at(p, b, 1) for p in src)
        terms = [t for p in src for t in p.terms]
        pieces.append(Piece((a, b), (left, right), terms=terms))
    return PiecewiseFunction(f.parity, pieces)


def scale(f: PiecewiseFunction, c: float) -> PiecewiseFunction:
    c = float(c)
    if not math.isfinite(c):
        raise ValueError("scale factor must be finite")
    return PiecewiseFunction(f.parity, [p.scaled(c) for p in f.pieces])


def unfold(f: PiecewiseFunction) -> PiecewiseFunction:
    """Equivalent parity-none function with the mirrored pieces explicit."""
    if f.parity is Parity.NONE:
        return f
    sign = -1.0 if f.parity is Parity.ODD else 1.0
    mirrored = [p.mirrored(sign) for p in reversed(f.pieces)]
    return PiecewiseFunction(Parity.NONE, mirrored + list(f.pieces))


# -- serialization -------------------------------------------------------

def to_dict(f: PiecewiseFunction) -> dict:
    return {
        "parity": f.parity.value,
        "pieces": [
            {"interval": list(p.interval),
             "included": list(p.included),
             "terms": [{"formula": t.formula, "params": list(t.params)}
                       for t in p.terms]}
            for p in f.pieces],
    }


def serialize(f: PiecewiseFunction, indent=None) -> str:
    """JSON text; floats use the shortest round-trip representation."""
    return json.dumps(to_dict(f), indent=indent, allow_nan=False)


def _expect(cond, message, path):
    if not cond:
        raise ParseError(message, path)


def _number(v, path):
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
            "expected a number", path)
    _expect(math.isfinite(v), "expected a finite number", path)
    return float(v)


def from_dict(doc) -> PiecewiseFunction:
    _expect(isinstance(doc, dict), "expected an object", "$")
    _expect(doc.get("parity") in ("none", "even", "odd"),
            "parity must be 'none', 'even' or 'odd'", "$.parity")
    raw = doc.get("pieces")
    _expect(isinstance(raw, list), "expected a list", "$.pieces")
    pieces = []
    for i, rp in enumerate(raw):
        path = f"$.pieces[{i}]"
        _expect(isinstance(rp, dict), "expected an object", path)
        iv, inc, terms = rp.get("interval"), rp.get("included"), rp.get("terms")
        _expect(isinstance(iv, list) and len(iv) == 2, "expected [x1, x2]",
                path + ".interval")
        _expect(isinstance(inc, list) and len(inc) == 2
                and all(isinstance(b, bool) for b in inc),
                "expected [bool, bool]", path + ".included")
        _expect(isinstance(terms, list), "expected a list", path + ".terms")
        iv = [_number(v, f"{path}.interval[{k}]") for k, v in enumerate(iv)]
        parsed = []
        for j, t in enumerate(terms):
            tp = f"{path}.terms[{j}]"
            _expect(isinstance(t, dict) and isinstance(t.get("formula"), str),
                    "expected {formula, params}", tp)
            params = t.get("params")
            _expect(isinstance(params, list), "expected a list", tp + ".params")
            parsed.append((t["formula"], [_number(v, f"{tp}.params[{k}]")
                                          for k, v in enumerate(params)]))
        pieces.append(Piece(iv, inc, terms=parsed))
    return PiecewiseFunction(doc["parity"], pieces)


def deserialize(text: str) -> PiecewiseFunction:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from None
    return from_dict(doc)


# -- pretty printing ------------------------------------------------------

def _wrap(items: Sequence[str], first: str, indent: str, width=80):
    lines, line = [], first
    for k, item in enumerate(items):
        item = item + ("," if k < len(items) - 1 else "")
        if len(line) + len(item) + 1 > width and line.strip():
            lines.append(line.rstrip())
            line = indent
        elif line and not line.endswith(("[", " ")):
            line += " "
        line += item
    lines.append(line)
    return lines


def constructor_text(f: PiecewiseFunction) -> str:
    """Human-readable constructor-like listing of ``f``."""
    out = [f"PiecewiseFunction(:{f.parity.value}, ["]
    for p in f.pieces:
        x1, x2 = p.interval
        flags = ", ".join(str(b).lower() for b in p.included)
        names = [t.formula for t in p.terms]
        head = f"    Piece(({x1!r}, {x2!r}), ({flags}), "
        if len(names) == 1:
            head += f"{names[0]},"
            nums = [f"{v:.15e}" for v in p.terms[0].params]
            nums[0] = "[" + nums[0]
            nums[-1] = nums[-1] + "])"
            out.append(head)
            out.extend(_wrap(nums, "        ", "        "))
        else:
            head += "[" + ", ".join(names) + "],"
            out.append(head)
            items = []
            for j, t in enumerate(p.terms):
                nums = [f"{v:.15e}" for v in t.params]
                nums[0] = ("[[" if j == 0 else "[") + nums[0]
                nums[-1] = nums[-1] + ("]])" if j == len(p.terms) - 1 else "]")
                items.extend(nums)
            out.extend(_wrap(items, "        ", "        "))
    out.append("])")
    return "\n".join(out)
