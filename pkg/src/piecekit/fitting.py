"""Adaptive piecewise fitting.

On each interval the target is fitted by linear least squares with a design
made of the candidate formulas (nonlinear parameters anchored by policy, the
polynomial degree escalated from 3 up to ``max_poly_degree``).  A fit is
accepted when its deviation at a set of validation points, half of them
random, half midpoints between fit nodes, stays below
``atol + rtol * S``, where ``S`` is the largest ``|target|`` observed on the
interval.  Otherwise the interval is bisected.

The target is only ever sampled strictly inside the interval.  Subintervals
are processed sequentially in interval order; the random validation points
of a subinterval depend only on the seed and the subinterval's position in
the bisection tree, so the result is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import qr, solve_triangular

from .catalog import Formula, get_formula
from .core import Parity, Piece, PiecewiseFunction, Term
from .errors import FitDidNotConverge, RankDeficient, TargetNotFinite

__all__ = ["Candidate", "FitConfig", "FitReport", "PieceSummary",
           "piecewisefit", "fit_interval", "chebyshev_nodes"]

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class Candidate:
    """A formula template for fitting.

    Args:
        formula: catalog name.
        anchor: for anchored formulas, ``"left"`` or ``"right"`` (endpoint
            of the whole fitted interval) or a fixed value of ``x0``.
        fixed: remaining nonlinear parameters: ``(b,)`` for PLS,
            ``(p, q)`` for TAIL.
    """

    formula: str
    anchor: str | float | None = None
    fixed: tuple[float, ...] = ()

    @classmethod
    def parse(cls, spec) -> Candidate:
        """``"POLY"``, ``"LOG@left"``, ``"ISRS@0.5"``, ``"PLS@right:0.25"``,
        ``"TAIL:1:0"``."""
        if isinstance(spec, Candidate):
            return spec
        if isinstance(spec, Formula):
            return cls(spec.name)
        head, *rest = str(spec).strip().split(":")
        name, _, anchor = head.partition("@")
        name = get_formula(name.strip().upper()).name
        fixed = tuple(float(v) for v in rest)
        if anchor:
            anchor = anchor.strip().lower()
            if anchor not in ("left", "right"):
                anchor = float(anchor)
        else:
            anchor = None
        return cls(name, anchor, fixed)

    def label(self):
        s = self.formula
        if self.anchor is not None:
            s += f"@{self.anchor}"
        for v in self.fixed:
            s += f":{v!r}"
        return s

    def template(self, interval):
        """Parameter vector with nonlinear slots resolved, linear slots 0."""
        form = get_formula(self.formula)
        if form.name == "POLY":
            return None
        if form.arity is None:
            raise ValueError(f"cannot fit variadic formula {form.name}")
        params = [0.0] * form.arity
        nonlinear = [i for i in range(form.arity) if i not in form.linear]
        if form.anchor is not None:
            if self.anchor is None:
                raise ValueError(f"{form.name} candidate needs an anchor")
            x0 = {"left": interval[0], "right": interval[1]}.get(self.anchor, self.anchor)
            params[form.anchor] = float(x0)
            nonlinear.remove(form.anchor)
        if len(self.fixed) != len(nonlinear):
            raise ValueError(f"{form.name} candidate needs {len(nonlinear)} "
                             f"fixed parameter(s), got {len(self.fixed)}")
        for i, v in zip(nonlinear, self.fixed):
            params[i] = v
        return tuple(params)


@dataclass(frozen=True)
class FitConfig:
    rtol: float = 1e-8
    atol: float = 0.0
    candidates: tuple = ("POLY",)
    parity: str = "none"
    max_poly_degree: int = 12
    min_poly_degree: int = 3
    fit_oversample: int = 8
    validation_points: int = 64
    min_width: float | None = None  # default 1e-6 * interval width
    max_depth: int = 40
    seed: int = 0

    def __post_init__(self):
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        if self.atol < 0:
            raise ValueError("atol must be nonnegative")
        if self.max_poly_degree < 0:
            raise ValueError("max_poly_degree must be >= 0")
        if self.min_width is not None and not self.min_width > 0:
            raise ValueError("min_width must be positive")


@dataclass
class PieceSummary:
    interval: tuple[float, float]
    degree: int | None
    terms: list[str]
    error: float
    bound: float
    scale: float


@dataclass
class FitReport:
    pieces_produced: int = 0
    max_observed_error: float = 0.0
    evaluations_of_target: int = 0
    pieces: list[PieceSummary] = field(default_factory=list)

    def summary(self):
        lines = [f"pieces: {self.pieces_produced}",
                 f"max observed error: {self.max_observed_error:.3e}",
                 f"target evaluations: {self.evaluations_of_target}"]
        for s in self.pieces:
            deg = "-" if s.degree is None else s.degree
            lines.append(f"  [{s.interval[0]!r}, {s.interval[1]!r}] "
                         f"degree {deg} terms {'+'.join(s.terms)} "
                         f"error {s.error:.3e} (bound {s.bound:.3e})")
        return "\n".join(lines)


def chebyshev_nodes(n, interval):
    """First-kind Chebyshev nodes on the open interval, increasing."""
    a, b = interval
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    k = np.arange(n)
    return c - h * np.cos(np.pi * (k + 0.5) / n)


class _Target:
    """Caching, counting, finiteness-checking wrapper of the user target."""

    def __init__(self, fn):
        self.fn = fn
        self.cache = {}
        self.calls = 0

    def __call__(self, xs):
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            x = float(x)
            v = self.cache.get(x)
            if v is None:
                v = float(self.fn(x))
                self.calls += 1
                if not math.isfinite(v):
                    raise TargetNotFinite(x, v)
                self.cache[x] = v
            out[i] = v
        return out


def _columns(nodes, interval, templates, degree):
    """Design columns and their labels (polynomial in the scaled variable)."""
    a, b = interval
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    cols, labels = [], []
    if degree is not None:
        t = (nodes - c) / h
        for k in range(degree + 1):
            cols.append(t ** k)
            labels.append(f"POLY x^{k}")
    for name, tmpl in templates:
        form = get_formula(name)
        for i in form.linear_indices(tmpl):
            p = list(tmpl)
            p[i] = 1.0
            cols.append(np.asarray(form(nodes, p), dtype=float))
            labels.append(f"{name} param {i}")
    return np.column_stack(cols), labels


def _least_squares(design, values, labels):
    norms = np.max(np.abs(design), axis=0)
    for j, nrm in enumerate(norms):
        if not nrm > 0 or not np.isfinite(nrm):
            raise RankDeficient(j, labels[j])
    scaled = design / norms
    q, r, perm = qr(scaled, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    for k in range(len(diag)):
        if diag[k] <= _RANK_TOL * diag[0]:
            raise RankDeficient(int(perm[k]), labels[perm[k]])
    coef_p = solve_triangular(r, q.T @ values)
    coef = np.empty_like(coef_p)
    coef[perm] = coef_p
    return coef / norms


def _to_terms(coef, interval, templates, degree):
    terms = []
    pos = 0
    if degree is not None:
        a, b = interval
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        scaled = coef[:degree + 1] / h ** np.arange(degree + 1)
        pos = degree + 1
        x_coeffs = _compose_shift(scaled, -c)
        terms.append(Term("POLY", tuple(float(v) for v in x_coeffs)))
    for name, tmpl in templates:
        form = get_formula(name)
        p = list(tmpl)
        for i in form.linear_indices(tmpl):
            p[i] = float(coef[pos])
            pos += 1
        terms.append(Term(name, tuple(p)))
    return terms


def _compose_shift(coeffs, shift):
    """Coefficients in x of ``sum coeffs[k] (x + shift)**k`` (Horner)."""
    n = len(coeffs)
    out = np.zeros(n)
    out[0] = coeffs[-1]
    for ck in coeffs[-2::-1]:
        nxt = np.zeros(n)
        nxt[1:] = out[:-1]
        nxt += shift * out
        nxt[0] += ck
        out = nxt
    return out


def _solve(target_values, nodes, interval, templates, degree):
    design, labels = _columns(nodes, interval, templates, degree)
    coef = _least_squares(design, target_values, labels)
    return _to_terms(coef, interval, templates, degree)


def _rule(terms, x):
    out = 0.0
    for t in terms:
        out = out + get_formula(t.formula)(x, t.params)
    return out


def fit_interval(target, interval, candidates, degree=None, *,
                 anchor_interval=None, oversample=8):
    """Single least-squares solve on Chebyshev nodes.

    Args:
        target: callable ``float -> float``.
        candidates: candidate templates; a ``"POLY"`` entry contributes
            the columns ``x**0 .. x**degree``.
        degree: polynomial degree (required when POLY is a candidate).
        anchor_interval: interval against which ``left``/``right`` anchors
            are resolved (defaults to ``interval``).

    Returns:
        ``(terms, residual)``: the fitted terms and the maximum absolute
        deviation at the fit nodes.

    Raises:
        RankDeficient: the design lost rank (e.g. duplicate candidates).
    """
    cands = [Candidate.parse(c) for c in candidates]
    anchor_interval = anchor_interval or interval
    has_poly = any(c.formula == "POLY" for c in cands)
    if has_poly and degree is None:
        raise ValueError("degree is required with a POLY candidate")
    if not has_poly:
        degree = None
    templates = [(c.formula, c.template(anchor_interval)) for c in cands
                 if c.formula != "POLY"]
    if sum(c.formula == "POLY" for c in cands) > 1:
        raise RankDeficient(0, "duplicate POLY candidate")
    ncols = (0 if degree is None else degree + 1) + sum(
        len(get_formula(n).linear_indices(t)) for n, t in templates)
    nodes = chebyshev_nodes(ncols + oversample, interval)
    tv = _Target(target)(nodes)
    terms = _solve(tv, nodes, interval, templates, degree)
    residual = float(np.max(np.abs(_rule(terms, nodes) - tv)))
    return terms, residual


def _trim(terms, interval, check):
    """Drop trailing polynomial coefficients as long as ``check`` passes."""
    if not terms or terms[0].formula != "POLY":
        return terms
    c = list(terms[0].params)
    best = terms
    while len(c) > 1:
        c = c[:-1]
        trial = [Term("POLY", tuple(c))] + list(terms[1:])
        if not check(trial):
            break
        best = trial
    return best


def piecewisefit(target, interval, candidates=("POLY",), *, config=None,
                 **options):
    """Fit a :class:`PiecewiseFunction` to ``target`` on ``interval``.

    Args:
        target: callable ``float -> float``; may be called from the fitting
            loop only, never at the interval endpoints.
        interval: ``(a, b)``, finite; ``a >= 0`` for even/odd parity.
        candidates: formula templates (:class:`Candidate`, names such as
            ``"POLY"`` or ``"LOG@left"``, or catalog formulas).
        config: a :class:`FitConfig`; keyword ``options`` override its
            fields (``rtol``, ``parity``, ``seed``...).

    Returns:
        ``(f, report)``.

    Raises:
        FitDidNotConverge: subdivision limits hit; carries the partial fit.
        TargetNotFinite: the target returned inf/nan at a sample.
    """
    config = replace(config or FitConfig(), **options)
    a, b = (float(v) for v in interval)
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ValueError(f"invalid interval ({a}, {b})")
    parity = Parity(config.parity)
    if parity is not Parity.NONE and a < 0:
        raise ValueError(f"{parity.value} fit needs an interval on x >= 0")

    cands = [Candidate.parse(c) for c in candidates]
    if sum(c.formula == "POLY" for c in cands) > 1:
        raise RankDeficient(0, "duplicate POLY candidate")
    has_poly = any(c.formula == "POLY" for c in cands)
    templates = [(c.formula, c.template((a, b))) for c in cands
                 if c.formula != "POLY"]
    n_other = sum(len(get_formula(n).linear_indices(t)) for n, t in templates)
    singular_anchors = {t[get_formula(n).anchor] for n, t in templates
                        if get_formula(n).anchor is not None
                        and get_formula(n).singular(t)}
    if has_poly:
        dmax = config.max_poly_degree
        degrees = list(range(min(config.min_poly_degree, dmax), dmax + 1))
    else:
        degrees = [None]
    min_width = config.min_width or 1e-6 * (b - a)
    seed = int(config.seed) & 0xFFFFFFFFFFFFFFFF
    fn = _Target(target)
    report = FitReport()
    pieces, failures = [], []

    def attempt(lo, hi, depth, index):
        rng = np.random.default_rng(np.random.SeedSequence([seed, depth, index]))
        nval = config.validation_points
        rand = lo + (hi - lo) * rng.random(nval)
        rand = rand[(rand > lo) & (rand < hi)]
        best = None
        for d in degrees:
            ncols = (0 if d is None else d + 1) + n_other
            nodes = chebyshev_nodes(ncols + config.fit_oversample, (lo, hi))
            tv = fn(nodes)
            terms = _solve(tv, nodes, (lo, hi), templates, d)
            mids = 0.5 * (nodes[1:] + nodes[:-1])
            n_mid = min(nval // 2, len(mids))
            mids = mids[np.round(np.linspace(0, len(mids) - 1, n_mid)).astype(int)]
            val = np.concatenate([mids, rand[:nval - n_mid]])
            vv = fn(val)
            scale = float(max(np.max(np.abs(tv)), np.max(np.abs(vv))))
            bound = config.atol + config.rtol * scale

            def error(ts):
                return float(np.max(np.abs(_rule(ts, val) - vv)))

            err = error(terms)
            if best is None or err / (bound or 1.0) < best[1] / (best[2] or 1.0):
                best = (terms, err, bound, scale, d)
            if err <= bound:
                terms = _trim(terms, (lo, hi), lambda ts: error(ts) <= bound)
                return True, (terms, error(terms), bound, scale, d)
        return False, best

    def emit(lo, hi, result):
        terms, err, bound, scale, d = result
        flags = (lo not in singular_anchors, hi not in singular_anchors)
        pieces.append(Piece((lo, hi), flags, terms=terms))
        degree = len(terms[0].params) - 1 if d is not None else None
        report.pieces.append(PieceSummary((lo, hi), degree,
                                          [t.formula for t in terms],
                                          err, bound, scale))

    def recurse(lo, hi, depth, index):
        ok, result = attempt(lo, hi, depth, index)
        if ok:
            emit(lo, hi, result)
            return
        mid = 0.5 * (lo + hi)
        if depth >= config.max_depth or (hi - lo) / 2 < min_width \
                or not lo < mid < hi:
            emit(lo, hi, result)
            failures.append(((lo, hi), result[1], result[2]))
            return
        recurse(lo, mid, depth + 1, 2 * index)
        recurse(mid, hi, depth + 1, 2 * index + 1)

    recurse(a, b, 0, 0)
    f = PiecewiseFunction(parity, pieces)
    report.pieces_produced = len(pieces)
    report.max_observed_error = max(s.error for s in report.pieces)
    report.evaluations_of_target = fn.calls
    if failures:
        worst = max(failures, key=lambda r: r[1] / (r[2] or 1.0))
        raise FitDidNotConverge(worst[0], worst[1], partial=f, report=report)
    return f, report
