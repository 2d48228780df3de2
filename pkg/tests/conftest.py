import math

import numpy as np
import pytest

from piecekit import Piece, PiecewiseFunction, check_constraint

FORMULAS = ["POLY", "LOG", "XLOG", "ISRS", "SQRT", "PLS", "TAIL"]
HALF_INTEGERS = [-0.5, 0.5, 1.5, 2.5]


def random_interval(rng, lo=-2.0, hi=2.0, width=(0.1, 3.0)):
    x1 = rng.uniform(lo, hi)
    return x1, x1 + rng.uniform(*width)


def random_params(rng, name, interval, *, side=None, half_integer=False):
    """Admissible parameters and singular-end flags for ``name``.

    ``side`` picks the anchor position for anchored formulas: ``"left"``,
    ``"right"`` or ``"out"`` (strictly outside the closed interval).
    """
    x1, x2 = interval
    if name == "POLY":
        return [rng.uniform(-1, 1) for _ in range(rng.integers(1, 8))], (False, False)
    if name == "TAIL":
        while True:
            p = [rng.uniform(-3, 3), rng.uniform(-3, 3),
                 rng.uniform(-1, 1), rng.uniform(-1, 1)]
            if check_constraint("TAIL", p, interval) is None:
                return p, (False, False)
    side = side or rng.choice(["left", "right", "out"])
    if side == "left":
        x0 = x1
    elif side == "right":
        x0 = x2
    elif rng.random() < 0.5:
        x0 = x1 - rng.uniform(0.1, 2)
    else:
        x0 = x2 + rng.uniform(0.1, 2)
    flags = (side == "left", side == "right")
    amp = rng.uniform(-2, 2)
    if name == "PLS":
        if half_integer:
            b = float(rng.choice(HALF_INTEGERS))
        else:
            b = rng.uniform(-0.45, 3.0)
            if abs(b) < 1e-3:
                b = 0.5
        return [x0, b, amp], flags
    return [x0, amp], flags


def random_piece(rng, interval, nterms=None, half_integer=False):
    """A piece on ``interval`` with up to three admissible terms."""
    names = ["POLY", "LOG", "XLOG", "ISRS", "SQRT", "PLS", "TAIL"]
    nterms = nterms or int(rng.integers(1, 4))
    terms = []
    left = right = True
    for _ in range(nterms):
        name = str(rng.choice(names))
        side = str(rng.choice(["left", "right", "out", "out"]))
        p, flags = random_params(rng, name, interval, side=side,
                                 half_integer=half_integer)
        terms.append((name, p))
        left &= not flags[0]
        right &= not flags[1]
    return Piece(interval, (left, right), terms=terms)


def random_function(rng, parity="none", npieces=None, lo=None,
                    half_integer=False):
    """Random piecewise function with contiguous or gapped pieces."""
    npieces = npieces or int(rng.integers(1, 4))
    x = (0.0 if parity != "none" else rng.uniform(-3, 0)) if lo is None else lo
    pieces = []
    for _ in range(npieces):
        if rng.random() < 0.3:
            x += rng.uniform(0.05, 0.5)
        w = rng.uniform(0.2, 1.5)
        pieces.append(random_piece(rng, (x, x + w), half_integer=half_integer))
        x += w
    return PiecewiseFunction(parity, pieces)


def rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def dos_singularity():
    from piecekit import LOG
    return PiecewiseFunction("even", Piece((0, 4), (False, True), LOG,
                                           [0, -1 / (2 * math.pi ** 2)]))
