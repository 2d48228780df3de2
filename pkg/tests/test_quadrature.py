import cmath
import math

import numpy as np
import pytest

from piecekit import NoConvergence, integrate
from piecekit.quadrature import gk15


def test_polynomial_is_exact_on_one_panel(rng):
    for deg in range(11):
        c = rng.uniform(-1, 1, deg + 1)
        exact = sum(ck / (k + 1) for k, ck in enumerate(c))
        val, _ = gk15(lambda x: np.polynomial.polynomial.polyval(x, c), 0.0, 1.0)
        assert abs(val - exact) <= 1e-14 * max(1.0, abs(exact))


def test_examples():
    r = integrate(lambda x: x * x, (0, 1), vectorized=True)
    assert abs(r.value - 1 / 3) < 1e-14
    r = integrate(np.log, (0, 1), singular=(True, False), vectorized=True)
    assert abs(r.value + 1) < 1e-10
    z = 2j
    r = integrate(lambda x: 1 / (z - x), (-1, 1), rtol=1e-13, vectorized=True)
    ref = cmath.log((z + 1) / (z - 1))
    assert abs(r.value - ref) / abs(ref) < 1e-10


def test_result_fields():
    r = integrate(math.sin, (0, math.pi))
    assert r.error >= 0
    assert r.subdivisions >= 1
    assert r.value == pytest.approx(2.0, rel=1e-12)


def test_reversed_and_empty_interval():
    assert integrate(math.exp, (1, 0)).value == pytest.approx(-(math.e - 1), rel=1e-12)
    assert integrate(math.exp, (1, 1)).value == 0.0


def test_inverse_square_root_both_ends():
    g = lambda x: 1 / np.sqrt(x * (1 - x))
    r = integrate(g, (0, 1), singular=(True, True), rtol=1e-12, vectorized=True)
    assert abs(r.value - math.pi) < 1e-11


def test_endpoints_are_never_sampled():
    seen = []

    def g(x):
        seen.append(x)
        return 1.0 / math.sqrt(x)

    integrate(g, (0, 1), rtol=1e-6, singular=(True, False))
    assert min(seen) > 0


def test_no_convergence_carries_best_value():
    with pytest.raises(NoConvergence) as exc:
        integrate(lambda x: np.sin(1 / x), (1e-6, 1), rtol=1e-14, limit=20,
                  vectorized=True)
    assert math.isfinite(exc.value.value)
    assert exc.value.subdivisions >= 20
