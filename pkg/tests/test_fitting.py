import math

import numpy as np
import pytest

from piecekit import (
    Candidate, FitConfig, FitDidNotConverge, Piece, PiecewiseFunction,
    RankDeficient, TargetNotFinite, fit_interval, piecewisefit, serialize,
)
from piecekit.dos import LOG_AMPLITUDE, square_lattice_dos
from piecekit.fitting import chebyshev_nodes


def dos_residual(e):
    return square_lattice_dos(e) - LOG_AMPLITUDE * math.log(abs(e))


def padded(params, n):
    return np.pad(np.asarray(params, dtype=float), (0, n - len(params)))


def test_candidate_parsing():
    assert Candidate.parse("POLY") == Candidate("POLY")
    c = Candidate.parse("LOG@left")
    assert (c.formula, c.anchor) == ("LOG", "left")
    c = Candidate.parse("PLS@right:0.25")
    assert c.template((0, 2)) == (2.0, 0.25, 0.0)
    assert Candidate.parse("TAIL:1:0").template((0, 1))[:2] == (1.0, 0.0)
    with pytest.raises(ValueError):
        Candidate.parse("LOG@middle")


def test_chebyshev_nodes_are_interior_and_increasing():
    x = chebyshev_nodes(17, (0, 4))
    assert np.all(np.diff(x) > 0)
    assert 0 < x[0] and x[-1] < 4


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(rtol=0)
    with pytest.raises(ValueError):
        FitConfig(atol=-1)
    with pytest.raises(ValueError):
        FitConfig(min_width=0)
    with pytest.raises(ValueError):
        FitConfig(max_poly_degree=-1)


def test_fit_interval_examples():
    terms, _ = fit_interval(lambda x: 3 * math.log(abs(x)), (0, 1), ["LOG@left"])
    assert terms[0].params[0] == 0.0
    assert abs(terms[0].params[1] - 3) < 1e-12
    terms, res = fit_interval(lambda x: x * x, (0, 1), ["POLY"], 2)
    assert res <= 1e-13
    np.testing.assert_allclose(terms[0].params, [0, 0, 1], atol=1e-13)


def test_duplicate_candidates_are_rank_deficient():
    with pytest.raises(RankDeficient) as exc:
        fit_interval(math.sqrt, (0, 1), ["SQRT@left", "SQRT@left"])
    assert exc.value.column == 1
    with pytest.raises(RankDeficient):
        fit_interval(math.sqrt, (0, 1), ["POLY", "PLS@left:1"], 3)


def test_dos_example():
    f, report = piecewisefit(dos_residual, (0, 4), ["POLY"], parity="even", rtol=5e-6)
    assert report.pieces_produced == 1
    degree = report.pieces[0].degree
    assert 9 <= degree <= 11
    sing = PiecewiseFunction("even", Piece((0, 4), (False, True), "LOG", [0, LOG_AMPLITUDE]))
    g = f + sing
    assert [t.formula for t in g.pieces[0].terms] == ["POLY", "LOG"]
    e = np.linspace(-4, 4, 1000)
    err = max(abs(g(v) / square_lattice_dos(v) - 1) for v in e)
    assert err < 1e-5


def test_cubic_is_reproduced():
    f, report = piecewisefit(lambda x: 2 * x ** 3 - x, (0, 1), ["POLY"], rtol=1e-12)
    assert len(f.pieces) == 1
    np.testing.assert_allclose(padded(f.pieces[0].terms[0].params, 4), [0, -1, 0, 2],
                               rtol=0, atol=1e-10)


def test_line_is_trimmed():
    f, _ = piecewisefit(lambda x: 2 * x + 1, (0, 1), ["POLY"], rtol=1e-8)
    params = f.pieces[0].terms[0].params
    assert len(params) == 2
    np.testing.assert_allclose(params, [1, 2], atol=1e-12)


def test_sqrt_needs_the_sqrt_candidate():
    f, _ = piecewisefit(math.sqrt, (0, 1), ["POLY", "SQRT@left"], rtol=1e-6)
    assert len(f.pieces) == 1
    assert f.pieces[0].included == (True, True)  # SQRT is finite at its anchor
    with pytest.raises(FitDidNotConverge) as exc:
        piecewisefit(math.sqrt, (0, 1), ["POLY"], rtol=1e-6)
    # regression value: bisection towards 0 stalls at min_width
    assert len(exc.value.partial.pieces) == 20
    assert exc.value.interval[0] == 0.0
    assert exc.value.report.pieces_produced == 20


def test_singular_anchor_gives_excluded_endpoint():
    f, _ = piecewisefit(lambda x: math.log(x) + x, (0, 1), ["POLY", "LOG@left"], rtol=1e-10)
    assert f.pieces[0].included == (False, True)


def test_bisection_produces_contiguous_pieces():
    # a kink off the dyadic grid only converges with an absolute floor
    f, report = piecewisefit(lambda x: abs(x - 0.3), (0, 1), ["POLY"], rtol=1e-6,
                             atol=1e-6)
    ivs = [p.interval for p in f.pieces]
    assert ivs[0][0] == 0 and ivs[-1][1] == 1
    assert all(a[1] == b[0] for a, b in zip(ivs, ivs[1:]))
    assert report.pieces_produced == len(ivs)


def test_report_invariant(rng):
    for _ in range(5):
        w = rng.uniform(1, 5)
        f, report = piecewisefit(lambda x: math.sin(w * x), (0, 2), rtol=1e-9)
        for s in report.pieces:
            assert s.error <= s.bound
        assert report.max_observed_error == max(s.error for s in report.pieces)
        assert report.evaluations_of_target > 0
        assert "pieces:" in report.summary()


def test_target_not_finite():
    with pytest.raises(TargetNotFinite) as exc:
        piecewisefit(lambda x: math.inf if x > 0.5 else x, (0, 1))
    assert exc.value.x > 0.5


def test_flat_zero_target():
    f, report = piecewisefit(lambda x: 0.0, (0, 1))
    assert len(f.pieces) == 1
    assert report.max_observed_error == 0.0
    assert f(0.3) == 0.0


def test_determinism():
    runs = [serialize(piecewisefit(lambda x: math.exp(math.sin(5 * x)), (0, 3),
                                   rtol=1e-9, seed=7)[0]) for _ in range(2)]
    assert runs[0] == runs[1]


def test_monotone_refinement():
    g = lambda x: math.atan(10 * (x - 0.4))
    errs = []
    for rtol in (1e-4, 5e-5, 2.5e-5, 1.25e-5):
        _, report = piecewisefit(g, (0, 1), rtol=rtol, seed=3)
        errs.append(report.max_observed_error)
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_odd_parity_requires_half_axis():
    with pytest.raises(ValueError):
        piecewisefit(math.sin, (-1, 1), parity="odd")
    f, _ = piecewisefit(math.sin, (0, 1), parity="odd", rtol=1e-10)
    assert f(-0.5) == -f(0.5)
