import cmath
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from piecekit import Piece, PiecewiseFunction, POLY, deserialize, serialize
from piecekit.dos import LOG_AMPLITUDE, square_lattice_dos


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("PIECEKIT_SEED", None)
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "piecekit", *map(str, args)],
                          capture_output=True, text=True, env=full_env)


def rows(text):
    return [line.split(",") for line in text.strip().splitlines()]


@pytest.fixture
def sing(tmp_path):
    path = tmp_path / "sing.json"
    path.write_text(json.dumps({"parity": "even", "pieces": [{
        "interval": [0, 4], "included": [False, True],
        "terms": [{"formula": "LOG", "params": [0, LOG_AMPLITUDE]}]}]}))
    return path


@pytest.fixture
def box(tmp_path):
    path = tmp_path / "box.json"
    path.write_text(serialize(PiecewiseFunction("none", Piece((-1, 1), (True, True), POLY, [1]))))
    return path


@pytest.fixture
def dos(tmp_path, sing):
    out = tmp_path / "dos.json"
    p = run("fit", "--target", "builtin:square-lattice-dos", "--interval", "0,4",
            "--formulas", "POLY", "--parity", "even", "--rtol", "5e-6",
            "--subtract", sing, "--out", out)
    assert p.returncode == 0, p.stderr
    return out, p


def test_fit_dos_session(dos):
    out, p = dos
    f = deserialize(out.read_text())
    assert len(f.pieces) == 1
    assert [t.formula for t in f.pieces[0].terms] == ["POLY", "LOG"]
    assert "pieces: 1" in p.stdout


def test_eval_reproduces_acceptance_curve(dos):
    out, _ = dos
    p = run("eval", "--in", out, "--grid", "-4,4,1000")
    assert p.returncode == 0
    data = np.array(rows(p.stdout), dtype=float)
    assert data.shape == (1000, 2)
    np.testing.assert_array_equal(data[:, 0], np.linspace(-4, 4, 1000))
    err = max(abs(v / square_lattice_dos(e) - 1) for e, v in data)
    assert err < 1e-5


def test_moment_of_dos(dos):
    out, _ = dos
    p = run("moment", "--in", out, "--n", "0,1,2")
    assert p.returncode == 0
    (n0, m0), (n1, m1), (n2, m2) = rows(p.stdout)
    assert (n0, n1, n2) == ("0", "1", "2")
    assert abs(float(m0) - 1) < 1e-5
    assert float(m1) == 0.0
    assert abs(float(m2) - 4) < 4e-5


def test_show(dos):
    out, _ = dos
    p = run("show", "--in", out)
    lines = p.stdout.splitlines()
    assert lines[0] == "< Piecewise even function with 1 piece and support [-4.0, 4.0] >"
    assert lines[1] == "PiecewiseFunction(:even, ["
    assert lines[2] == "    Piece((0.0, 4.0), (false, true), [POLY, LOG],"


def test_fit_csv_line(tmp_path):
    csv_path = tmp_path / "line.csv"
    x = np.linspace(0, 1, 11)
    csv_path.write_text("x,y\n" + "".join(f"{a!r},{2 * a + 1!r}\n" for a in x.tolist()))
    out = tmp_path / "line.json"
    p = run("fit", "--target", f"csv:{csv_path}", "--interval", "0,1",
            "--formulas", "POLY", "--rtol", "1e-8", "--out", out)
    assert p.returncode == 0, p.stderr
    f = deserialize(out.read_text())
    np.testing.assert_allclose(f.pieces[0].terms[0].params, [1, 2], atol=1e-12)


def test_csv_must_be_increasing(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("0,1\n1,2\n0.5,3\n")
    p = run("fit", "--target", f"csv:{csv_path}", "--interval", "0,1", "--out",
            tmp_path / "o.json")
    assert p.returncode == 4
    assert "strictly increasing" in p.stderr


def test_missing_interval_is_usage_error(tmp_path):
    p = run("fit", "--target", "builtin:square-lattice-dos", "--out", tmp_path / "o.json")
    assert p.returncode == 2
    assert "usage:" in p.stderr
    assert "--interval" in p.stderr


def test_bad_target_is_usage_error(tmp_path):
    p = run("fit", "--target", "builtin:nope", "--interval", "0,1", "--out", tmp_path / "o.json")
    assert p.returncode == 2


def test_hilbert_box(box):
    p = run("hilbert", "--in", box, "--z", "0,1")
    assert p.returncode == 0
    (zr, zi, hr, hi), = rows(p.stdout)
    ref = cmath.log((1 + 1j) / (-1 + 1j))
    assert (float(zr), float(zi)) == (0.0, 1.0)
    assert abs(complex(float(hr), float(hi)) - ref) < 1e-14


def test_golden_eval_and_real_axis(box):
    p = run("eval", "--in", box, "--at", "-2,-1,0.5,1,3")
    assert p.stdout == "-2.0,0.0\n-1.0,1.0\n0.5,1.0\n1.0,1.0\n3.0,0.0\n"
    p = run("hilbert", "--in", box, "--real-axis", "--at", "0")
    assert p.stdout == f"0.0,0.0,{-math.pi!r}\n"


def test_real_axis_singular_point_is_computation_error(sing):
    p = run("hilbert", "--in", sing, "--real-axis", "--at", "0")
    assert p.returncode == 3
    assert "y = 0.0" in p.stderr


def test_missing_primitive_names_the_formula(tmp_path):
    path = tmp_path / "pls.json"
    path.write_text(json.dumps({"parity": "none", "pieces": [{
        "interval": [0, 1], "included": [False, True],
        "terms": [{"formula": "PLS", "params": [0, 0.3, 1]}]}]}))
    p = run("hilbert", "--in", path, "--z", "0,1")
    assert p.returncode == 3
    assert "0.3" in p.stderr


def test_io_errors(tmp_path):
    p = run("eval", "--in", tmp_path / "missing.json", "--at", "0")
    assert p.returncode == 4
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    p = run("eval", "--in", bad, "--at", "0")
    assert p.returncode == 4
    assert "at 1" in p.stderr


def test_fit_did_not_converge_still_writes(tmp_path):
    # without the LOG term the singularity at 0 cannot be resolved
    out = tmp_path / "raw.json"
    report = tmp_path / "report.json"
    p = run("fit", "--target", "builtin:square-lattice-dos", "--interval", "0,4",
            "--parity", "even", "--rtol", "1e-6", "--out", out, "--report", report)
    assert p.returncode == 3
    assert "did not converge" in p.stderr
    assert len(deserialize(out.read_text()).pieces) > 1
    assert json.loads(report.read_text())["pieces_produced"] > 1


def test_seed_env_overrides_flag(tmp_path):
    csv_path = tmp_path / "wave.csv"
    x = np.linspace(0, 2, 401)
    csv_path.write_text("".join(f"{a!r},{math.sin(3 * a)!r}\n" for a in x.tolist()))
    outs = []
    for seed, env in (("5", None), ("1", {"PIECEKIT_SEED": "5"})):
        out = tmp_path / f"w{len(outs)}.json"
        p = run("fit", "--target", f"csv:{csv_path}", "--interval", "0,2",
                "--rtol", "1e-6", "--seed", seed, "--out", out, env=env)
        assert p.returncode == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]


def test_quad_cross_check(box):
    p = run("quad", "--in", box, "--n", "0,2", "--z", "0.5,0.5")
    assert p.returncode == 0
    lines = rows(p.stdout)
    assert [r[0] for r in lines] == ["moment", "moment", "hilbert"]
    assert all(float(r[-1]) < 1e-10 for r in lines)
