import json

import numpy as np
import pytest

from tmgeom.checks import REGISTRY
from tmgeom.cli import V_RANGE, main, run, sample_tm_points
from tmgeom.scenarios import BUILTINS, CANONICAL, SpecError, load_spec, parse_spec, save_spec

TORUS = """\
[scenario]
name = torus
dim = 2

[box]
x1 = 0 6.283185307179586
x2 = 0 6.283185307179586

[metric]
g[1,1] = 1
g[2,2] = 1

[acs]
J[1,2] = -1
J[2,1] = 1

[checks]
oracle
nijenhuis_I
"""


def write(tmp_path, text, name="s.spec"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ----------------------------------------------------------------- specs


def test_builtin_flat_torus():
    spec = load_spec("flat_torus_2")
    assert spec.m == 2
    assert spec.metric == [["1", "0"], ["0", "1"]]
    assert spec.torsion is None
    assert (spec.samples, spec.seed) == (50, 42)


def test_canonical_names():
    assert len(CANONICAL) == 10
    assert set(CANONICAL) <= set(BUILTINS)


@pytest.mark.parametrize("name", list(BUILTINS))
def test_save_load_round_trip(name):
    spec = BUILTINS[name]()
    again = parse_spec(save_spec(spec))
    assert save_spec(again) == save_spec(spec)
    assert run(again, samples=3).to_json() == run(spec, samples=3).to_json().replace(
        f'"scenario": "{spec.name}"', f'"scenario": "{again.name}"'
    )


def test_parse_spec_file(tmp_path):
    spec = load_spec(write(tmp_path, TORUS))
    assert spec.name == "torus"
    assert spec.acs == [["0", "-1"], ["1", "0"]]
    assert spec.checks == (("oracle", "zero"), ("nijenhuis_I", "zero"))


@pytest.mark.parametrize(
    "edit, line",
    [
        (("g[2,2] = 1", "g[2,2] = 1 +"), 11),
        (("g[2,2] = 1", "g[3,2] = 1"), 11),
        (("[acs]", "[foo]"), 13),
        (("J[2,1] = 1", "J[2,1] = cosh(x1, x2)"), 15),
        (("J[2,1] = 1", "J[2,1] = x3"), 15),
    ],
)
def test_parse_errors_carry_line(tmp_path, edit, line):
    with pytest.raises(SpecError) as err:
        load_spec(write(tmp_path, TORUS.replace(*edit)))
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_invariant_violation_names_point(tmp_path):
    # J^2 = -Id fails away from x1 = 0
    bad = TORUS.replace("J[2,1] = 1", "J[2,1] = 1 + x1")
    with pytest.raises(SpecError) as err:
        load_spec(write(tmp_path, bad))
    assert err.value.point is not None and err.value.point.shape == (2,)
    assert "x =" in str(err.value)


def test_unknown_check_rejected(tmp_path):
    with pytest.raises(SpecError):
        run(load_spec(write(tmp_path, TORUS + "no_such_check\n")))


def test_missing_file():
    with pytest.raises(SpecError):
        load_spec("/nonexistent/file.spec")


# -------------------------------------------------------------- sampling


def test_fibre_samples_avoid_zero_section():
    mfd = BUILTINS["s2_round"]().manifold()
    for p in sample_tm_points(mfd, 30, 1):
        c = np.sqrt(p.v @ mfd.metric.value(p.x) @ p.v)
        assert V_RANGE[0] <= c <= V_RANGE[1]


# ---------------------------------------------------------------- reports


def test_report_is_deterministic():
    spec = BUILTINS["s2_round"]()
    assert run(spec, samples=5).to_json() == run(spec, samples=5).to_json()


def test_every_check_carries_anchor():
    rep = run(BUILTINS["r4_conformal_obata"](), samples=2)
    assert rep.checks
    for c in rep.checks:
        assert c.anchor == REGISTRY[c.name].anchor and c.anchor


def test_s2_expected_nonzero_passes():
    rep = run(BUILTINS["s2_round"](), ["domega_I", "nijenhuis_I"], samples=8)
    by = {c.name: c for c in rep.checks}
    assert by["domega_I"].verdict == "pass"
    assert by["nijenhuis_I"].expect == "nonzero" and by["nijenhuis_I"].verdict == "pass"


@pytest.mark.parametrize("name", list(BUILTINS))
def test_builtin_suites_pass(name):
    rep = run(BUILTINS[name](), samples=6)
    assert rep.passed, rep.to_text()


def test_tol_scale_can_fail_a_check():
    rep = run(BUILTINS["s2_round"](), ["oracle"], samples=3, tol_scale=0.0)
    assert not rep.passed


# ------------------------------------------------------------ entry point


def test_main_exit_codes(tmp_path, capsys):
    assert main(["flat_torus_2", "--samples", "3"]) == 0
    assert main(["s2_round", "--checks", "nijenhuis_I", "--samples", "3", "--tol-scale", "1"]) == 0
    # nijenhuis_I on s2 is expected nonzero, so forcing "zero" is a verdict failure
    assert main([write(tmp_path, TORUS.replace("nijenhuis_I", "nijenhuis_I = nonzero")), "--samples", "3"]) == 1
    assert main([write(tmp_path, TORUS + "[bad\n", "bad.spec")]) == 2
    assert main([]) == 2
    assert main(["flat_torus_2", "--samples", "0"]) == 2
    assert main(["flat_torus_2", "--bogus"]) == 2
    capsys.readouterr()


def test_main_json_output(capsys):
    assert main(["flat_torus_2", "--samples", "2", "--format", "json"]) == 0
    first = capsys.readouterr().out
    assert main(["flat_torus_2", "--samples", "2", "--format", "json"]) == 0
    assert capsys.readouterr().out == first
    d = json.loads(first)
    assert d["passed"] and d["seed"] == 42 and "wall_time" not in d
    assert {"name", "anchor", "points", "worst", "threshold", "verdict"} <= set(d["checks"][0])


def test_main_lists(capsys):
    assert main(["--list-builtins"]) == 0
    out = capsys.readouterr().out.split()
    assert all(n in out for n in CANONICAL)
    assert main(["--list-checks"]) == 0
    assert "oracle" in capsys.readouterr().out


def test_dump_spec(capsys):
    assert main(["hyperbolic_plane", "--dump-spec"]) == 0
    text = capsys.readouterr().out
    assert parse_spec(text).metric == BUILTINS["hyperbolic_plane"]().metric
