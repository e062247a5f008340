import json
from pathlib import Path

import pytest

from weilglue.harness import (
    SUITES,
    ParseError,
    UnresolvedReference,
    bundled_scenarios,
    load_scenario,
    main,
    run,
)

FIXTURES = Path(__file__).parent / "fixtures"
BROKEN = FIXTURES / "broken_collar.yaml"

MINIMAL = """\
name: mini
algebras:
  D1: {generators: 1, ideal: [[2]]}
manifolds:
  L:
    charts:
      c: {model: [1, 0], region: [[["-1", "1"]]]}
suites: [weil, atlas]
"""


def write(tmp_path, text, name="s.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoad:
    def test_interval_glue(self):
        sc = load_scenario("interval_glue")
        assert set(sc.manifolds) == {"I_left", "I_right", "point"}
        assert list(sc.gluings) == ["join"]
        g = sc.gluings["join"]
        assert g.fi.M.name == "I_left" and g.fi.N.name == "I_right"
        assert g.fi.sigma.charts["s"].model.n == 0
        assert "D1" in sc.algebras and sc.algebras["D1"].dimension == 2
        assert sc.exact and sc.seed == 42 and sc.probes == 500
        assert "sheared" in g.alternates

    def test_bundled(self):
        assert {"interval_glue", "halfplane_glue", "prolongation_laws"} <= set(bundled_scenarios())

    def test_minimal_defaults(self, tmp_path):
        sc = load_scenario(write(tmp_path, MINIMAL))
        assert sc.mode == "rational" and sc.gluings == {}

    def test_float_mode_not_exact(self, tmp_path):
        sc = load_scenario(write(tmp_path, MINIMAL + "mode: float\n"))
        assert not sc.exact

    def test_undefined_algebra(self, tmp_path):
        text = MINIMAL + "probe_algebras: [D1, D7]\n"
        with pytest.raises(UnresolvedReference) as err:
            load_scenario(write(tmp_path, text))
        assert "D7" in str(err.value)
        assert err.value.line == 9

    def test_undefined_manifold(self, tmp_path):
        text = open(load_scenario("interval_glue").path).read().replace("N: I_right", "N: I_nowhere")
        with pytest.raises(UnresolvedReference) as err:
            load_scenario(write(tmp_path, text))
        assert err.value.line is not None

    def test_bad_expression_has_line(self, tmp_path):
        text = open(load_scenario("interval_glue").path).read().replace("(sub (var 0) 1)", "(sub (var 0)")
        with pytest.raises(ParseError) as err:
            load_scenario(write(tmp_path, text))
        assert err.value.line == 22

    def test_bad_model(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_scenario(write(tmp_path, MINIMAL.replace("[1, 0]", "[1, 2]")))
        assert err.value.line == 7

    def test_yaml_syntax(self, tmp_path):
        with pytest.raises(ParseError):
            load_scenario(write(tmp_path, "name: [unclosed\n"))

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_scenario("no_such_fixture")


class TestRun:
    def test_broken_collar_fails_with_witness(self):
        report = run(load_scenario(BROKEN))
        bad = [r for r in report.records if not r.passed]
        assert [r.check_id for r in bad] == ["gluable/join/collar_M"]
        entry = bad[0].to_dict()
        assert entry["status"] == "fail" and "witness" in entry

    def test_deterministic_reports(self):
        sc = load_scenario("interval_glue")
        suites = ["weil", "gluable", "pushout"]
        a = run(sc, suites=suites).to_json(timing=False)
        b = run(sc, suites=suites).to_json(timing=False)
        assert a == b
        assert "elapsed" not in a

    def test_seed_changes_witness_stream(self):
        sc = load_scenario("interval_glue")
        a = run(sc, seed=1, suites=["weil"]).to_json(timing=False)
        b = run(sc, seed=2, suites=["weil"]).to_json(timing=False)
        assert a != b and '"seed": 1' in a

    def test_empty_suite_fails(self, tmp_path):
        report = run(load_scenario(write(tmp_path, MINIMAL)), suites=["pushout"])
        assert [r.check_id for r in report.records] == ["pushout/empty"]
        assert not report.passed

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run(load_scenario("interval_glue"), suites=["nonsense"])

    def test_float_mode(self):
        report = run(load_scenario("interval_glue"), mode="float", suites=["gluable", "glued_atlas"])
        assert report.passed and report.mode == "float"

    def test_every_suite_known(self):
        sc = load_scenario("prolongation_laws")
        assert set(sc.suites) <= set(SUITES)


class TestCli:
    def test_pass_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = main(["interval_glue", "--suites", "weil,gluable", "--report", str(out), "--no-timing"])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["summary"]["failed"] == 0
        assert {r["check"].split("/")[0] for r in data["records"]} == {"weil", "gluable"}
        assert "checks passed" in capsys.readouterr().out

    def test_fail_exit_one(self, capsys):
        assert main([str(BROKEN)]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_parse_error_exit_two(self, tmp_path, capsys):
        assert main([str(write(tmp_path, "name: [unclosed\n"))]) == 2
        assert "error" in capsys.readouterr().err

    def test_unknown_suite_exit_two(self):
        assert main(["interval_glue", "--suites", "nope"]) == 2

    def test_list(self, capsys):
        assert main(["--list"]) == 0
        out = capsys.readouterr().out
        assert "interval_glue" in out and "pushout" in out

    def test_missing_scenario(self):
        with pytest.raises(SystemExit):
            main([])

    def test_seed_override(self, tmp_path):
        out = tmp_path / "r.json"
        main(["interval_glue", "--suites", "weil", "--seed", "7", "--report", str(out)])
        data = json.loads(out.read_text())
        assert data["seed"] == 7 and "elapsed_s" in data
