import copy
import json

import numpy as np
import pytest

from convsel.errors import InfeasibleBodyError, SpecValidationError
from convsel.geometry import Ball, Interval
from convsel.specio.cli import main
from convsel.specio.loader import load_spec, load_spec_dict

MINIMAL = {
    "ambient_dim": 1,
    "output_dim": 1,
    "domain": {"boxes": [{"lo": [-1.0], "hi": [1.0]}]},
    "pieces": [{"region": [], "body": {"interval": {"lo": "0", "hi": "2"}}}],
}


def variant(**overrides) -> dict:
    raw = copy.deepcopy(MINIMAL)
    raw.update(overrides)
    return raw


class TestLoader:
    def test_minimal_spec(self):
        spec = load_spec_dict(variant())
        assert spec.ambient_dim == 1 and spec.output_dim == 1
        assert spec.stratification.depth == 1
        body = spec.map([0.5])
        assert isinstance(body, Interval)
        assert (body.lo, body.hi) == (0.0, 2.0)
        assert not spec.map.declared_lsc

    def test_file_round_trip(self, specs_dir):
        spec = load_spec(str(specs_dir / "m_two_stratum.json"))
        assert spec.map.declared_lsc
        assert spec.stratification.depth == 2
        assert spec.map([0.5]).lo == 0.0
        assert spec.map([0.0]).lo == 1.0

    def test_unknown_top_level_key(self):
        with pytest.raises(SpecValidationError, match=r"\$\.bogus"):
            load_spec_dict(variant(bogus=1))

    def test_missing_required_key(self):
        raw = variant()
        del raw["pieces"]
        with pytest.raises(SpecValidationError, match=r"\$\.pieces: missing"):
            load_spec_dict(raw)

    def test_bool_is_not_an_integer(self):
        with pytest.raises(SpecValidationError, match=r"\$\.ambient_dim"):
            load_spec_dict(variant(ambient_dim=True))

    def test_dimension_lower_bound(self):
        with pytest.raises(SpecValidationError, match="must be >= 1"):
            load_spec_dict(variant(output_dim=0))

    def test_bad_expression_reports_path_and_offset(self):
        raw = variant(
            pieces=[{"region": [], "body": {"interval": {"lo": "1 +", "hi": "2"}}}]
        )
        with pytest.raises(
            SpecValidationError, match=r"\$\.pieces\[0\]\.body\.interval\.lo.*offset"
        ):
            load_spec_dict(raw)

    def test_variable_beyond_ambient_dim(self):
        raw = variant(
            pieces=[{"region": [], "body": {"interval": {"lo": "x3", "hi": "2"}}}]
        )
        with pytest.raises(SpecValidationError, match="uses x3 but ambient_dim is 1"):
            load_spec_dict(raw)

    def test_interval_needs_scalar_output(self):
        with pytest.raises(SpecValidationError, match="output_dim 1"):
            load_spec_dict(variant(output_dim=2))

    def test_ball_center_arity(self):
        raw = variant(
            output_dim=2,
            pieces=[
                {"region": [], "body": {"ball": {"center": ["0"], "radius": "1"}}}
            ],
        )
        with pytest.raises(SpecValidationError, match="expected 2 coordinates"):
            load_spec_dict(raw)

    def test_infinity_literal_is_interval_only(self):
        raw = variant(
            pieces=[
                {"region": [], "body": {"ball": {"center": ["0"], "radius": "inf"}}}
            ],
        )
        with pytest.raises(SpecValidationError, match="bad expression 'inf'"):
            load_spec_dict(raw)

    def test_unbounded_interval_loads(self):
        raw = variant(
            pieces=[
                {"region": [], "body": {"interval": {"lo": "-inf", "hi": "inf"}}}
            ],
        )
        spec = load_spec_dict(raw)
        body = spec.map([0.0])
        assert body.lo == float("-inf") and body.hi == float("inf")

    def test_numeric_literals_allowed_as_expressions(self):
        raw = variant(
            pieces=[{"region": [], "body": {"interval": {"lo": 0, "hi": 2.5}}}]
        )
        assert load_spec_dict(raw).map([0.0]).hi == 2.5

    def test_crossed_constant_interval_fails_at_load(self):
        raw = variant(
            pieces=[{"region": [], "body": {"interval": {"lo": "1", "hi": "0"}}}]
        )
        with pytest.raises(InfeasibleBodyError):
            load_spec_dict(raw)

    def test_piece_coverage_gap_has_witness(self):
        raw = variant(
            pieces=[
                {"region": ["0 < x1"], "body": {"interval": {"lo": "0", "hi": "2"}}}
            ]
        )
        with pytest.raises(
            SpecValidationError, match=r"\$\.pieces: no piece covers the domain point"
        ):
            load_spec_dict(raw)

    def test_strata_overlap_has_witness(self):
        raw = variant(strata=[[], ["0 <= x1"]])
        with pytest.raises(SpecValidationError, match="2 strata overlap"):
            load_spec_dict(raw)

    def test_strata_gap_has_witness(self):
        raw = variant(strata=[["0 < x1"]])
        with pytest.raises(SpecValidationError, match="no stratum covers"):
            load_spec_dict(raw)

    def test_atom_without_comparison(self):
        raw = variant(
            pieces=[{"region": ["x1"], "body": {"interval": {"lo": "0", "hi": "2"}}}]
        )
        with pytest.raises(SpecValidationError, match="needs '<=' or '<'"):
            load_spec_dict(raw)

    def test_atom_with_chained_comparison(self):
        raw = variant(
            pieces=[
                {"region": ["0 < x1 < 1"], "body": {"interval": {"lo": "0", "hi": "2"}}}
            ]
        )
        with pytest.raises(SpecValidationError, match="exactly one comparison"):
            load_spec_dict(raw)

    def test_strict_vs_weak_atoms(self):
        raw = variant(
            strata=[["0 <= x1"], ["x1 < 0"]],
            pieces=[{"region": [], "body": {"interval": {"lo": "0", "hi": "2"}}}],
        )
        spec = load_spec_dict(raw)
        assert spec.stratification.classify([0.0]) == 0
        assert spec.stratification.classify([-0.5]) == 1

    def test_tags_must_be_boolean(self):
        with pytest.raises(SpecValidationError, match=r"\$\.tags\.declared_lsc"):
            load_spec_dict(variant(tags={"declared_lsc": 1}))

    def test_unknown_tag_rejected(self):
        with pytest.raises(SpecValidationError, match=r"\$\.tags\.smooth"):
            load_spec_dict(variant(tags={"smooth": True}))

    def test_hpolytope_body(self, specs_dir):
        spec = load_spec(str(specs_dir / "m_poly.json"))
        body = spec.map([0.0, 0.0])
        assert body.contains([1.0, 1.0], tol=1e-12)
        assert not body.contains([5.0, 5.0], tol=1e-12)

    def test_ball_body(self, specs_dir):
        spec = load_spec(str(specs_dir / "m_ball.json"))
        body = spec.map([0.0, 0.0])
        assert isinstance(body, Ball)
        assert body.center == pytest.approx([1.0, 1.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecValidationError, match="cannot read"):
            load_spec(str(tmp_path / "nope.json"))

    def test_invalid_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(SpecValidationError, match="not valid JSON"):
            load_spec(str(bad))

    def test_non_dict_document(self):
        with pytest.raises(SpecValidationError, match="expected an object"):
            load_spec_dict([1, 2, 3])


def run_cli(*argv) -> int:
    return main(list(argv))


class TestCli:
    def test_michael_happy_path(self, specs_dir, tmp_path):
        out = tmp_path / "h.csv"
        report = tmp_path / "report.json"
        rc = run_cli(
            "select-michael",
            "--spec", str(specs_dir / "m_two_stratum.json"),
            "--grid", "33",
            "--out", str(out),
            "--report", str(report),
        )
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "x1,h1"
        assert len(lines) == 34  # header + one row per grid point
        payload = json.loads(report.read_text(encoding="utf-8"))
        assert payload["passed"] is True
        assert payload["command"] == "select-michael"
        names = [e["name"] for e in payload["invariants"]]
        assert names == ["membership", "boundary-decay", "modulus-ratio"]

    def test_csv_is_byte_deterministic(self, specs_dir, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            rc = run_cli(
                "select-michael",
                "--spec", str(specs_dir / "m_two_stratum.json"),
                "--grid", "33",
                "--out", str(out),
            )
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sandwich_happy_path(self, specs_dir, tmp_path):
        report = tmp_path / "report.json"
        rc = run_cli(
            "select-sandwich",
            "--spec", str(specs_dir / "s_mixed.json"),
            "--grid", "33",
            "--report", str(report),
        )
        assert rc == 0
        payload = json.loads(report.read_text(encoding="utf-8"))
        names = [e["name"] for e in payload["invariants"]]
        assert "between-envelopes" in names and "strictly-between" in names

    def test_lns_row_count_matches_grid(self, specs_dir, tmp_path):
        out = tmp_path / "lns.csv"
        rc = run_cli(
            "lns",
            "--spec", str(specs_dir / "m_two_stratum.json"),
            "--grid", "100",
            "--out", str(out),
        )
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 101  # header + exactly 100 rows

    def test_envelopes_csv_labels(self, specs_dir, tmp_path):
        out = tmp_path / "env.csv"
        rc = run_cli(
            "envelopes",
            "--spec", str(specs_dir / "m_two_stratum.json"),
            "--grid", "33",
            "--out", str(out),
        )
        assert rc == 0
        assert out.read_text(encoding="utf-8").splitlines()[0] == "x1,f,g"

    def test_envelopes_reject_vector_output(self, specs_dir):
        assert run_cli("envelopes", "--spec", str(specs_dir / "m_ball.json")) == 1

    def test_verify_flags_bad_declaration(self, specs_dir, tmp_path):
        report = tmp_path / "report.json"
        rc = run_cli(
            "verify",
            "--spec", str(specs_dir / "bad_lsc.json"),
            "--report", str(report),
        )
        assert rc == 2
        payload = json.loads(report.read_text(encoding="utf-8"))
        assert payload["passed"] is False
        lsc = next(e for e in payload["invariants"] if e["name"] == "lsc")
        assert not lsc["passed"]
        assert lsc["violations"][0]["x"] == [0.0]

    def test_verify_accepts_sound_declaration(self, specs_dir):
        assert run_cli("verify", "--spec", str(specs_dir / "good_lsc.json")) == 0

    def test_michael_aborts_on_failed_audit(self, specs_dir, tmp_path):
        report = tmp_path / "report.json"
        rc = run_cli(
            "select-michael",
            "--spec", str(specs_dir / "bad_lsc.json"),
            "--report", str(report),
        )
        assert rc == 2
        payload = json.loads(report.read_text(encoding="utf-8"))
        assert payload["passed"] is False
        assert payload["error"]["stage"] == "selection"

    def test_missing_spec_file_is_an_input_error(self, tmp_path):
        assert run_cli("lns", "--spec", str(tmp_path / "nope.json")) == 1

    def test_degenerate_grid_is_an_input_error(self, specs_dir):
        rc = run_cli(
            "lns", "--spec", str(specs_dir / "m_two_stratum.json"), "--grid", "1"
        )
        assert rc == 1

    def test_usage_errors_exit_one(self):
        assert run_cli("select-michael") == 1        # missing --spec
        assert run_cli("no-such-command") == 1

    def test_report_is_stable_json(self, specs_dir, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for report in (a, b):
            rc = run_cli(
                "verify",
                "--spec", str(specs_dir / "good_lsc.json"),
                "--report", str(report),
            )
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text(encoding="utf-8").startswith('{\n  "')
