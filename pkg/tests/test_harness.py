import json
import math
from pathlib import Path

import pytest

from reifenberg.harness import (
    NOT_DESK,
    CLASSIFICATION_TABLE,
    QUESTIONS,
    TABLE_CORRECTIONS,
    TableConfig,
    default_expectations,
    run_pipeline,
    verify_table,
)
from reifenberg.geometry import InputError
from reifenberg.io import read_cloud

FLAT_SPEC = {"generator": {"kind": "plane-patch", "params": {"j": 1, "n": 2, "radius": 1.0, "h": 1e-3}},
             "j": 1, "ladder": "1.0:0.5:6"}
KOCH_SPEC = {"generator": {"kind": "koch", "params": {"depth": 8}}, "j": 1, "ladder": "0.6:0.5:9",
             "dims": {"max": 1 / 27, "min": 10 * 3.0 ** -8, "count": 12, "shifts": 16}}


# --- expectations

def test_expectations_reproduce_table_verbatim():
    exps = default_expectations()
    assert len(exps) == 72
    for e in exps:
        assert e.table_entry == CLASSIFICATION_TABLE[e.row][QUESTIONS.index(e.question)]
        assert e.expected == TABLE_CORRECTIONS.get((e.row, e.question), e.table_entry)
        assert e.erratum == ((e.row, e.question) in TABLE_CORRECTIONS)


def test_every_no_has_witness_or_flag():
    for e in default_expectations():
        if e.expected == "No":
            assert (e.recipe == "witness" and e.examples) or e.recipe == "not-desk"
        else:
            assert e.recipe == "positive" and e.examples


def test_unknown_override_rejected():
    with pytest.raises(InputError):
        default_expectations({("xiii", "1"): "Yes"})


# --- the suite

def test_default_suite_counts(table_run):
    report, _ = table_run
    counts = report.counts()
    assert counts["FAILED"] == 0
    assert counts["inconclusive"] == 0
    assert counts["confirmed"] >= 18
    assert counts["confirmed"] + counts["not-desk-verifiable"] == 72
    assert report.exit_code == 0


def test_not_desk_cells_are_exactly_the_flagged_ones(table_run):
    report, _ = table_run
    flagged = {(r, q) for q, rows in NOT_DESK.items() for r in rows}
    assert {(c.row, c.question) for c in report.cells if c.status == "not-desk-verifiable"} == flagged


def test_cells_cite_existing_parseable_artifacts(table_run):
    report, out = table_run
    cited = set()
    for c in report.cells:
        if c.status == "not-desk-verifiable":
            continue
        assert c.artifacts, (c.row, c.question)
        cited.update(c.artifacts)
    for rel in sorted(cited):
        path = Path(out) / rel
        assert path.exists()
        if path.suffix == ".csv":
            assert len(read_cloud(path)) > 0
        else:
            json.loads(path.read_text())
    saved = json.loads((Path(out) / "table_report.json").read_text())
    assert saved["counts"] == report.counts()


def test_suite_entries_write_isolated_directories(table_run):
    _, out = table_run
    assert sorted(p.name for p in (Path(out) / "examples").iterdir()) == ["circle", "comb", "graph", "koch", "patch"]


def test_tampered_expectations_fail(table_run):
    from reifenberg.harness import _evaluate

    report, _ = table_run
    examples = report.examples
    for key, answer in [(("i", "1"), "Yes"), (("xii", "1"), "No"), (("iii", "2"), "Yes"), (("viii", "3s"), "Yes")]:
        exp = [e for e in default_expectations({key: answer}) if (e.row, e.question) == key][0]
        assert _evaluate(exp, examples).status == "FAILED", key


def test_corrected_minkowski_rows(table_run):
    report, _ = table_run
    assert report.cell("iv", "1").status == "confirmed" and report.cell("iv", "1").expected == "No"
    assert report.cell("vi", "1").status == "confirmed" and report.cell("vi", "1").expected == "Yes"
    # the entries as stated, are contradicted by the evidence
    from reifenberg.harness import _evaluate

    for key in (("iv", "1"), ("vi", "1")):
        exp = [e for e in default_expectations({key: CLASSIFICATION_TABLE[key[0]][0]}) if (e.row, e.question) == key][0]
        assert _evaluate(exp, report.examples).status == "FAILED"


def test_coarse_koch_is_inconclusive_not_failed():
    cfg = TableConfig(koch_depth=2, comb_slabs=6, comb_h=2.0 ** -10, comb_ladder="1.0:0.5:5", comb_base_points=12,
                      comb_dims_slabs=60, comb_measure_slabs=6, positive_h=2e-4, base_points=8, ball_trials=5)
    report = verify_table(cfg)
    koch_cells = [c for c in report.cells if c.examples == ("koch",)]
    assert koch_cells and all(c.status == "inconclusive" for c in koch_cells)
    assert any("unreliable" in n for n in report.evidence["koch"]["notes"])
    assert not any(c.status == "FAILED" and "koch" in c.examples for c in report.cells)


def test_config_file_formats(tmp_path):
    kv = tmp_path / "cfg.txt"
    kv.write_text("# sizes\nkoch_depth = 6\ndelta_grid = [0.5, 0.1]\n")
    cfg = TableConfig.from_file(kv)
    assert cfg.koch_depth == 6 and cfg.delta_grid == (0.5, 0.1)
    js = tmp_path / "cfg.json"
    js.write_text(json.dumps({"seed": 3}))
    assert TableConfig.from_file(js).seed == 3
    js.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(InputError):
        TableConfig.from_file(js)


# --- pipeline

def test_pipeline_flat_patch(tmp_path):
    m = run_pipeline(FLAT_SPEC, tmp_path)
    assert m["summary"]["all_consistent"]
    assert m["summary"]["slope"] == pytest.approx(1.0, abs=0.05)
    for entry in m["files"].values():
        assert (tmp_path / entry["path"]).exists()


def test_pipeline_koch_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    m = run_pipeline(KOCH_SPEC, a)
    assert not m["summary"]["all_consistent"]
    assert "wδ" not in m["summary"]["members"]
    assert m["summary"]["slope"] == pytest.approx(math.log(4) / math.log(3), abs=0.02)
    run_pipeline(KOCH_SPEC, b)
    for name in ("flatness.json", "dims.json", "measures.json", "manifest.json", "cloud.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_pipeline_spec_file_and_errors(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(FLAT_SPEC))
    assert run_pipeline(spec, tmp_path / "out")["summary"]["points"] == 2001
    with pytest.raises(InputError):
        run_pipeline(tmp_path / "missing.json", tmp_path / "o2")
    with pytest.raises(InputError):
        run_pipeline({"j": 1}, tmp_path / "o3")
    with pytest.raises(InputError, match="pipeline stage"):
        run_pipeline({**FLAT_SPEC, "ladder": "1.0:0.5:12"}, tmp_path / "o4")


def test_suite_determinism(tmp_path):
    cfg = TableConfig(koch_depth=5, comb_slabs=6, comb_h=2.0 ** -10, comb_ladder="1.0:0.5:5", comb_base_points=8,
                      comb_dims_slabs=40, comb_measure_slabs=4, positive_h=5e-4, base_points=6, ball_trials=4,
                      measure_scales=(0.02, 0.01))
    a = verify_table(cfg, out_dir=tmp_path / "a")
    b = verify_table(cfg, out_dir=tmp_path / "b")
    assert (tmp_path / "a" / "table_report.json").read_bytes() == (tmp_path / "b" / "table_report.json").read_bytes()
    assert a.counts() == b.counts()
