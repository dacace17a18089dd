import json
import subprocess
import sys

import pytest

from reifenberg.cli import main
from reifenberg.geometry import ScaleLadder
from reifenberg.io import read_cloud
from reifenberg.measure import minkowski_dims


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_writes_cloud_and_sidecar(tmp_path, capsys):
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "generate", "--kind", "koch", "--param", "depth=3",
                       "--out", "k.csv")
    assert code == 0
    cloud = read_cloud(tmp_path / "k.csv")
    assert len(cloud) == 65
    side = json.loads((tmp_path / "k.csv.json").read_text())
    assert side["spec"] == {"kind": "koch", "params": {"depth": 3}}


def test_flatness_dims_measure_chain(tmp_path, capsys):
    cloud = tmp_path / "p.csv"
    assert run(capsys, "generate", "--kind", "plane-patch", "--params", '{"j": 1, "n": 2, "h": 0.002}',
               "--out", str(cloud))[0] == 0
    code, out, _ = run(capsys, "--json", "flatness", "--in", str(cloud), "--j", "1", "--ladder", "1.0:0.5:6",
                       "--sided", "one", "--base-sample", "8", "--out", str(tmp_path / "f.json"))
    assert code == 0
    verdict = json.loads(out)["verdict"]
    assert all(p["member"] for p in verdict["properties"].values())
    report = json.loads((tmp_path / "f.json").read_text())
    assert len(report["profiles"]) == 8

    ll = tmp_path / "ll.csv"
    code, out, _ = run(capsys, "dims", "--in", str(cloud), "--ladder", "0.32:0.5:5", "--emit-loglog", str(ll),
                       "--json", "--out-dir", str(tmp_path))
    direct = minkowski_dims(read_cloud(cloud), ScaleLadder.parse("0.32:0.5:5").radii)
    assert code == 0 and json.loads(out)["slope"] == pytest.approx(direct.slope, abs=1e-12)
    rows = ll.read_text().splitlines()
    assert rows[0] == "log_inv_eps,log_count" and len(rows) == 6

    code, out, _ = run(capsys, "--json", "--out-dir", str(tmp_path), "measure", "--in", str(cloud), "--j", "1",
                       "--scale", "0.02")
    assert code == 0 and json.loads(out)["ratio"] == pytest.approx(1.0, abs=0.05)


def test_eta_verb(capsys):
    code, out, _ = run(capsys, "--json", "eta", "--delta", "0.0625", "--n", "2", "--j", "1")
    payload = json.loads(out)
    assert code == 0 and payload["C"] == pytest.approx(2.75) and payload["eta"] > 0
    code, out, _ = run(capsys, "--json", "eta", "--delta", "0.2", "--n", "3", "--j", "1")
    assert json.loads(out)["eta"] == 3


def test_flags_after_the_verb(tmp_path, capsys):
    code, out, _ = run(capsys, "generate", "--kind", "circle", "--param", "h=0.05", "--out-dir", str(tmp_path),
                       "--json")
    assert code == 0 and json.loads(out)["points"] == 126
    assert (tmp_path / "cloud.csv").exists()


@pytest.mark.parametrize("argv", [
    ["dims", "--in", "missing.csv", "--ladder", "1:0.5:4"],
    ["generate", "--kind", "koch", "--param", "angle=3.0"],
    ["generate", "--kind", "koch", "--param", "colour=blue"],
    ["eta", "--delta", "0", "--n", "2", "--j", "1"],
])
def test_input_errors_exit_two(argv, tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_argparse_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["flatness"])
    assert exc.value.code == 2


def test_pipeline_verb(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"generator": {"kind": "circle", "params": {"h": 0.005}}, "j": 1,
                                "ladder": "0.4:0.5:3", "measure": {"scales": [0.05]}}))
    code, out, _ = run(capsys, "--out-dir", str(tmp_path / "out"), "--json", "pipeline", "--spec", str(spec))
    assert code == 0
    assert (tmp_path / "out" / "manifest.json").exists()
    assert json.loads(out)["summary"]["points"] == 1257


def test_verify_table_exit_code_follows_failures(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("koch_depth = 5\ncomb_slabs = 6\ncomb_h = 0.0009765625\ncomb_ladder = \"1.0:0.5:5\"\n"
                   "comb_base_points = 8\ncomb_dims_slabs = 40\ncomb_measure_slabs = 4\npositive_h = 0.0005\n"
                   "base_points = 6\nball_trials = 4\nmeasure_scales = [0.02, 0.01]\n")
    code, out, _ = run(capsys, "--out-dir", str(tmp_path / "t"), "--json", "verify-table", "--config", str(cfg))
    report = json.loads(out)
    assert code == (1 if report["counts"]["FAILED"] else 0)
    assert (tmp_path / "t" / "table_report.json").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "reifenberg", "eta", "--delta", "0.2", "--n", "2", "--j", "1"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode == 0 and "eta(0.2) = 2" in res.stdout
