import json

import pytest

from wll.cli import main
from wll.potentials import example_potential


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_table(capsys):
    code, out, _ = run(capsys, "classify", "--m", "4")
    assert code == 0
    assert "9 canonical elements for m=4" in out


def test_classify_json(capsys):
    code, out, _ = run(capsys, "classify", "--m", "5", "--json")
    data = json.loads(out)
    assert code == 0 and data["count"] == 16 and len(data["elements"]) == 16


def test_classify_rejects_small_m(capsys):
    code, _, err = run(capsys, "classify", "--m", "2")
    assert code == 2 and "at least 3" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--m", "4", "--bogus"])
    assert exc.value.code == 2


def test_potential_validate(capsys, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(example_potential().to_json()))
    code, out, _ = run(capsys, "potential", "validate", str(path))
    assert code == 0 and out.startswith("PASS")
    code, out, _ = run(capsys, "potential", "classify", "builtin:example", "--json")
    info = json.loads(out)
    assert code == 0 and info["rank"] == 2 and not info["s_willmore"]


def test_potential_violation_exits_1(capsys, tmp_path):
    data = example_potential().to_json()
    data["pairs"][0]["functions"]["h3"]["num"] = [[-2, 0]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, "potential", "validate", str(path), "--json")
    report = json.loads(out)
    assert code == 1 and report["valid"] is False and report["pairs"]


def test_potential_bad_file_exits_2(capsys, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert run(capsys, "potential", "validate", str(path))[0] == 2
    assert run(capsys, "potential", "validate", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "potential", "validate", "builtin:nope")[0] == 2


def test_dpw_verify_example(capsys):
    code, out, _ = run(capsys, "dpw", "verify-example", "--grid", "polar:1.5:4:4", "--json")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_dpw_bad_grid_exits_2(capsys):
    assert run(capsys, "dpw", "run", "--grid", "hex:3")[0] == 2
    assert run(capsys, "dpw", "run", "--grid", "polar:1:3:3", "--lambda", "2")[0] == 2


def test_dpw_run_then_surface_verify(capsys, tmp_path):
    csv_path = tmp_path / "samples.csv"
    code, _, _ = run(capsys, "dpw", "run", "--grid", "rect:0.1:0.5:0.1:0.5:21:21", "--lambda", "1,i",
                     "--out", str(csv_path))
    assert code == 0 and csv_path.exists()
    report_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "surface", "verify", "--input", str(csv_path), "--lambda-index", "1",
                       "--checks", "conformal,willmore,isotropy,swillmore", "--out", str(report_path))
    report = json.loads(report_path.read_text())
    assert code == 0, out
    assert report["checks"]["isotropy"]["passed"]


def test_surface_builtin(capsys):
    code, out, _ = run(capsys, "surface", "verify", "--input", "builtin:example", "--grid", "polar:1.5:5:6",
                       "--checks", "conformal,willmore,isotropy,swillmore,structure,frame,fullness", "--json")
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert report["checks"]["swillmore"]["s_willmore"] is False
    assert report["checks"]["b1_rank"]["values"] == [2]


def test_surface_control_fails(capsys):
    code, out, _ = run(capsys, "surface", "verify", "--input", "builtin:cylinder", "--grid", "polar:0.5:4:4",
                       "--checks", "willmore")
    assert code == 1 and out.startswith("FAIL willmore")


def test_surface_unknown_check(capsys):
    assert run(capsys, "surface", "verify", "--checks", "colour")[0] == 2


def test_golden_subset(capsys, tmp_path):
    code, out, _ = run(capsys, "golden", "run", "--only", "canonical_count", "--out", str(tmp_path))
    assert code == 0 and "[PASS] canonical_count" in out
    assert list(tmp_path.glob("v*/suite_report.json"))
    assert run(capsys, "golden", "run", "--only", "nonsense")[0] == 2


def test_potential_named_builder_file(capsys, tmp_path):
    path = tmp_path / "b.json"
    z = {"num": [[0, 0], [1, 0]], "den": [[1, 0]]}
    path.write_text(json.dumps({"builder": "s6_case2", "h1": z, "h2": 1, "h10": 1, "h30hat": z, "h40hat": 1}))
    code, out, _ = run(capsys, "potential", "classify", str(path), "--json")
    info = json.loads(out)
    assert code == 0 and info["type"] == 2 and info["rank"] == 2
