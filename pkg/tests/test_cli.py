import json

import pytest

from fiberlie import __version__
from fiberlie.cli import dumps, main, run, validate_job, JobError

HEISENBERG = {
    "version": 1, "task": "bracket-closure", "split": [1, 2],
    "fields": {"V1": ["1", "0", "0"], "V2": ["0", "1", "x1"]},
    "distribution": {"generators": ["V1", "V2"], "plane_dim": 2},
}


def write(tmp_path, job, name="job.json"):
    p = tmp_path / name
    p.write_text(json.dumps(job))
    return str(p)


def invoke(tmp_path, job, *flags):
    out = tmp_path / "report.json"
    code = main(["--input", write(tmp_path, job), "--output", str(out), *flags])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def test_heisenberg_job(tmp_path):
    code, rep, _ = invoke(tmp_path, HEISENBERG)
    assert code == 0
    assert rep["tool"] == "fiberlie" and rep["version"] == __version__
    assert rep["result"]["generator_count"] == 3
    assert rep["result"]["closure"]["closure_state"] == "closed"
    assert rep["config"]["effective"]["params"]["max_depth"] == 6
    assert "timings" not in rep


def test_parse_error_reports_position(tmp_path, capsys):
    job = json.loads(json.dumps(HEISENBERG))
    job["fields"]["V1"][2] = "u1^"
    code, rep, _ = invoke(tmp_path, job)
    assert code == 1 and rep is None
    err = json.loads(capsys.readouterr().err)["error"]
    assert err["position"] == 3
    assert err["path"] == "/fields/V1/2"


def test_unknown_fields_are_rejected(tmp_path, capsys):
    job = dict(HEISENBERG, extra=1)
    code, _, _ = invoke(tmp_path, job)
    assert code == 1
    err = json.loads(capsys.readouterr().err)["error"]
    assert err["kind"] == "schema"
    with pytest.raises(JobError) as info:
        validate_job({"version": 1, "task": "leaf", "split": [1, 1], "fields": {}, "distribution": {
            "generators": ["V"]}, "params": {"resolution": 1}})
    assert info.value.path == "/params/resolution"


def test_undefined_field_name(tmp_path, capsys):
    job = json.loads(json.dumps(HEISENBERG))
    job["distribution"]["generators"] = ["V1", "W"]
    assert invoke(tmp_path, job)[0] == 1
    assert json.loads(capsys.readouterr().err)["error"]["path"] == "/distribution/generators/1"


def test_randomized_task_needs_seed(tmp_path, capsys):
    job = {"version": 1, "task": "projection-probe", "split": [1, 1], "set": {"equations": ["u1 - x1"]},
           "params": {"samples": 4}}
    assert invoke(tmp_path, job)[0] == 1
    assert "seed" in json.loads(capsys.readouterr().err)["error"]["message"]
    code, rep, _ = invoke(tmp_path, job, "--seed", "5")
    assert code == 0 and rep["config"]["effective"]["seed"] == 5


def test_depth_cap_zero_scan_exits_two(tmp_path):
    job = {"version": 1, "task": "isometry-scan", "seed": 1, "chart": {"dim": 1, "gamma": {"1,1,1": "x1^3"}},
           "params": {"pairs": [[[0], [0]], [["1/3"], ["1/5"]]]}}
    code, rep, _ = invoke(tmp_path, job, "--max-depth", "0")
    assert code == 2
    assert rep["truncated"] and rep["result"]["outer_approximation"]
    assert rep["config"]["effective"]["params"]["max_depth"] == 0


def test_flags_override_params(tmp_path):
    job = dict(HEISENBERG, params={"max_depth": 5, "gb_budget": 10})
    code, rep, _ = invoke(tmp_path, job, "--max-depth", "1", "--gb-budget", "1000", "--tolerance", "1e-7")
    eff = rep["config"]["effective"]["params"]
    assert (eff["max_depth"], eff["gb_budget"], eff["tolerance"]) == (1, 1000, 1e-7)
    assert rep["config"]["job"]["params"] == {"max_depth": 5, "gb_budget": 10}


def test_groebner_job():
    job = {"version": 1, "task": "groebner", "split": [1, 1], "polynomials": ["u1^2", "u1*x1 + 1"],
           "params": {"reduce": ["u1", "x1"]}}
    rep, code, _ = run(job)
    assert code == 0
    assert rep["result"]["basis"] == [["1"]]
    assert [r["member"] for r in rep["result"]["reductions"]] == [True, True]


def test_chain_job():
    job = {"version": 1, "task": "chain", "split": [1, 0], "stages": [["x1"], ["x1", "x1^2"]],
           "params": {"points": [["1/2"], [0]]}}
    rep, code, _ = run(job)
    assert code == 0 and rep["result"]["global_stationarity_index"] == 1


def test_dinfty_job():
    job = {"version": 1, "task": "dinfty", "split": [1, 2],
           "fields": {"V1": ["1", "0", "0"], "V2": ["0", "1", "x1*u2"]},
           "distribution": {"generators": ["V1", "V2"], "plane_dim": 2},
           "params": {"points": [[1, 2, 0], [1, 2, 3]]}}
    rep, code, _ = run(job)
    assert rep["result"]["set"]["equations"] == ["u2"]
    assert [m["member"] for m in rep["result"]["membership"]] == [True, False]


def test_leaf_job_writes_csv(tmp_path):
    job = {"version": 1, "task": "leaf", "split": [1, 1],
           "fields": {"A": ["1", "u1"], "B": ["0", "u1"]},
           "distribution": {"generators": ["A", "B"]},
           "params": {"z0": [0, 1], "resolution": 5}}
    csv_path = tmp_path / "leaf.csv"
    code, rep, _ = invoke(tmp_path, job, "--csv", str(csv_path))
    assert code == 0 and rep["result"]["tangency"]["passed"]
    assert csv_path.read_text().splitlines()[0] == "t1,t2,z1,z2"


def test_probe_job(tmp_path):
    job = {"version": 1, "task": "projection-probe", "seed": 0, "split": [1, 1],
           "set": {"equations": ["u1*x1 - 1"]}, "params": {"points": [[0], [2]]}}
    rep, code, csv = run(job)
    verdicts = [v["verdict"] for v in rep["result"]["samples"]]
    assert verdicts == ["CERTIFIED-EMPTY", "NONEMPTY"]
    assert csv.splitlines()[0].startswith("x1,")


def test_reports_are_byte_identical(tmp_path):
    job = {"version": 1, "task": "projection-probe", "seed": 11, "split": [1, 2],
           "set": {"equations": ["u1^2 + u2^2 - x1"]}, "params": {"samples": 6, "sample_box": [[-1, 2]]}}
    path = write(tmp_path, job)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["--input", path, "--output", str(a)]) == 0
    assert main(["--input", path, "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    main(["--input", path, "--output", str(c), "--seed", "12"])
    assert c.read_bytes() != a.read_bytes()


def test_timings_only_on_request(tmp_path):
    code, rep, _ = invoke(tmp_path, HEISENBERG, "--timings")
    assert set(rep["timings"]) >= {"closure"}


def test_dumps_sorted():
    text = dumps({"b": 1, "a": [1, 2]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1, 2], "b": 1}


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out
