import csv
import json

import numpy as np
import pytest

from curvcone import cli
from curvcone.curvop import SymOperator, identity, random_operator, save_operator
from curvcone.liealg import build_algebra


def write_config(tmp_path, **cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def run_main(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- usage errors


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["algebra", "--name", "gl", "--n", "3"],
        ["algebra", "--name", "so", "--n", "1"],
        ["membership", "--family", "fullso"],  # seed is mandatory
        ["membership", "--family", "nosuch", "--seed", "0"],
        ["kahler", "--check", "lemma", "--s", "abc"],
        ["kahler", "--check", "lemma", "--s", "-1e-3"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, _, _ = run_main(argv, capsys)
    assert code == 2


@pytest.mark.parametrize(
    "cfg",
    [
        {"experiment": "membership", "seed": 0, "famly": "fullso"},
        {"experiment": "membership", "family": "fullso"},
        {"experiment": "membership", "seed": -1},
        {"experiment": "membership", "seed": 2**64},
        {"experiment": "membership", "seed": True},
        {"experiment": "membership", "seed": 1.5},
        {"experiment": "theorem1", "seed": 0, "n": 0},
        {"experiment": "theorem1", "seed": 0, "trials": 2.0},
        {"experiment": "flow", "seed": 0, "eps": "x"},
        {"experiment": "flow", "seed": 0, "field": "heat"},
        {"experiment": "nothing", "seed": 0},
        {"seed": 0},
    ],
)
def test_strict_config_rejected(cfg, tmp_path, capsys):
    code, _, err = run_main(["experiment", "--config", write_config(tmp_path, **cfg)], capsys)
    assert code == 2
    assert "error" in err


def test_unreadable_configs(tmp_path, capsys):
    assert run_main(["experiment", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run_main(["experiment", "--config", str(bad)], capsys)[0] == 2
    lst = tmp_path / "list.json"
    lst.write_text("[1, 2]", encoding="utf-8")
    assert run_main(["experiment", "--config", str(lst)], capsys)[0] == 2


def test_validate_config_returns_copy():
    cfg = {"experiment": "membership", "seed": 3, "family": "fullso", "h": 0}
    out = cli.validate_config(cfg)
    assert out == cfg and out is not cfg


# ---------------------------------------------------------------- subcommands


def test_membership_of_identity_is_one(tmp_path, capsys):
    out = tmp_path / "m.json"
    cfg = write_config(tmp_path, experiment="membership", family="fullso", R="identity", seed=0, output=str(out))
    code, _, _ = run_main(["experiment", "--config", cfg], capsys)
    assert code == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert abs(doc["min_value"] - 1.0) < 1e-8
    assert doc["closed_form"] == pytest.approx(1.0)


def test_membership_subcommand_with_operator_file(tmp_path, capsys):
    L = build_algebra("so", 4)
    R = SymOperator(L, np.diag([-2.0, 1, 1, 1, 1, 3]))
    path = tmp_path / "R.json"
    save_operator(R, path)
    code, stdout, _ = run_main(["membership", "--R", str(path), "--family", "fullso", "--seed", "1"], capsys)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["min_value"] == pytest.approx(-2.0, abs=1e-8)
    assert doc["in_cone"] is False


def test_membership_rejects_operator_on_wrong_algebra(tmp_path, capsys):
    path = tmp_path / "R.json"
    save_operator(identity(build_algebra("so", 3)), path)
    code, _, _ = run_main(["membership", "--R", str(path), "--family", "fullso", "--n", "4", "--seed", "0"], capsys)
    assert code == 2


@pytest.mark.parametrize("name,n", [("so", 4), ("iso", 3), ("u", 2)])
def test_algebra_dump_reproduces_structure(name, n, tmp_path, capsys):
    path = tmp_path / "c.json"
    code, stdout, _ = run_main(["algebra", "--name", name, "--n", str(n), "--dump", str(path)], capsys)
    assert code == 0
    info = json.loads(stdout)
    L = build_algebra(name, n)
    assert info["dim"] == L.dim
    c = np.zeros((L.dim,) * 3)
    for a, b, k, v in json.loads(path.read_text(encoding="utf-8")):
        c[a, b, k] = v
    assert np.array_equal(c, L.structure)


def test_sharp_subcommand(tmp_path, capsys):
    L = build_algebra("so", 5)
    path = tmp_path / "I.json"
    save_operator(identity(L), path)
    code, stdout, _ = run_main(["sharp", "--in", str(path)], capsys)
    assert code == 0
    S = SymOperator.from_dict(json.loads(stdout))
    assert np.allclose(S.mat, 3 * np.eye(L.dim))
    # the adjoint form is not defined on iso(n)
    save_operator(identity(build_algebra("iso", 3)), path)
    assert run_main(["sharp", "--in", str(path)], capsys)[0] == 2
    assert run_main(["sharp", "--in", str(path), "--form", "coadjoint"], capsys)[0] == 0
    assert run_main(["sharp", "--in", str(tmp_path / "none.json")], capsys)[0] == 2


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_flow_csv_schema_and_identity_solution(tmp_path, capsys):
    out = tmp_path / "flow.json"
    argv = ["flow", "--field", "ricci", "--t-end", "0.2", "--samples", "6", "--family", "fullso",
            "--n", "4", "--h", "0", "--seed", "0", "--output", str(out)]
    code, _, _ = run_main(argv, capsys)
    assert code == 0
    rows = read_csv(out.with_suffix(".csv"))
    assert rows[0] == ["t", "norm", "scal", "margin_F", "margin_dinfF"]
    assert len(rows) == 7
    for row in rows[1:]:
        t, margin, dinf = float(row[0]), float(row[3]), row[4]
        assert margin == pytest.approx(1 / (1 - 3 * t), rel=1e-6)
        # FullSO has no boundary at infinity, so the column stays blank
        assert dinf == ""


def test_flow_without_family_has_blank_margins(tmp_path, capsys):
    path = tmp_path / "traj.csv"
    code, _, _ = run_main(["flow", "--t-end", "0.1", "--samples", "3", "--seed", "0", "--csv", str(path)], capsys)
    assert code == 0
    rows = read_csv(path)
    assert all(r[3] == "" and r[4] == "" for r in rows[1:])


def test_flow_failure_exits_1(tmp_path, capsys):
    argv = ["flow", "--t-end", "0.1", "--samples", "3", "--family", "fullso", "--h", "5", "--seed", "0",
            "--output", str(tmp_path / "f.json")]
    code, _, err = run_main(argv, capsys)
    assert code == 1
    assert json.loads(err)["failures"]


def test_runs_are_reproducible(tmp_path, capsys):
    L = build_algebra("so", 4)
    path = tmp_path / "R0.json"
    save_operator(random_operator(L, np.random.default_rng(0)), path)
    docs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        argv = ["flow", "--R0", str(path), "--t-end", "0.3", "--samples", "4", "--family", "nilrank2",
                "--seed", "9", "--output", str(out)]
        run_main(argv, capsys)
        docs.append((out.read_bytes(), out.with_suffix(".csv").read_bytes()))
    assert docs[0] == docs[1]


def test_parallel_runs_match_serial(monkeypatch):
    cfg = cli.validate_config({"experiment": "theorem1", "n": 4, "trials": 3, "seed": 5, "starts": 4})
    serial = cli.run(cfg).to_dict()
    monkeypatch.setenv("CURVCONE_THREADS", "4")
    parallel = cli.run(cfg).to_dict()
    for a, b in zip(serial["certificates"], parallel["certificates"]):
        assert a["family"] == b["family"] and a["trial"] == b["trial"]
        assert abs(a["min_value"] - b["min_value"]) <= 1e-12
        assert abs(a["sharp_value"] - b["sharp_value"]) <= 1e-12


def test_kahler_lemma_with_step_list(tmp_path, capsys):
    out = tmp_path / "k.json"
    argv = ["kahler", "--check", "lemma", "--n", "2", "--seed", "2", "--s", "1e-3,5e-4", "--trials", "2",
            "--output", str(out)]
    assert run_main(argv, capsys)[0] == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["passed"] and len(doc["trials"]) == 2


def test_kahler_bochner(capsys):
    code, stdout, _ = run_main(["kahler", "--check", "bochner", "--n", "3", "--trials", "3"], capsys)
    assert code == 0
    assert json.loads(stdout)["passed"]


def test_verify_theorem1_battery(tmp_path, capsys):
    out = tmp_path / "t1.json"
    argv = ["verify", "--suite", "theorem1", "--n", "4", "--trials", "10", "--seed", "1", "--output", str(out)]
    assert run_main(argv, capsys)[0] == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    certs = doc["certificates"]
    families = sorted({c["family"] for c in certs})
    # ten certificates for each family of the battery
    assert all(sum(c["family"] == f for c in certs) == 10 for f in families)
    assert len(families) == 7
    assert all(c["passed"] for c in certs)


def test_pinching_a_experiment(tmp_path, capsys):
    out = tmp_path / "pa.json"
    cfg = write_config(tmp_path, experiment="pinching_a", n=2, seed=3, output=str(out))
    assert run_main(["experiment", "--config", cfg], capsys)[0] == 0
    rows = read_csv(out.with_suffix(".csv"))[1:]
    assert rows
    for row in rows:
        norm, mF, mI = float(row[1]), float(row[3]), float(row[4])
        assert np.isfinite(mF)
        assert mI >= -1e-5 * (1 + norm)


def test_trace_harnack_and_constrained_configs(tmp_path, capsys):
    for name, extra in (("trace_harnack", {"n": 3}), ("constrained", {"n": 2, "p": 0.5, "s": 0.01})):
        cfg = write_config(tmp_path, experiment=name, seed=0, trials=2, output=str(tmp_path / f"{name}.json"),
                           **extra)
        assert run_main(["experiment", "--config", cfg], capsys)[0] == 0
