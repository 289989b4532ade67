import json

import pytest

from toeplitz_pnt.cli import main
from toeplitz_pnt.toeplitz import ToeplitzSkeleton


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    out = tmp_path_factory.mktemp("a")
    assert main(["construct", "--theorem", "A", "--c", "2", "--stages", "3", "--seed", "0", "--out", str(out)]) == 0
    return out


def test_construct_outputs(built):
    skel = ToeplitzSkeleton.load(built / "skeleton.txt")
    assert skel.periods == (30, 2310, 9699690)
    recs = [json.loads(line) for line in (built / "certificates.jsonl").read_text().splitlines()]
    assert recs and all(r["passed"] for r in recs)
    holes = (built / "holes.csv").read_text().splitlines()
    assert holes[0] == "stage,period,holes,holes_over_period,holes_over_phi"
    assert holes[1].startswith("1,30,8,")
    assert any(line.startswith("# config_sha256: ") for line in holes)


def test_construct_is_byte_identical(built, tmp_path):
    assert main(["construct", "--theorem", "A", "--c", "2", "--stages", "3", "--seed", "0", "--out", str(tmp_path)]) == 0
    for name in ("skeleton.txt", "certificates.jsonl", "holes.csv"):
        assert (tmp_path / name).read_bytes() == (built / name).read_bytes()


def test_validate_clean(built, capsys):
    code, out, _ = _run(capsys, "validate", "--skeleton", built / "skeleton.txt", "--theorem", "A", "--stages", "1", "2")
    assert code == 0
    assert {json.loads(x)["stage"] for x in out.splitlines()} == {1, 2}


def test_validate_injected_t3(built, tmp_path, capsys):
    lines = (built / "skeleton.txt").read_text().splitlines()
    i = next(j for j, line in enumerate(lines) if line.startswith("30:"))
    word = list(lines[i][3:])
    word[4] = "?"  # even hole while 2 divides 30
    lines[i] = "30:" + "".join(word)
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(lines) + "\n")
    code, _, err = _run(capsys, "validate", "--skeleton", bad, "--theorem", "A", "--stages", "1")
    assert code == 1
    assert "stage 1: t3" in json.loads(err)["failed"]


def test_schema_errors(built, capsys):
    code, _, err = _run(capsys, "average", "--skeleton", built / "skeleton.txt", "--kind", "primes", "--N", "0")
    assert code == 2 and json.loads(err)["error"] == "schema"
    code, _, _ = _run(capsys, "residues", "--poly", "m^2", "--n-min", "10", "--n-max", "3")
    assert code == 2
    code, _, _ = _run(capsys, "construct", "--theorem", "A")
    assert code == 2


def test_build_refusal_exit_code(tmp_path, capsys):
    code, _, err = _run(capsys, "construct", "--theorem", "A", "--c", "100", "--out", tmp_path)
    assert code == 4
    assert json.loads(err)["condition"] == "t6.5"


def test_missing_file(capsys):
    code, _, err = _run(capsys, "oscillate", "--skeleton", "/nonexistent/skel.txt", "--kind", "primes")
    assert code == 5 and "error" in json.loads(err)


def test_average_csv(built, capsys):
    argv = ["average", "--skeleton", built / "skeleton.txt", "--kind", "primes", "--N", "1000", "100000",
            "--r", "0", "1", "--predict-stage", "2"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    lines = out.splitlines()
    body = [x for x in lines[1:] if not x.startswith("#")]
    assert len(body) == 4
    meta = dict(x[2:].split(": ", 1) for x in lines if x.startswith("# "))
    assert {"command", "config_sha256", "numpy", "toeplitz_pnt"} <= set(meta)
    assert _run(capsys, *argv)[1] == out


def test_config_file_merge(built, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"skeleton": str(built / "skeleton.txt"), "kind": "primes", "N": [500]}))
    _, from_file, _ = _run(capsys, "average", "--config", cfg)
    _, overridden, _ = _run(capsys, "average", "--config", cfg, "--N", "600")
    assert from_file.splitlines()[1].split(",")[1] == "500"
    assert overridden.splitlines()[1].split(",")[1] == "600"
    cfg.write_text(json.dumps({"skeleton": "x", "kind": "primes", "N": [500], "bogus": 1}))
    assert _run(capsys, "average", "--config", cfg)[0] == 2


def test_oscillate_and_residues(built, capsys):
    code, out, _ = _run(capsys, "oscillate", "--skeleton", built / "skeleton.txt", "--kind", "primes")
    assert code == 0 and out.splitlines()[0] == "stage,period,average,gap"
    code, out, _ = _run(capsys, "residues", "--poly", "m^2", "--n-min", "1", "--n-max", "12")
    assert code == 0
    rows = [x.split(",") for x in out.splitlines()[1:13]]
    assert rows[7][:2] == ["8", "3"]  # squares mod 8: 0, 1, 4


def test_bounded_and_squares_construct(tmp_path):
    assert main(["construct", "--theorem", "bounded", "--periods", "2", "4", "8", "--holes", "1",
                 "--out", str(tmp_path / "b")]) == 0
    assert ToeplitzSkeleton.load(tmp_path / "b" / "skeleton.txt").periods == (2, 4, 8)
    assert main(["construct", "--theorem", "squares", "--stages", "2", "--out", str(tmp_path / "s")]) == 0


def test_sturmian_command(capsys):
    code, out, _ = _run(capsys, "--threads", "2", "sturmian", "--N", "100000")
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert row[0] == "100000" and row[6] == "1"


def test_acceptance_subset(tmp_path, capsys):
    code, out, _ = _run(capsys, "acceptance", "--only", "4", "--out", tmp_path)
    assert code == 0 and out.split()[:2] == ["[PASS]", "4"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary[0]["number"] == 4 and summary[0]["passed"]
