import csv
import json

import pytest

from barren_lab import cli
from barren_lab.circuit import deserialize, brick_example_circuit, serialize

HEADER = ("n,d,observable,entangler,replacement_mode,fraction,samples,seed,m_effective,mean_grad,"
          "stderr_mean,var_grad,stderr_var,pred_eq6,pred_eq12_alpha,alpha_used")


def read_rows(path):
    with open(path, newline="") as fh:
        return [r for r in csv.DictReader(fh) if not r["n"].startswith("#")]


def small_sweep(tmp_path, name="s.csv", *extra):
    out = tmp_path / name
    code = cli.main(["sweep", "--n", "2", "3", "--d", "2", "4", "--samples", "20", "--out", str(out),
                     "-q", *extra])
    assert code == 0
    return out


def test_header_exact():
    assert ",".join(cli.CSV_HEADER) == HEADER


def test_empty_rows_header_only(tmp_path):
    out = tmp_path / "e.csv"
    cli.emit_csv([], out)
    assert out.read_text() == HEADER + "\n"


def test_sweep_rows_and_order(tmp_path):
    out = small_sweep(tmp_path)
    lines = out.read_text().splitlines()
    assert lines[0] == HEADER
    rows = read_rows(out)
    assert [(r["n"], r["d"]) for r in rows] == [("2", "2"), ("2", "4"), ("3", "2"), ("3", "4")]
    assert rows[0]["observable"] == "ZZ"
    # 17 significant digits on non-trivial floats
    digits = rows[0]["var_grad"].replace("-", "").replace(".", "").lstrip("0").split("e")[0]
    assert len(digits) in (16, 17)


def test_rerun_is_byte_identical(tmp_path):
    a = small_sweep(tmp_path, "a.csv")
    b = small_sweep(tmp_path, "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_manifest_rerun_reproduces(tmp_path):
    a = small_sweep(tmp_path, "a.csv", "--seed", "9")
    manifest = json.loads(cli.manifest_path(a).read_text())
    for key in ("config", "seed", "version", "started", "elapsed_s"):
        assert key in manifest
    assert manifest["seed"] == 9
    b = tmp_path / "b.csv"
    assert cli.main(["sweep", "--config", str(cli.manifest_path(a)), "--out", str(b), "-q"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_command_line_overrides_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "variance_sweep", "n_list": [2], "d_list": [3],
                               "samples": 10, "master_seed": 1}))
    out = tmp_path / "o.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--samples", "12", "--out", str(out), "-q"]) == 0
    assert read_rows(out)[0]["samples"] == "12"
    assert read_rows(out)[0]["seed"] == "1"


def test_replacement_sweep_rows(tmp_path):
    out = tmp_path / "r.csv"
    code = cli.main(["sweep", "--experiment", "replacement_sweep", "--n", "3", "--d", "4",
                     "--replacement-mode", "identity", "--fractions", "0", "0.5",
                     "--samples", "20", "--out", str(out), "-q"])
    assert code == 0
    rows = read_rows(out)
    assert [r["fraction"] for r in rows] == ["0.0", "0.5"]
    assert float(rows[1]["m_effective"]) < float(rows[0]["m_effective"])


def test_observable_compare_defaults(tmp_path):
    out = tmp_path / "oc.csv"
    code = cli.main(["sweep", "--experiment", "observable_compare", "--n", "4", "--d", "3",
                     "--samples", "10", "--out", str(out), "-q"])
    assert code == 0
    assert [r["observable"] for r in read_rows(out)] == ["ZZZZ", "ZIZI", "IZIZ", "ZZII", "IIZZ"]


def test_alpha_fitted_and_predictions_filled(tmp_path):
    out = small_sweep(tmp_path)
    rows = read_rows(out)
    assert all(r["alpha_used"] for r in rows)
    assert len({r["alpha_used"] for r in rows}) == 1
    assert float(rows[0]["pred_eq6"]) == pytest.approx(4 / 60)


def test_fixed_alpha(tmp_path):
    out = small_sweep(tmp_path, "f.csv", "--alpha", "3")
    assert {r["alpha_used"] for r in read_rows(out)} == {"3.0"}


def test_truncated_marker(tmp_path, monkeypatch):
    real = cli.sweep_rows

    def interrupted(cfg, progress=None):
        gen = real(cfg, progress)
        yield next(gen)
        raise KeyboardInterrupt

    monkeypatch.setattr(cli, "sweep_rows", interrupted)
    out = small_sweep(tmp_path, "t.csv")
    lines = out.read_text().splitlines()
    assert lines[-1] == cli.TRUNCATED_MARKER
    assert len(lines) == 3
    assert json.loads(cli.manifest_path(out).read_text())["truncated"] is True


@pytest.mark.parametrize("args", [
    ["sweep", "--n", "0"],
    ["sweep", "--samples", "1", "--n", "2", "--d", "2"],
    ["sweep", "--observable", "Z^hI^h", "--n", "3", "--d", "2"],
    ["sweep", "--fractions", "0.5", "--n", "2", "--d", "2"],
])
def test_config_errors_exit_2(args, tmp_path, capsys):
    assert cli.main(args + ["--out", str(tmp_path / "x.csv")]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_file_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert cli.main(["sweep", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"n_list": [2], "unknown_key": 1}))
    assert cli.main(["sweep", "--config", str(bad)]) == 2
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.json")]) == 2


def test_unwritable_path_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = cli.main(["sweep", "--n", "2", "--d", "2", "--samples", "4", "--out",
                     str(blocker / "sub" / "o.csv"), "-q"])
    assert code == 3


def test_verify_exit_0(capsys, tmp_path):
    out = tmp_path / "verify.json"
    assert cli.main(["verify", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "EXPECTED-DIVERGENCE" in text
    assert "0 failed" in text
    assert len(json.loads(out.read_text())) >= 10


def test_verify_failure_exit_1(monkeypatch):
    from barren_lab.verify import FAIL, CheckResult

    monkeypatch.setattr(cli, "run_verify_suite",
                        lambda seed: [CheckResult("broken", FAIL, 1.0, 0.0)])
    assert cli.main(["verify"]) == 1


def test_lightcone_default(capsys):
    assert cli.main(["lightcone", "--trials", "5"]) == 0
    out = capsys.readouterr().out
    grid = [line for line in out.splitlines() if line.startswith("q")]
    assert sum(line.count("[t") for line in grid) == 6
    doc = json.loads(out.strip().splitlines()[-1])
    assert doc["m"] == 6 and doc["gray_slots"] == [4, 7, 8, 10, 11, 12]
    assert doc["soundness"]["violations"] == 0


def test_lightcone_from_file(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(serialize(brick_example_circuit()))
    out = tmp_path / "r.json"
    assert cli.main(["lightcone", "--circuit", str(path), "--observable", "IIIZ", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["m"] == 6


def test_lightcone_bad_circuit_exit_2(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("[1, 2")
    assert cli.main(["lightcone", "--circuit", str(path)]) == 2


def test_channel_table(capsys):
    assert cli.main(["channel", "--n", "1", "--d", "3"]) == 0
    out = capsys.readouterr().out
    assert "13/27" in out and "16/27" in out and "differs" in out


def test_sample_round_trips(capsys):
    assert cli.main(["sample", "--n", "3", "--d", "2", "--seed", "4", "--count", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert serialize(deserialize(lines[0])) == lines[0]


def test_variance_sweep_example(tmp_path):
    out = tmp_path / "v.csv"
    d_list = [str(d) for d in range(5, 65, 5)]
    code = cli.main(["sweep", "--experiment", "variance_sweep", "--n", "2", "4", "--d", *d_list,
                     "--samples", "200", "--out", str(out), "-q"])
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == 24
    for n in ("2", "4"):
        var = [float(r["var_grad"]) for r in rows if r["n"] == n]
        tail = var[3:]
        assert max(tail) / min(tail) < 1.25
    var4 = [float(r["var_grad"]) for r in rows if r["n"] == "4"]
    assert var4[0] < min(var4[3:])
