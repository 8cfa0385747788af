from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from robustkey import __version__
from robustkey.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def jsonl(text):
    lines = [json.loads(ln) for ln in text.splitlines()]
    return lines[0]["header"], lines[1:]


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    return json.loads(lines[0][2:]), list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


# ------------------------------------------------------------------ codes


def test_codes_build_and_inspect(tmp_path, capsys):
    path = tmp_path / "cb.txt"
    code, _, err = run(["codes", "build", "--construction", "mds", "--n", "3", "--d", "2", "--m", "2", "--out", str(path)], capsys)
    assert code == 0 and "verified=2" in err
    body = path.read_text().splitlines()
    assert "size 16" in body
    assert len(body) - body.index("size 16") - 1 == 16
    code, out, _ = run(["codes", "inspect", str(path)], capsys)
    header, rows = jsonl(out)
    assert code == 0 and header["version"] == __version__
    assert rows[0]["log2_size"] == 4 and rows[0]["min_distance"] == 2


def test_codes_build_unsupported(capsys):
    code, _, err = run(["codes", "build", "--n", "5", "--d", "3", "--m", "2"], capsys)
    assert code == 2 and "no MDS" in err


def test_codes_build_capacity(capsys):
    code, _, err = run(["codes", "build", "--construction", "full", "--n", "11", "--m", "2"], capsys)
    assert code == 3 and "capacity" in err


def test_codes_inspect_flags_wrong_distance(tmp_path, capsys):
    path = tmp_path / "cb.txt"
    run(["codes", "build", "--construction", "repetition", "--n", "3", "--m", "1", "--out", str(path)], capsys)
    path.write_text(path.read_text().replace("d 3", "d 2"))
    code, out, _ = run(["codes", "inspect", str(path)], capsys)
    assert code == 1 and jsonl(out)[1][0]["min_distance"] == 3


# ----------------------------------------------------------------- verify


def test_verify_example2(capsys):
    code, out, _ = run(["verify", "--preset", "example2", "--m", "2"], capsys)
    _, rows = jsonl(out)
    assert code == 0 and rows[0]["disagreements"] == 0
    assert set(rows[0]["branch_histogram"]) == {"0", "1"}


def test_verify_example3(capsys):
    assert run(["verify", "--preset", "example3", "--m", "2"], capsys)[0] == 0


def test_verify_weakened(capsys):
    code, out, _ = run(["verify", "--n1", "3", "--n2", "3", "--t", "1", "--d", "1", "--m", "2"], capsys)
    _, rows = jsonl(out)
    assert code == 1 and rows[0]["counterexample"]["agreed"] is False


def test_verify_missing_params(capsys):
    code, _, err = run(["verify", "--n1", "3"], capsys)
    assert code == 2 and "--n2" in err


# ------------------------------------------------------------------ rates


def test_rates_t2_fixture(capsys):
    code, out, _ = run(["rates", "t2", "--m", "8", "--n1", "3", "--n2", "3", "--t", "1", "--format", "csv"], capsys)
    header, rows = csv_rows(out)
    assert code == 0 and header["version"] == __version__
    assert rows[0]["bound"] == "21" and rows[0]["argmax"] == "2"


def test_rates_t2_guard(capsys):
    code, out, _ = run(["rates", "t2", "--m", "8", "--n1", "3", "--n2", "3", "--t", "3"], capsys)
    assert code == 0 and jsonl(out)[1][0]["bound"] == 0


def test_rates_t2_refusal(capsys):
    assert run(["rates", "t2", "--m", "8", "--n1", "2", "--n2", "2", "--t", "1"], capsys)[0] == 2


def test_rates_t4_fixture(capsys):
    code, out, _ = run(["rates", "t4", "--l1", "1", "--l2", "1", "--tau", "0.1", "--format", "csv"], capsys)
    _, rows = csv_rows(out)
    assert code == 0
    assert float(rows[0]["bound"]) == pytest.approx(1.0) and float(rows[0]["argmax"]) == pytest.approx(0.1)


def test_rates_sweep_grid(capsys):
    code, out, _ = run(["rates", "t1", "--n1", "2", "3", "--n2", "3", "--t", "1", "3", "--format", "csv"], capsys)
    _, rows = csv_rows(out)
    assert code == 0 and len(rows) == 4
    assert [r["capacity_zero"] for r in rows] == ["False", "True", "False", "True"]


def test_rates_t3(capsys):
    code, out, _ = run(["rates", "t3", "--n", "3", "--t", "1", "--m", "8"], capsys)
    assert code == 0 and jsonl(out)[1][0]["bound"] == 8


# ------------------------------------------------------- simulate and cbs


def test_simulate_zero_column(capsys):
    code, out, _ = run(["simulate", "--r", "16", "--trials", "40", "--format", "csv"], capsys)
    _, rows = csv_rows(out)
    assert code == 0 and len(rows) == 3  # t = 1 gives three count pairs
    zero = [r for r in rows if r["forward"] == "0" and r["backward"] == "0"]
    assert float(zero[0]["disagreement_rate"]) == 0.0
    assert float(zero[0]["theorem4_bound"]) == pytest.approx(1.0)


def test_cbs_estimate(capsys):
    code, out, _ = run(["cbs", "estimate", "--n", "12", "--trials", "2000", "--codes", "20", "--eps", "0.05"], capsys)
    _, rows = jsonl(out)
    assert code == 0 and rows[0]["p_correction"] == 0.0 and rows[0]["trials"] == 2000


# ---------------------------------------------------------------- plumbing


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": [8], "n1": [3], "n2": [3], "t": [1], "format": "csv"}))
    code, out, _ = run(["rates", "t2", "--config", str(cfg)], capsys)
    header, rows = csv_rows(out)
    assert code == 0 and rows[0]["bound"] == "21" and header["config"]["m"] == [8]
    code, out, _ = run(["rates", "t2", "--config", str(cfg), "--m", "4"], capsys)
    assert csv_rows(out)[1][0]["bound"] == "9"


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["rates", "t1", "--config", str(cfg), "--n1", "1", "--n2", "1", "--t", "1"], capsys)[0] == 2


def test_bad_arguments_exit_2(capsys):
    assert run(["rates", "t2", "--m", "x"], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2


def test_out_file_matches_stdout(tmp_path, capsys):
    argv = ["rates", "t2", "--m", "8", "--n1", "3", "--n2", "3", "--t", "1"]
    _, out, _ = run(argv, capsys)
    path = tmp_path / "o.jsonl"
    run(argv + ["--out", str(path)], capsys)
    assert path.read_text() == out


@pytest.mark.parametrize(
    "argv",
    [
        ["rates", "t4", "--l1", "1", "--l2", "1", "--tau", "0.1"],
        ["verify", "--preset", "example3", "--m", "2"],
        ["simulate", "--r", "16", "--trials", "30", "--seed", "5"],
        ["cbs", "estimate", "--n", "12", "16", "--trials", "3000", "--codes", "30", "--seed", "5"],
    ],
)
def test_reruns_are_byte_identical(argv, capsys):
    first = run(argv, capsys)
    second = run(argv, capsys)
    assert first == second


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "robustkey", "rates", "t3", "--n", "3", "--t", "1", "--m", "8"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(out.stdout.splitlines()[1])["bound"] == 8
