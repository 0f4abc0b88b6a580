from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conftest import CORPUS_DIR, fixture_path


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "sprw.cli", *args],
        capture_output=True,
        text=True,
    )


def test_run_scenario6_single_record():
    r = run_cli(
        "run",
        "--patterns", str(fixture_path("scenario6.sprw")),
        "--trace", str(fixture_path("scenario6.trace.jsonl")),
    )
    assert r.returncode == 0, r.stderr
    records = [json.loads(line) for line in r.stdout.splitlines()]
    assert len(records) == 1
    assert records[0]["pattern"] == "electricity_alert"
    assert records[0]["intermediates"] == {"total": 210}


def test_run_empty_trace(tmp_path):
    trace = tmp_path / "empty.jsonl"
    trace.write_text("")
    r = run_cli("run", "--patterns", str(fixture_path("scenario6.sprw")), "--trace", str(trace))
    assert r.returncode == 0
    assert r.stdout == ""


def test_run_scenario5_two_records():
    r = run_cli(
        "run",
        "--patterns", str(fixture_path("scenario5.sprw")),
        "--trace", str(fixture_path("scenario5.trace.jsonl")),
    )
    assert r.returncode == 0
    records = [json.loads(line) for line in r.stdout.splitlines()]
    assert [rec["reaction"] for rec in records] == [
        "activate_home_scene",
        "activate_leave_scene",
    ]


def test_run_output_is_byte_deterministic(tmp_path):
    out1 = tmp_path / "a.jsonl"
    out2 = tmp_path / "b.jsonl"
    for out in (out1, out2):
        r = run_cli(
            "run",
            "--patterns", str(fixture_path("scenario7.sprw")),
            "--trace", str(fixture_path("scenario7.trace.jsonl")),
            "--out", str(out),
        )
        assert r.returncode == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_run_parse_error_exit_2(tmp_path):
    bad = tmp_path / "bad.sprw"
    bad.write_text("pattern p as\n")
    r = run_cli("run", "--patterns", str(bad), "--trace", str(fixture_path("scenario6.trace.jsonl")))
    assert r.returncode == 2
    assert "error" in r.stderr


def test_run_diagnostics_exit_3(tmp_path):
    pats = tmp_path / "diag.sprw"
    pats.write_text("pattern p as {:a, x} when x > :oops\n")
    trace = tmp_path / "t.jsonl"
    trace.write_text('{"ts": 0, "type": ":a", "attrs": [1]}\n')
    r = run_cli("run", "--patterns", str(pats), "--trace", str(trace))
    assert r.returncode == 3
    assert "TypeMismatch" in r.stderr


def test_trace_regression_exit_2(tmp_path):
    trace = tmp_path / "bad.jsonl"
    trace.write_text(
        '{"ts": 100, "type": ":a", "attrs": [1]}\n{"ts": 50, "type": ":a", "attrs": [1]}\n'
    )
    r = run_cli("run", "--patterns", str(fixture_path("scenario6.sprw")), "--trace", str(trace))
    assert r.returncode == 2
    assert "timestamp regression at line 2" in r.stderr


def test_check_reports_shared_variables_fig9():
    r = run_cli("check", "--patterns", str(CORPUS_DIR / "fig9.sprw"))
    assert r.returncode == 0
    assert "shared variable 'id' across constituents 1, 2, 3" in r.stdout


def test_check_reports_no_sharing_fig10c():
    r = run_cli("check", "--patterns", str(CORPUS_DIR / "fig10c.sprw"))
    assert r.returncode == 0
    lines = [l for l in r.stdout.splitlines() if "occupied_home" in l or "shared" in l]
    assert any("shared variables: none" in l for l in lines)


def test_check_malformed_option_exit_2(tmp_path):
    bad = tmp_path / "bad.sprw"
    bad.write_text("pattern p as {:a, x}, options: [sequenced: true]\n")
    r = run_cli("check", "--patterns", str(bad))
    assert r.returncode == 2
    for key in ("seq", "interval", "last", "debounce"):
        assert key in r.stderr


def test_oracle_identical_on_fixture():
    r = run_cli(
        "oracle",
        "--patterns", str(fixture_path("scenario7.sprw")),
        "--trace", str(fixture_path("scenario7.trace.jsonl")),
        "--diff",
    )
    assert r.returncode == 0
    assert "identical (2 records)" in r.stdout


def test_oracle_perturbed_reports_divergence():
    r = run_cli(
        "oracle",
        "--patterns", str(fixture_path("scenario4.sprw")),
        "--trace", str(fixture_path("scenario4.trace.jsonl")),
        "--diff", "--perturb",
    )
    assert r.returncode == 1
    assert "first divergence" in r.stdout
    assert "engine:" in r.stdout and "oracle:" in r.stdout


def test_fuzz_subcommand_smoke():
    r = run_cli("fuzz", "--count", "8", "--events", "60", "--seed", "99")
    assert r.returncode == 0, r.stderr
    assert "ok: 8 cases identical" in r.stdout


@pytest.mark.parametrize("i", range(1, 8))
def test_all_scenarios_replay_to_expected_bytes(i, tmp_path):
    out = tmp_path / "out.jsonl"
    r = run_cli(
        "run",
        "--patterns", str(fixture_path(f"scenario{i}.sprw")),
        "--trace", str(fixture_path(f"scenario{i}.trace.jsonl")),
        "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    assert out.read_bytes() == fixture_path(f"scenario{i}.expected.jsonl").read_bytes()
