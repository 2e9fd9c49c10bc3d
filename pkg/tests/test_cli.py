"""Command-line driver: subcommands, exit codes, report format."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from pmasafety.cli import main
from pmasafety.models import fixture_text

GOLDEN = Path(__file__).parent / "data" / "cannon.mcmt"


@pytest.fixture(scope="module")
def cannon_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("models") / "cannon.pmas"
    p.write_text(fixture_text("cannon"))
    return str(p)


@pytest.fixture(scope="module")
def trains_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("models") / "trains.pmas"
    p.write_text(fixture_text("trains"))
    return str(p)


def _kv_lines(out: str) -> dict:
    pairs = {}
    for line in out.splitlines():
        if ": " in line:
            k, _, v = line.partition(": ")
            pairs[k] = v
    return pairs


def test_check_unsafe(cannon_path, capsys):
    code = main(["check", cannon_path])
    out = _kv_lines(capsys.readouterr().out)
    assert code == 1
    assert out["status"] == "UNSAFE"
    assert out["guaranteed-termination"] == "True"
    assert "run-template" in out


def test_check_safe(trains_path, capsys):
    code = main(["check", trains_path])
    out = _kv_lines(capsys.readouterr().out)
    assert code == 0
    assert out["status"] == "SAFE"


def test_check_unknown_on_tiny_budget(cannon_path, capsys):
    assert main(["check", cannon_path, "--max-depth", "1"]) == 2
    assert _kv_lines(capsys.readouterr().out)["status"] == "UNKNOWN"


def test_check_goal_override(cannon_path, capsys):
    code = main(["check", cannon_path, "--goal", "loc[j] = nil"])
    assert code == 0
    assert _kv_lines(capsys.readouterr().out)["status"] == "SAFE"


def test_check_trace_out(cannon_path, tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    assert main(["check", cannon_path, "--trace-out", str(trace)]) == 1
    capsys.readouterr()
    lines = [json.loads(l) for l in trace.read_text().splitlines()]
    assert lines and all({"rule", "kind", "template", "action"} <= set(l) for l in lines)


def test_missing_file_is_input_error(capsys):
    assert main(["check", "/no/such/file.pmas"]) == 3
    assert "error" in capsys.readouterr().err


def test_bad_goal_is_input_error(cannon_path, capsys):
    assert main(["check", cannon_path, "--goal", "loc[j] ="]) == 3
    assert "error" in capsys.readouterr().err


def test_encode_report(cannon_path, capsys):
    assert main(["encode", cannon_path]) == 0
    out = _kv_lines(capsys.readouterr().out)
    assert out["rules"] == "22"
    assert out["phases"] == "P0 PL PS"
    assert "rule-1" in out and "rule-22" in out


def test_emit_mcmt_matches_golden(cannon_path, tmp_path, capsys):
    out_file = tmp_path / "cannon.mcmt"
    assert main(["emit-mcmt", cannon_path, "--out", str(out_file)]) == 0
    capsys.readouterr()
    assert out_file.read_text() == GOLDEN.read_text()


def test_emit_mcmt_stdout(cannon_path, capsys):
    assert main(["emit-mcmt", cannon_path]) == 0
    assert capsys.readouterr().out == GOLDEN.read_text()


def test_emit_mcmt_concurrent_rejected(cannon_path, capsys):
    assert main(["emit-mcmt", cannon_path, "--semantics", "concurrent"]) == 3
    assert "error" in capsys.readouterr().err


def test_oracle_reached(cannon_path, capsys):
    assert main(["oracle", cannon_path, "--counts", "Att=1"]) == 1
    out = _kv_lines(capsys.readouterr().out)
    assert out["status"] == "REACHED"
    assert "step-1" in out


def test_oracle_silent_with_interp(cannon_path, tmp_path, capsys):
    interp = tmp_path / "snow.interp"
    interp.write_text("# full snow\nSnow(init, A)\nSnow(init, B)\n")
    code = main(["oracle", cannon_path, "--counts", "Att=1", "--interp", str(interp)])
    assert code == 0
    assert _kv_lines(capsys.readouterr().out)["status"] == "SILENT"


def test_oracle_bad_counts(cannon_path, capsys):
    assert main(["oracle", cannon_path, "--counts", "Nope=2"]) == 3
    assert "unknown template" in capsys.readouterr().err


def test_explain_witness(cannon_path, capsys):
    from pmasafety.dsl import parse_pmas
    from pmasafety.encoder import encode
    from pmasafety.engine import breach
    from pmasafety.mcmt import serialize_witness

    abp = encode(parse_pmas(fixture_text("cannon"), "cannon"), "interleaved")
    v = breach(abp)
    witness = serialize_witness(v.trace, abp.rules)
    assert main(["explain-witness", cannon_path, witness]) == 0
    out = _kv_lines(capsys.readouterr().out)
    assert out["tokens"] == str(len(v.trace))
    assert "step-1" in out
    assert "run-template" in out


def test_explain_witness_malformed(cannon_path, capsys):
    assert main(["explain-witness", cannon_path, "bogus"]) == 3
    capsys.readouterr()


def test_explain_witness_truncated_run(cannon_path, capsys):
    # a lone declare step never commits: not a complete run
    assert main(["explain-witness", cannon_path, "[t1]"]) == 3
    assert "complete run" in capsys.readouterr().err


def test_cross_check_agreement(cannon_path, capsys):
    code = main([
        "cross-check", cannon_path,
        "--max-count", "1", "--oracle-depth", "12", "--interp-budget", "1",
    ])
    out = _kv_lines(capsys.readouterr().out)
    assert code == 0
    assert out["classification"] == "agree-unsafe"
