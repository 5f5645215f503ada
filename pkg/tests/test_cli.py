from __future__ import annotations

import json

import pytest

from hybridtrace import cli


@pytest.fixture(scope="module")
def ledger_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "l2.jsonl"
    assert cli.main(["ledger", "--delta", "2", "--T", "30", "--out", str(p)]) == 0
    return p


def test_field(capsys):
    assert cli.main(["field", "--delta", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["config"]["delta"] == 2 and out["field_discriminant"] == 8


def test_bad_delta(capsys):
    assert cli.main(["field", "--delta", "4"]) == 2
    assert "error" in capsys.readouterr().err


def test_empty_ledger(tmp_path):
    p = tmp_path / "e.jsonl"
    assert cli.main(["ledger", "--delta", "5", "--T", "1.01", "--out", str(p)]) == 0
    assert cli.main(["zeta", str(p), "--m", "1", "--s", "2"]) == 0


def test_missing_ledger(capsys, tmp_path):
    assert cli.main(["stats", "count", str(tmp_path / "nope.jsonl")]) == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("which", cli.STATS_KINDS)
def test_stats_kinds(ledger_file, capsys, which):
    assert cli.main(["stats", which, str(ledger_file)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# ")


def test_stats_json_and_beyond_cutoff(ledger_file, capsys):
    assert cli.main(["stats", "count", str(ledger_file), "--format", "json"]) == 0
    json.loads(capsys.readouterr().out)
    assert cli.main(["stats", "count", str(ledger_file), "--T", "100"]) == 2


def test_trace(ledger_file, capsys):
    assert cli.main(["trace", str(ledger_file), "--m", "2", "--tf-a", "3.0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert {"identity_term", "eh_term", "cusp_term", "spectral_estimate"} <= rep.keys()
    # support needs e^a <= T
    assert cli.main(["trace", str(ledger_file), "--m", "2", "--tf-a", "4.0"]) == 2
    assert "rebuild" in capsys.readouterr().err


def test_zeta_domain(ledger_file, capsys):
    assert cli.main(["zeta", str(ledger_file), "--m", "1", "--s", "1.5+1j,2"]) == 0
    capsys.readouterr()
    assert cli.main(["zeta", str(ledger_file), "--m", "1", "--s", "0.5"]) == 2


@pytest.mark.parametrize("which", ["modular", "pell"])
def test_checks(which, capsys):
    assert cli.main(["check", which]) == 0
