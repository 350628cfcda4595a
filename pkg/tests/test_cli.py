import json
import subprocess
import sys

import pytest

from theoryforge.cli import main
from theoryforge.corpus import corpus_text

from test_grid import TABLE_P1


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_enumerate_table_golden(capsys):
    code, out, _ = run(capsys, "enumerate", "--corpus", "t3", "--proposition", "P1", "--archetype", "EnablerPlatformTeam")
    assert code == 0
    assert out == TABLE_P1


def test_enumerate_json(capsys):
    code, out, _ = run(capsys, "enumerate", "--corpus", "t3", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["cells"] == 12
    assert [s["proposition"] for s in data["skipped"]] == ["P26", "P27"]
    assert data["grids"][0]["cells"][0]["right"] == {"variable": "Collaboration.frequency", "value": "daily"}


def test_validate_corpus(capsys):
    code, out, _ = run(capsys, "validate", "--corpus", "t3")
    assert code == 0
    assert out.strip().endswith("ok: 0 errors, 4 warning(s)")


def test_validate_broken_file(tmp_path, capsys):
    f = tmp_path / "bad.theory"
    f.write_text(corpus_text("t3").replace("Team.responsibility_sharing ->", "Team.velocity ->"))
    code, _, err = run(capsys, "validate", str(f))
    assert code == 1
    assert "Team.velocity" in err and "1 error(s)" in err


def test_validate_json_syntax_error(tmp_path, capsys):
    f = tmp_path / "bad.theory"
    f.write_text('theory "x" {\n  construct {\n}')
    code, out, _ = run(capsys, "validate", str(f), "--format", "json")
    data = json.loads(out)
    assert code == 1 and not data["ok"]
    assert data["diagnostics"][0]["location"].startswith(str(f) + ":2:")


def test_stats(capsys):
    code, out, _ = run(capsys, "stats", "--corpus", "t3", "--refined", "--archetype", "EnablerPlatformTeam")
    assert code == 0
    assert out.splitlines() == [
        "constructs: 2, variables: 11, indicator values: 29, propositions: 4 (strategic 2, taxonomic 2)",
        "taxonomy-only constructs: 4",
        "cells: 12",
        "retained: 4, pruned_absence: 4, pruned_abductive: 0, merged_away: 8, decomposed_away: 0",
        "selected for EnablerPlatformTeam: 2",
    ]


def test_refine_with_corpus_rules(capsys):
    code, out, _ = run(capsys, "refine", "--corpus", "t3", "--rules", "corpus:t3", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["counts"]["retained"] == 4
    assert data["audit"][0]["matched"] == ["H1.1"]
    h11 = next(h for h in data["hypotheses"] if h["id"] == "H1.1")
    assert h11["constituent_cells"] == ["h1.1", "h1.4"]


def test_refine_text(capsys):
    code, out, _ = run(capsys, "refine", "--corpus", "t3")
    assert code == 0
    assert "excluded P26: taxonomic" in out
    assert any(line.startswith("H1.1 ") and "h1.1+h1.4" in line for line in out.splitlines())


def test_instantiate(capsys):
    code, out, err = run(capsys, "instantiate", "--corpus", "t3", "--archetype", "EnablerPlatformTeam")
    assert code == 0
    assert out.splitlines()[-1] == "2 hypothesis(es) selected for EnablerPlatformTeam"
    assert "unassigned variables" in err


def test_trace_formats(capsys):
    code, out, _ = run(capsys, "trace", "--corpus", "t3", "--hypothesis", "H1.1")
    assert code == 0 and out.startswith("H1.1 <- h1.1, h1.4 <- P1")
    code, out, _ = run(capsys, "trace", "--corpus", "t3", "--hypothesis", "H1.1", "--format", "dot")
    assert out.startswith('digraph "hypothesis:H1.1"')
    code, out, _ = run(capsys, "trace", "--corpus", "t3", "--full", "--format", "json")
    assert len(json.loads(out)["nodes"]) == 84


def test_protocol_to_file(tmp_path, capsys):
    target = tmp_path / "protocol.md"
    code, out, _ = run(capsys, "protocol", "--corpus", "t3", "--out", str(target))
    assert code == 0 and out == ""
    assert "### H1.1" in target.read_text()


def test_stamp_is_opt_in(capsys):
    _, plain, _ = run(capsys, "stats", "--corpus", "t3", "--format", "json")
    assert "generated_at" not in plain
    _, stamped, _ = run(capsys, "stats", "--corpus", "t3", "--format", "json", "--stamp")
    assert "generated_at" in json.loads(stamped)


def test_convert_round_trip(tmp_path, capsys):
    _, js, _ = run(capsys, "convert", "--corpus", "t3", "--to", "json")
    f = tmp_path / "t3.json"
    f.write_text(js)
    _, text, _ = run(capsys, "convert", str(f), "--to", "theory")
    g = tmp_path / "t3.theory"
    g.write_text(text)
    code, out, _ = run(capsys, "stats", str(g))
    assert code == 0 and out.startswith("constructs: 2, variables: 11")


@pytest.mark.parametrize(
    "argv",
    [
        ["enumerate", "--corpus", "t3", "--proposition", "P26"],
        ["enumerate", "--corpus", "t3", "--proposition", "P99"],
        ["instantiate", "--corpus", "t3", "--archetype", "Nope"],
        ["trace", "--corpus", "t3", "--hypothesis", "H9.9"],
        ["trace", "--corpus", "t3"],
        ["refine", "--corpus", "t3", "--rules", "/does/not/exist"],
        ["stats"],
        ["enumerate", "/does/not/exist.theory"],
    ],
)
def test_failures_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.strip()


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["enumerate", "--format", "xml", "--corpus", "t3"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["enumerate", "--corpus", "nope"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "theoryforge", "stats", "--corpus", "t3"],
        capture_output=True, text=True, env={"THEORYFORGE_NO_COLOR": "1", "PATH": ""},
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("constructs: 2")
