from __future__ import annotations

import json
from pathlib import Path

from sbmod.cli import main
from sbmod.dsl import parse_model
from sbmod.verify import Safe, check_safety

FIXTURE = Path(__file__).parent / "fixtures" / "drone.sbm"


def test_validate_ok(capsys):
    assert main(["validate", str(FIXTURE)]) == 0
    assert "4 objects" in capsys.readouterr().out


def test_validate_parse_error(tmp_path, capsys):
    bad = tmp_path / "broken.sbm"
    bad.write_text("model { vars v; object A { sync(; } }")
    assert main(["validate", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_validate_empty_file(tmp_path):
    empty = tmp_path / "empty.sbm"
    empty.write_text("")
    assert main(["validate", str(empty)]) == 2


def test_validate_rejects_sync_free_loop(tmp_path):
    looped = tmp_path / "loop.sbm"
    looped.write_text("model { vars v; object A { loop { } } }")
    assert main(["validate", str(looped)]) == 2


def test_missing_file():
    assert main(["validate", "no/such/file.sbm"]) == 2


def test_run_writes_jsonl(tmp_path, capsys):
    out = tmp_path / "log.jsonl"
    assert main(["run", str(FIXTURE), "--steps", "5", "--log", str(out)]) == 0
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(lines) == 5
    assert lines[0]["step"] == 1
    assert set(lines[0]["assignment"]) == {"v", "h"}


def test_run_seeded_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for target in (a, b):
        assert main(["run", str(FIXTURE), "--steps", "6", "--seed", "9",
                     "--policy", "random-cell", "--log", str(target)]) == 0
    assert a.read_text() == b.read_text()


def test_graph_object_dot(capsys):
    assert main(["graph", str(FIXTURE), "--object", "Navigate", "--simplify"]) == 0
    out = capsys.readouterr().out
    assert out.startswith('digraph "Navigate"')
    assert "h >= 10" in out


def test_graph_single_idle_object(tmp_path, capsys):
    src = tmp_path / "idle.sbm"
    src.write_text("model { vars v; object Idle { loop { sync(); } } }")
    assert main(["graph", str(src), "--object", "Idle", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["states"]) == 1


def test_graph_composite_json(capsys):
    assert main(["graph", str(FIXTURE), "--composite", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["states"]) == 6
    assert len(data["bad"]) == 1


def test_check_violation_and_trace(tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    code = main(["check", str(FIXTURE), "--property", "NoConsecutiveSharpTurns",
                 "--trace", str(trace)])
    assert code == 1
    assert "Violation" in capsys.readouterr().out
    lines = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(lines) == 3  # two steps plus the verdict line
    assert lines[-1]["verdict"] == "BadReached"


def test_check_safe_property(tmp_path, capsys):
    # a property that never marks anything is trivially satisfied
    text = FIXTURE.read_text().replace("mark bad;", "")
    src = tmp_path / "safe.sbm"
    src.write_text(text)
    assert main(["check", str(src), "--property", "NoConsecutiveSharpTurns"]) == 0
    assert "Safe" in capsys.readouterr().out


def test_repair_writes_patch_and_verifies(tmp_path, capsys):
    patch_file = tmp_path / "patch.sbm"
    patched_model = tmp_path / "patched.sbm"
    code = main([
        "repair", str(FIXTURE), "--property", "NoConsecutiveSharpTurns",
        "--out", str(patch_file), "--emit-model", str(patched_model), "--verify",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "blocking h >= 18" in out
    assert "pass" in out
    assert patch_file.read_text().startswith("object Patch {")

    model = parse_model(patched_model.read_text())
    assert "Patch" in model.names()
    prop = model.get("NoConsecutiveSharpTurns")
    rest = model.without("NoConsecutiveSharpTurns")
    assert isinstance(check_safety(rest, prop), Safe)


def test_repair_identity_on_safe_model(tmp_path, capsys):
    text = FIXTURE.read_text().replace("mark bad;", "")
    src = tmp_path / "safe.sbm"
    src.write_text(text)
    assert main(["repair", str(src), "--property", "NoConsecutiveSharpTurns"]) == 0
    assert "identity patch" in capsys.readouterr().out


def test_repair_unrepairable(tmp_path, capsys):
    src = tmp_path / "doomed.sbm"
    src.write_text(
        """
        model { vars v;
          object Go { loop { sync(request = v >= 0); } }
          object Doom { sync(waitfor = true); sync(); mark bad; }
        }
        """
    )
    assert main(["repair", str(src), "--property", "Doom"]) == 1
    assert "unrepairable" in capsys.readouterr().err


def test_unknown_property_name():
    assert main(["check", str(FIXTURE), "--property", "Nope"]) == 2
