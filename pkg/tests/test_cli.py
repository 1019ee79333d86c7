import json
import os
import shutil
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from conftest import fixture_path
from sysgraph import __version__
from sysgraph.cli import main

SCHEMA = json.loads(resources.files("sysgraph").joinpath("cli.schema.json").read_text())
TX = fixture_path("txclient")
EXAMPLE = "G (PaidGas -> F Notified)"


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    env = json.loads(out)
    jsonschema.validate(env, SCHEMA)
    assert env["exit"] == code
    return code, env


class TestCheck:
    def test_counts(self, capsys):
        assert main(["check", TX]) == 0
        assert "TxClient: 19 states, 28 transitions, 2 deadlock states" in capsys.readouterr().out

    def test_json(self, capsys):
        code, env = run_json(capsys, "check", TX)
        assert code == 0
        assert (env["result"]["states"], env["result"]["transitions"]) == (19, 28)

    def test_missing_file(self, capsys):
        assert main(["check", "missing.sg"]) == 2
        err = capsys.readouterr().err
        assert "missing.sg" in err and "E030" in err

    def test_missing_file_json(self, capsys):
        code, env = run_json(capsys, "check", "missing.sg")
        assert code == 2
        assert env["error"]["diagnostics"][0]["code"] == "E030"

    def test_invalid_model(self, capsys, workdir):
        (workdir / "bad.sg").write_text("system A { state s {} init; state s {}; }")
        code, env = run_json(capsys, "check", "bad.sg")
        assert code == 2
        assert env["error"]["diagnostics"][0]["code"] == "E012"

    def test_dump(self, workdir):
        assert main(["check", TX, "--dump", "ts.txt"]) == 0
        assert (workdir / "ts.txt").read_text().startswith("ts v1")


class TestVerify:
    def test_example_fails_with_lasso(self, capsys, workdir):
        assert main(["verify", TX, "--prop", EXAMPLE, "--trace", "cex.txt"]) == 3
        assert "cycle-at" in (workdir / "cex.txt").read_text()

    def test_holds(self, capsys):
        code, env = run_json(capsys, "verify", TX, "--prop", "EF Notified", "--prop", "G true")
        assert code == 0
        assert [p["satisfied"] for p in env["result"]["properties"]] == [True, True]

    def test_unknown_proposition(self, capsys):
        assert main(["verify", TX, "--prop", "G (Unknown)"]) == 2

    def test_archive_labels(self, capsys, workdir):
        assert main(["verify", TX, "--prop", "EF Notified", "--archive"]) == 0
        capsys.readouterr()
        code, env = run_json(capsys, "version", "find", "EF Notified")
        assert code == 0 and len(env["result"]["records"]) == 1


class TestRefine:
    def test_bisim_holds(self, capsys):
        code, env = run_json(capsys, "refine", fixture_path("txclient_base"), TX)
        assert code == 0 and env["result"]["verdict"] == "holds"

    def test_retargeted_fails(self, capsys):
        code, env = run_json(capsys, "refine", TX, fixture_path("txclient_retargeted"))
        assert code == 3 and env["result"]["verdict"] == "fails"

    def test_sim(self):
        assert main(["refine", TX, fixture_path("txclient_base"), "--mode", "sim"]) == 0


class TestSim:
    def test_scripted(self, capsys, workdir):
        code, env = run_json(capsys, "sim", TX, "--feed", "c=1", "--resolve", "scripted:cancel", "--trace", "t.txt")
        assert code == 0
        assert env["result"]["status"] == "terminal"
        assert env["result"]["actions"] == ["c?tx", "payGas", "cancel"]
        assert (workdir / "t.txt").exists()

    def test_feed_file(self, workdir):
        (workdir / "feed.txt").write_text("3\n")
        assert main(["sim", TX, "--feed", "c=@feed.txt"]) == 0

    def test_unfed_is_runtime_fault(self):
        assert main(["sim", TX, "--steps", "20"]) == 2

    def test_parallel(self, capsys):
        code, env = run_json(capsys, "sim", fixture_path("pc_once"), "--seed", "3")
        assert code == 0 and env["result"]["status"] == "terminal"


class TestGen:
    def test_stage_gate(self, capsys):
        code, env = run_json(capsys, "gen", TX, "-o", "b.json")
        assert code == 2
        assert "verif" in env["error"]["message"]

    def test_after_verification(self, workdir):
        assert main(["verify", TX, "--prop", "EF Notified", "--archive"]) == 0
        assert main(["gen", TX, "-o", "b.json"]) == 0
        bundle = json.loads((workdir / "b.json").read_text())
        assert len(bundle["control_flow"]["rows"]) == 7

    def test_failed_property_blocks(self, workdir):
        assert main(["verify", TX, "--prop", EXAMPLE, "--archive"]) == 3
        assert main(["gen", TX, "-o", "b.json"]) == 2

    def test_force_text(self, workdir):
        assert main(["gen", TX, "-o", "b.txt", "--backend", "text", "--force"]) == 0
        assert "class TxClient" in (workdir / "b.txt").read_text()


class TestOther:
    def test_promela(self, workdir):
        assert main(["promela", TX, "-o", "m.pml", "--prop", EXAMPLE]) == 0
        assert "ltl p0" in (workdir / "m.pml").read_text()

    def test_promela_ctl(self):
        assert main(["promela", TX, "-o", "m.pml", "--prop", "AG PaidGas"]) == 2

    def test_embed(self, capsys, workdir):
        code, env = run_json(capsys, "embed", TX, fixture_path("txclient_pending"), "--at", "pending",
                             "-o", "e.sg", "--archive")
        assert code == 0 and env["result"]["renames"] == {}
        assert main(["check", "e.sg"]) == 0

    def test_version_flow(self, capsys):
        assert main(["version", "archive", TX]) == 0
        capsys.readouterr()
        code, env = run_json(capsys, "version", "log", TX)
        assert len(env["result"]["records"]) == 1
        rid = env["result"]["records"][0]["id"]
        code, env = run_json(capsys, "version", "show", rid[:8])
        assert code == 0
        code, env = run_json(capsys, "version", "next", TX)
        assert env["result"]["decision"] == "deliver"
        code, env = run_json(capsys, "version", "next", TX, "--refinable")
        assert env["result"]["decision"] == "iterate"

    def test_unknown_record(self):
        assert main(["version", "show", "deadbeef"]) == 2


class TestUsage:
    def test_no_verb(self):
        assert main([]) == 1

    def test_bad_flag(self, capsys):
        code, env = run_json(capsys, "check", TX, "--bogus")
        assert code == 1

    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0
        assert capsys.readouterr().out.strip() == f"sysgraph {__version__} (skeleton schema 1)"


def test_writes_only_outputs_and_store(workdir):
    main(["check", TX])
    main(["verify", TX, "--prop", "EF Notified", "--archive"])
    (workdir / "out").mkdir()
    main(["gen", TX, "-o", "out/b.json"])
    main(["promela", TX, "-o", "m.pml"])
    main(["refine", TX, TX])
    main(["sim", TX, "--feed", "c=3"])
    assert sorted(p.name for p in workdir.iterdir()) == [".sgv", "m.pml", "out"]
    assert [p.name for p in (workdir / "out").iterdir()] == ["b.json"]


@pytest.mark.skipif(shutil.which("sysgraph") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["sysgraph", "check", TX, "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    jsonschema.validate(json.loads(proc.stdout), SCHEMA)
    proc = subprocess.run([sys.executable, "-m", "sysgraph.cli", "check", "nope.sg"],
                          capture_output=True, text=True, cwd=os.getcwd())
    assert proc.returncode == 2
