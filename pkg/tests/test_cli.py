from __future__ import annotations

import json
import os

import pytest

from conftest import DATASET, GOLDENS, LISTING1_FILES, MOCK_SCRIPT, SNAPSHOTS, read
from pacvd.abstraction import AbstractionReport, normalize
from pacvd.catalog import default_catalog, load_catalog
from pacvd.cli import build_parser, main

MOCK = f"mock:{MOCK_SCRIPT}"
HELP_SNAPSHOT = os.path.join(SNAPSHOTS, "help.txt")
COMMANDS = ("catalog", "abstract", "prompt", "detect", "eval")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PACVD_CONFIG", raising=False)
    monkeypatch.delenv("PACVD_API_KEY", raising=False)
    return tmp_path


def files_in(path):
    return sorted(os.path.relpath(os.path.join(d, f), path) for d, _, fs in os.walk(path) for f in fs)


# ------------------------------------------------------------------ abstract


def test_abstract_listing1_a1(capsys):
    code, out, _ = run(capsys, "abstract", *LISTING1_FILES, "--target", "sg_common_write", "--level", "A1",
                       "--depth", "4")
    assert code == 0
    assert normalize(out) == normalize(read(os.path.join(GOLDENS, "A1.txt")))


def test_abstract_no_activity(capsys, isolated):
    (isolated / "empty.c").write_text("int f(int x) { return x; }\n")
    code, out, _ = run(capsys, "abstract", "empty.c", "--target", "f", "--level", "A3")
    assert code == 0
    assert out.strip() == "No primitive API activity detected within depth 3."


def test_abstract_missing_target(capsys, isolated):
    (isolated / "a.c").write_text("int f(void) { return 0; }\n")
    code, out, err = run(capsys, "abstract", "a.c", "--target", "missing")
    assert code == 1 and out == ""
    assert "RootNotFound" in err and "missing" in err


def test_abstract_parse_error_names_file_and_line(capsys, isolated):
    (isolated / "bad.c").write_text("int f(void) {\n  return 0;\n  if (x\n")
    code, _, err = run(capsys, "abstract", "bad.c", "--target", "f")
    assert code == 1
    assert "ParseError: bad.c:4:1:" in err


def test_abstract_json_round_trip(capsys):
    code, out, _ = run(capsys, "abstract", *LISTING1_FILES, "--target", "sg_common_write", "--level", "A4",
                       "--depth", "4", "--format", "json")
    assert code == 0
    report = AbstractionReport.from_dict(json.loads(out))
    assert report.to_dict() == json.loads(out)
    assert normalize(report.rendered) == normalize(read(os.path.join(GOLDENS, "A4.txt")))


def test_abstract_out_file(capsys, isolated):
    code, out, _ = run(capsys, "abstract", *LISTING1_FILES, "--target", "sg_common_write", "--out", "r.txt")
    assert code == 0 and out == ""
    assert files_in(isolated) == ["r.txt"]


# ------------------------------------------------------------------ catalog


def test_catalog_text_and_json(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == 0 and load_catalog(out) == default_catalog()
    code, out, _ = run(capsys, "catalog", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and any(e["name"] == "free" for e in doc["entries"])


def test_catalog_schema_error(capsys, isolated):
    (isolated / "c.txt").write_text("api a nonsense\n")
    code, _, err = run(capsys, "catalog", "--catalog", "c.txt")
    assert code == 1 and "SchemaError" in err


# ------------------------------------------------------------------ prompt and detect


def test_prompt_preview_is_pure(capsys, isolated):
    code, out, _ = run(capsys, "prompt", *LISTING1_FILES, "--target", "sg_common_write", "--level", "A1",
                       "--depth", "4")
    assert code == 0
    assert out.startswith("# prompt ")
    assert 'On some branches, the "free"' in out
    assert "static int sg_common_write" in out
    assert files_in(isolated) == []


def test_prompt_json_matches_text_hash(capsys):
    args = ("prompt", *LISTING1_FILES, "--target", "sg_common_write", "--strategy", "cot")
    _, text, _ = run(capsys, *args)
    _, doc, _ = run(capsys, *args, "--format", "json")
    assert text.split()[2] == json.loads(doc)["prompt_hash"]


def test_detect_mock_rule(capsys, isolated):
    code, out, _ = run(capsys, "detect", *LISTING1_FILES, "--target", "sg_common_write", "--level", "A1",
                       "--depth", "4", "--provider", MOCK)
    assert code == 0
    assert out.splitlines()[-1] == "yes"
    assert files_in(isolated) == ["sg_common_write.transcript.json"]
    doc = json.loads((isolated / "sg_common_write.transcript.json").read_text())
    assert doc["verdict"]["label"] == "yes" and doc["verdict"]["turns"][-1]["role"] == "assistant"


def test_detect_verdict_no_still_exits_zero(capsys, isolated):
    code, out, _ = run(capsys, "detect", *LISTING1_FILES, "--target", "sg_common_write", "--level", "A2",
                       "--provider", MOCK, "--out", "t.json")
    assert code == 0 and out.splitlines()[-1] == "no"


def test_detect_auth_missing(capsys, isolated):
    (isolated / "cfg.json").write_text(json.dumps({"endpoint": "https://llm.invalid/v1", "model": "m"}))
    code, _, err = run(capsys, "detect", *LISTING1_FILES, "--target", "sg_common_write",
                       "--provider-config", "cfg.json")
    assert code == 1 and "AuthMissing" in err and "PACVD_API_KEY" in err


def test_detect_config_from_env(capsys, isolated, monkeypatch):
    (isolated / "cfg.json").write_text(json.dumps({"model": "m"}))
    monkeypatch.setenv("PACVD_CONFIG", str(isolated / "cfg.json"))
    code, _, err = run(capsys, "detect", *LISTING1_FILES, "--target", "sg_common_write")
    assert code == 1 and "AuthMissing" in err


def test_detect_without_provider(capsys):
    code, _, err = run(capsys, "detect", *LISTING1_FILES, "--target", "sg_common_write")
    assert code == 1 and "no provider" in err


def test_few_shot_prompt_hash_is_stable(capsys, isolated):
    lines = [json.dumps({"id": f"e{i}", "code": f"void e{i}(char *p) {{ free(p); }}", "label": "no"})
             for i in range(6)]
    (isolated / "ex.jsonl").write_text("\n".join(lines) + "\n")
    hashes = []
    for _ in range(2):
        code, out, _ = run(capsys, "detect", *LISTING1_FILES, "--target", "sg_common_write",
                           "--strategy", "few-shot-random", "--seed", "7", "--exemplars", "ex.jsonl",
                           "--provider", MOCK, "--out", "t.json")
        assert code == 0
        hashes.append(out.splitlines()[0])
    assert hashes[0] == hashes[1] and hashes[0].startswith("prompt ")


# ------------------------------------------------------------------ eval


def test_eval_table_and_resume(capsys, isolated):
    args = ("eval", "--dataset", DATASET, "--levels", "A1", "--strategies", "basic", "--provider", MOCK,
            "--out", "run")
    code, first, _ = run(capsys, *args)
    assert code == 0
    row = [l for l in first.splitlines() if l.startswith("A1")][0].split()
    assert row == ["A1", "basic", "100.00", "100.00", "100.00", "100.00", "1.0000", "2", "0", "0"]
    assert files_in(isolated / "run")[:2] == ["metrics.txt", "run.json"]
    saved = (isolated / "run" / "run.json").read_bytes()
    # same provider id, but any dialogue would now fail: only cache hits can reproduce the table
    script = json.loads(read(MOCK_SCRIPT))
    (isolated / "strict.json").write_text(json.dumps({"name": script["name"], "strict": True}))
    code, second, _ = run(capsys, *args[:-4], "--provider", "mock:strict.json", "--out", "run", "--resume")
    assert code == 0 and second == first
    assert (isolated / "run" / "run.json").read_bytes() == saved


def test_eval_bad_dataset_line(capsys, isolated):
    good = open(DATASET, encoding="utf-8").readline()
    (isolated / "d.jsonl").write_text(good + '{"id": "x"}\n')
    code, _, err = run(capsys, "eval", "--dataset", "d.jsonl", "--provider", MOCK)
    assert code == 1 and "SchemaError" in err and "line 2" in err


def test_eval_empty_strategies(capsys):
    code, _, err = run(capsys, "eval", "--dataset", DATASET, "--strategies", "", "--provider", MOCK)
    assert code == 1 and "EmptyGrid" in err


def test_eval_without_out_is_pure(capsys, isolated):
    code, _, _ = run(capsys, "eval", "--dataset", DATASET, "--levels", "A3,none", "--provider", MOCK)
    assert code == 0 and files_in(isolated) == []


# ------------------------------------------------------------------ usage


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["abstract", "x.c", "--target", "f", "--bogus"])
    assert info.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_bad_level_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["abstract", "x.c", "--target", "f", "--level", "A9"])
    assert info.value.code == 2


def _help_text(monkeypatch, capsys) -> str:
    monkeypatch.setenv("COLUMNS", "80")
    chunks = []
    for argv in ([],) + tuple([c] for c in COMMANDS):
        with pytest.raises(SystemExit):
            main(argv + ["--help"])
        chunks.append(f"$ pacvd {' '.join(argv + ['--help'])}\n" + capsys.readouterr().out)
    return "\n".join(chunks)


def test_help_snapshot(monkeypatch, capsys):
    text = _help_text(monkeypatch, capsys)
    if os.environ.get("PACVD_UPDATE_SNAPSHOTS"):
        with open(HELP_SNAPSHOT, "w", encoding="utf-8") as fh:
            fh.write(text)
    assert text == read(HELP_SNAPSHOT)


def test_help_lists_every_flag(monkeypatch, capsys):
    text = _help_text(monkeypatch, capsys)
    parser = build_parser()
    sub = next(a for a in parser._actions if a.choices and "abstract" in a.choices)
    for name, p in sub.choices.items():
        for action in p._actions:
            for flag in action.option_strings:
                assert flag in text, (name, flag)
