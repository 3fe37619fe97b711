from __future__ import annotations

import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SNAPSHOTS
from pacvd.prompts import (
    ANALYSIS_SLOT, ANCHORS, ASSISTANT_PLACEHOLDER, SYSTEM, USER, Exemplar, ExemplarStore,
    InsufficientExemplars, PromptBundle, PromptStrategy, UnresolvedPlaceholder, build_prompt, fill,
    load_exemplars, resolve_analysis, select_exemplars,
)

SNAPSHOT = os.path.join(SNAPSHOTS, "prompts.json")
CODE = "void t(char *p) { g(p); }"
API = 'In the "g" function:\nOn all branches, the "free" API is called.'

STORE = ExemplarStore((
    Exemplar("ex-a", "void a(char *p) { free(p); free(p); }", "", "yes"),
    Exemplar("ex-b", "void b(char *p) { free(p); }", "", "no"),
    Exemplar("ex-c", "void c(char *p) { free(p); p = 0; }", "", "no",
             before="void c(char *p) { free(p); free(p); }", after="void c(char *p) { free(p); p = NULL; }"),
    Exemplar("ex-d", "int d(int fd) { return close(fd); }", "", "no",
             before="int d(int fd) { close(fd); return close(fd); }", after="int d(int fd) { return close(fd); }"),
))


def bundles(api: str = API):
    return {s.value: build_prompt(s, CODE, api, STORE, seed=7) for s in PromptStrategy}


@pytest.mark.parametrize("strategy", list(PromptStrategy))
def test_anchor_phrase_present(strategy):
    for api in (API, ""):
        assert ANCHORS[strategy] in build_prompt(strategy, CODE, api, STORE, seed=7).text


def test_snapshots_pin_full_prompts():
    current = {k: b.to_document() for k, b in bundles().items()}
    current.update({f"{k}/no-api": b.to_document() for k, b in bundles("").items()})
    if os.environ.get("PACVD_UPDATE_SNAPSHOTS"):
        with open(SNAPSHOT, "w", encoding="utf-8") as fh:
            json.dump(current, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
    with open(SNAPSHOT, encoding="utf-8") as fh:
        assert json.load(fh) == current


def test_basic_single_turn():
    b = build_prompt(PromptStrategy.BASIC, CODE, API)
    [turn] = b.turns
    assert turn.role == USER
    assert CODE in turn.text and API in turn.text
    assert 'If the code is vulnerable, start your answer with "yes"' in turn.text


def test_role_playing_system_turn():
    b = build_prompt(PromptStrategy.ROLE_PLAYING, CODE, API)
    assert b.turns[0].role == SYSTEM
    assert b.turns[0].text.startswith("You are an expert vulnerability detection system")


@pytest.mark.parametrize("strategy", [PromptStrategy.CHAIN_OF_THOUGHT, PromptStrategy.IN_CONTEXT])
def test_two_turn_shape(strategy):
    b = build_prompt(strategy, CODE, API)
    assert [t.role for t in b.turns] == [USER, ASSISTANT_PLACEHOLDER, USER]
    assert CODE in b.turns[0].text and API in b.turns[0].text


def test_cot_second_turn():
    b = build_prompt(PromptStrategy.CHAIN_OF_THOUGHT, CODE, API)
    assert b.turns[0].text.endswith("locate all positions where pointers are constructed and dereferenced.")
    assert b.turns[2].text.startswith("Based on your previous analysis")
    assert b.pending == (ANALYSIS_SLOT,)


def test_no_api_mode_drops_scaffolding():
    for b in bundles("").values():
        assert "API Information" not in b.text
        assert "API information" not in b.text


def test_few_shot_deterministic():
    a = build_prompt(PromptStrategy.FEW_SHOT_RANDOM, CODE, API, STORE, seed=7)
    b = build_prompt(PromptStrategy.FEW_SHOT_RANDOM, CODE, API, STORE, seed=7)
    assert a.exemplars == b.exemplars and a.prompt_hash == b.prompt_hash


def test_select_examples():
    two = ExemplarStore(STORE.records[:2])
    assert select_exemplars(two, PromptStrategy.FEW_SHOT_RANDOM, 2, seed=3) == ["ex-a", "ex-b"]
    one_paired = ExemplarStore((STORE.records[2],) + tuple(
        Exemplar(f"u{i}", "void u(void) {}") for i in range(5)))
    assert select_exemplars(one_paired, PromptStrategy.FEW_SHOT_CONTRASTIVE, 1, seed=9) == ["ex-c"]
    ten = ExemplarStore(tuple(Exemplar(f"e{i:02d}", "void u(void) {}") for i in range(10)))
    picks = {tuple(select_exemplars(ten, PromptStrategy.FEW_SHOT_RANDOM, 2, seed=s)) for s in range(1, 6)}
    assert len(picks) > 1
    assert select_exemplars(ten, PromptStrategy.FEW_SHOT_RANDOM, 2, seed=1) == \
        select_exemplars(ten, PromptStrategy.FEW_SHOT_RANDOM, 2, seed=1)


def test_insufficient_exemplars():
    with pytest.raises(InsufficientExemplars):
        select_exemplars(ExemplarStore(STORE.records[:1]), PromptStrategy.FEW_SHOT_RANDOM, 2)
    with pytest.raises(InsufficientExemplars):
        build_prompt(PromptStrategy.FEW_SHOT_CONTRASTIVE, CODE, API, None)


def test_leakage_guard():
    ids = build_prompt(PromptStrategy.FEW_SHOT_RANDOM, CODE, API, STORE, seed=7, exclude=("ex-a",)).exemplars
    assert "ex-a" not in ids
    pair = Exemplar("pair:x", "c", before="b", after="a", source_ids=("s1", "s2"))
    store = ExemplarStore((pair, STORE.records[3]))
    with pytest.raises(InsufficientExemplars):
        build_prompt(PromptStrategy.FEW_SHOT_CONTRASTIVE, CODE, API, store, k=2, exclude=("s2",))


def test_fill_is_single_pass():
    assert fill("[CODE]/[API]", {"[CODE]": "[API]", "[API]": "x"}) == "[API]/x"
    with pytest.raises(UnresolvedPlaceholder):
        fill("[CODE]", {})


def test_resolve_analysis_truncates_tail():
    text = resolve_analysis("before [Code Analysis] after", "a" * 100, limit=40)
    assert text.startswith("before aaaa") and text.endswith(" after")
    assert "truncated" in text
    assert len(text) == len("before ") + 40 + len(" after")


def test_document_round_trip():
    for b in bundles().values():
        again = PromptBundle.from_document(json.loads(json.dumps(b.to_document())))
        assert again.turns == b.turns and again.prompt_hash == b.prompt_hash


def test_load_exemplars(tmp_path):
    path = tmp_path / "ex.jsonl"
    path.write_text('{"id": "x1", "code": "void f(void) {}", "label": "no"}\n'
                    '{"id": "x2", "code": "c", "label": "yes", "before": "b", "after": "a", "source_ids": ["s"]}\n')
    store = load_exemplars(str(path))
    assert [r.id for r in store.records] == ["x1", "x2"]
    assert store.get("x2").paired and store.get("x2").touches("s")


_TOKENS = list("abc {}()*;\n") + ["[CODE]", "[API]", "[N]", "[LABEL]", "[CODE1]", "[Code Analysis]"]
_SLOTTY = st.lists(st.sampled_from(_TOKENS), max_size=30).map("".join)


@settings(max_examples=200, deadline=None)
@given(_SLOTTY, _SLOTTY, st.sampled_from(list(PromptStrategy)))
def test_placeholders_resolved_for_fuzzed_inputs(code, api, strategy):
    b = build_prompt(strategy, code, api, STORE, seed=1)
    assert b.placeholders_resolved
    # user content is carried verbatim and never re-substituted: the prompt equals
    # the one built from sentinels, with the sentinels swapped back in
    with_api = bool(api.strip())
    ref = build_prompt(strategy, "QCODEQ", "QAPIQ" if with_api else "", STORE, seed=1)
    expected = [t.text.replace("QCODEQ", code.rstrip()).replace("QAPIQ", api.rstrip()) for t in ref.turns]
    assert [t.text for t in b.turns] == expected
    assert ref.text.count(ANALYSIS_SLOT) == (1 if strategy is PromptStrategy.CHAIN_OF_THOUGHT else 0)
    for slot in ("[CODE]", "[API]", "[N]", "[LABEL]", "[CODE1]", "[CODE2]"):
        assert slot not in ref.text
