from __future__ import annotations

import json
import math
import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATASET, MOCK_SCRIPT
from pacvd.abstraction import Level, abstract
from pacvd.catalog import default_catalog
from pacvd.evaluation import (
    CalleeRecord, ConfusionMatrix, EmptyGrid, EmptyInput, SampleRecord, SchemaError, build_context,
    build_exemplar_store, cache_key, jaccard, load_dataset, metrics, parse_record,
    run_grid, score, similarity_components, similarity_score, tokens,
)
from pacvd.evaluation.context import sample_hierarchy
from pacvd.llm import Gateway, MockProvider, Verdict

CAT = default_catalog()


@pytest.fixture(scope="module")
def samples():
    return load_dataset(DATASET)


def mock_gateway(**kw):
    return Gateway(MockProvider.from_file(MOCK_SCRIPT), **kw)


# ------------------------------------------------------------------ dataset


def test_two_line_dataset(samples):
    assert [s.id for s in samples] == ["listing1-sg", "balanced-buffer"]
    assert [s.label for s in samples] == ["vulnerable", "safe"]
    assert not any(s.degraded for s in samples)


def test_listing1_record_depths(samples):
    sg = samples[0]
    assert sg.target_name == "sg_common_write"
    assert sorted({c.depth for c in sg.callees}) == [1, 2, 3, 4]


def test_missing_label_reports_line(tmp_path, samples):
    good = json.dumps(samples[1].to_dict())
    bad = dict(samples[1].to_dict(), id="other")
    del bad["label"]
    path = tmp_path / "d.jsonl"
    path.write_text(good + "\n" + json.dumps(bad) + "\n")
    with pytest.raises(SchemaError) as info:
        load_dataset(str(path))
    assert info.value.line == 2 and "label" in str(info.value)


def test_schema_errors(tmp_path):
    base = {"id": "x", "target_name": "f", "target_code": "int f(void) { return 0; }", "label": "safe"}
    for bad in (dict(base, label="maybe"), dict(base, callees=[{"name": "g", "code": "", "depth": 0}])):
        with pytest.raises(SchemaError):
            parse_record(bad, 3)
    path = tmp_path / "d.jsonl"
    path.write_text("{not json\n")
    with pytest.raises(SchemaError):
        load_dataset(str(path))


def test_degraded_target_is_kept():
    rec = parse_record({"id": "x", "target_name": "f", "target_code": "int f( {", "label": "safe"})
    assert rec.degraded
    ctx = build_context(rec, "A2", CAT)
    assert ctx.text == "" and ctx.notes


def test_record_round_trip(samples):
    for s in samples:
        assert parse_record(json.loads(json.dumps(s.to_dict()))) == s


# ------------------------------------------------------------------ contexts


def test_all_callees_depth_then_name(samples):
    ctx = build_context(samples[0], "all-callees", CAT)
    assert ctx.selected == ("blk_end_request_all", "sg_finish_rem_req", "blk_finish_request", "__blk_put_request")
    assert ctx.text.count("// callee ") == 4
    assert "// callee mempool_free" not in ctx.text  # depth 4 lies outside the baseline window


def test_api_guided_matches_abstraction_facts(samples):
    for s in samples:
        facts = abstract(s.target_name, s.units(), CAT, Level.A3, 3).facts
        bearing = {f.callee for f in facts if f.count}
        assert set(build_context(s, "api-guided", CAT).selected) == bearing
    assert build_context(samples[0], "api-guided", CAT).selected == ("sg_finish_rem_req",)


def _layered_sample(per_depth):
    callees = []
    for depth, n in per_depth.items():
        callees += [CalleeRecord(f"d{depth}_{i}", f"void d{depth}_{i}(void) {{ }}", depth) for i in range(n)]
    return SampleRecord("h", "t", "void t(void) { }", "safe", callees)


@pytest.mark.parametrize("seed", range(5))
def test_hierarchy_one_per_depth(seed):
    sample = _layered_sample({1: 2, 2: 2, 3: 2})
    ctx = build_context(sample, "hierarchy", CAT, seed=seed)
    assert [n.split("_")[0] for n in ctx.selected] == ["d1", "d2", "d3"]
    assert not ctx.flagged


def test_hierarchy_quota_wraps_around():
    sample = _layered_sample({1: 3, 2: 1})
    picked = sample_hierarchy(sample.callees, seed=0, quota=3)
    assert sorted(c.depth for c in picked) == [1, 1, 2]


def test_seeded_samplers_reproducible():
    sample = _layered_sample({1: 4, 2: 4, 3: 4, 4: 4})
    for strategy in ("random", "hierarchy", "similarity"):
        runs = {build_context(sample, strategy, CAT, seed=11).text for _ in range(3)}
        assert len(runs) == 1
        assert all("d4_" not in n for n in build_context(sample, strategy, CAT, seed=11).selected)
    picks = {build_context(sample, "random", CAT, seed=s).selected for s in range(10)}
    assert len(picks) > 1


def test_small_samples_return_all_flagged(samples):
    for strategy in ("similarity", "random", "hierarchy"):
        ctx = build_context(samples[1], strategy, CAT)
        assert ctx.selected == ("process", "consume") and ctx.flagged


def test_level_and_none_contexts(samples):
    assert build_context(samples[0], "none", CAT).text == ""
    a1 = build_context(samples[0], "A1", CAT).text
    assert 'On some branches, the "free"' in a1


# ------------------------------------------------------------------ similarity


def test_similarity_examples():
    assert jaccard({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)
    code = "int f(int *p) { free(p); return 0; }"
    [same] = similarity_components(code, [code])
    assert same.token_jaccard == 1.0 and same.edit == 1.0 and same.api_jaccard == 1.0
    [far] = similarity_components("alpha beta gamma", ["1 2 3 4 5 6"])
    assert far.token_jaccard == 0.0 and far.edit <= 0.2


def test_similarity_score_range():
    s = similarity_score("int f(void) { g(); }", "int g(void) { return h(); }")
    assert 0.0 <= s <= 1.0


def _levenshtein_oracle(a, b):
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


_CODE = st.lists(st.sampled_from(["a", "b", "p", "free", "(", ")", ";", "=", "1", "if", "{", "}", "g"]),
                 min_size=1, max_size=25).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(_CODE, _CODE)
def test_symmetric_components(x, y):
    [xy] = similarity_components(x, [y])
    [yx] = similarity_components(y, [x])
    assert xy.token_jaccard == pytest.approx(yx.token_jaccard)
    assert xy.api_jaccard == pytest.approx(yx.api_jaccard)
    assert xy.edit == pytest.approx(yx.edit)
    tx, ty = tokens(x), tokens(y)
    assert xy.edit == pytest.approx(1 - _levenshtein_oracle(tx, ty) / max(len(tx), len(ty)))
    for v in (xy.token_jaccard, xy.api_jaccard, xy.edit, xy.bm25, xy.combined()):
        assert 0.0 <= v <= 1.0


# ------------------------------------------------------------------ metrics


def test_metric_examples():
    r = metrics(ConfusionMatrix(tp=1, tn=1))
    assert (r.accuracy, r.precision, r.recall, r.f1, r.mcc) == (1.0, 1.0, 1.0, 1.0, 1.0)
    r = metrics(ConfusionMatrix(tp=3, fp=1, fn=2, tn=4))
    assert r.precision == pytest.approx(0.75)
    assert r.recall == pytest.approx(0.6)
    assert r.f1 == pytest.approx(2 / 3)
    assert r.mcc == pytest.approx(10 / math.sqrt(600))
    cm, r = score([("safe", "no")] * 5)
    assert cm.tn == 5 and (r.accuracy, r.precision, r.recall, r.f1, r.mcc) == (1.0, 0.0, 0.0, 0.0, 0.0)


def test_unparseable_counts_as_no():
    cm, _ = score([("vulnerable", "unparseable"), ("safe", "unparseable"), ("vulnerable", "yes")])
    assert (cm.tp, cm.fn, cm.tn, cm.unparseable) == (1, 1, 1, 2)


def test_empty_predictions():
    with pytest.raises(EmptyInput):
        score([])


def test_per_cwe_breakdown():
    v = Verdict("yes", "yes", [], 0.0, "m")
    _, r = score([("vulnerable", v), ("safe", v), ("safe", "no")], ["CWE-415", None, None])
    assert set(r.per_cwe) == {"CWE-415", "unlabeled"}
    assert r.per_cwe["CWE-415"].recall == 1.0
    assert r.per_cwe["unlabeled"].accuracy == 0.5


def _direct(tp, fp, fn, tn):
    n = tp + fp + fn + tn
    p = tp / (tp + fp) if tp + fp else 0.0
    rc = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return (tp + tn) / n, p, rc, f1, (tp * tn - fp * fn) / den if den else 0.0


def test_metric_oracle_equivalence():
    rng = random.Random(1234)
    for _ in range(100):
        counts = [rng.randint(0, 50) for _ in range(4)]
        if not sum(counts):
            counts[0] = 1
        r = metrics(ConfusionMatrix(*counts))
        for got, want in zip((r.accuracy, r.precision, r.recall, r.f1, r.mcc), _direct(*counts)):
            assert abs(got - want) <= 1e-12
        assert -1.0 <= r.mcc <= 1.0


# ------------------------------------------------------------------ grid


def test_grid_exact_confusion(samples, tmp_path):
    run = run_grid(samples, ["A1"], ["basic"], mock_gateway(), out_dir=str(tmp_path))
    [cell] = run.cells
    c = cell.confusion
    assert (c.tp, c.fp, c.fn, c.tn, c.unparseable) == (1, 0, 0, 1, 0)
    assert cell.report.f1 == 1.0 and cell.report.mcc == 1.0
    assert run.provider_calls == 2
    assert len(os.listdir(tmp_path / "verdicts")) == 2
    assert "A1" in (tmp_path / "metrics.txt").read_text()


def test_grid_without_abstraction_misses(samples):
    [cell] = run_grid(samples, ["none"], ["basic"], mock_gateway()).cells
    assert (cell.confusion.tp, cell.confusion.fn, cell.confusion.tn) == (0, 1, 1)


def test_empty_grid_fails_before_dispatch(samples):
    gw = mock_gateway()
    for contexts, strategies in ((["A1"], []), ([], ["basic"])):
        with pytest.raises(EmptyGrid):
            run_grid(samples, contexts, strategies, gw)
    assert gw.calls == 0


def test_resume_is_identical_with_zero_calls(samples, tmp_path):
    out = str(tmp_path / "run")
    first = run_grid(samples, ["A1", "A3"], ["basic", "cot"], mock_gateway(), seed=3, out_dir=out)
    before = open(os.path.join(out, "run.json"), "rb").read()
    gw = mock_gateway()
    second = run_grid(samples, ["A1", "A3"], ["basic", "cot"], gw, seed=3, out_dir=out, resume=True)
    assert gw.calls == 0 and second.provider_calls == 0 and second.cache_hits == first.provider_calls
    assert open(os.path.join(out, "run.json"), "rb").read() == before


def test_without_resume_cache_is_rewritten(samples, tmp_path):
    out = str(tmp_path / "run")
    run_grid(samples, ["A1"], ["basic"], mock_gateway(), out_dir=out)
    gw = mock_gateway()
    run_grid(samples, ["A1"], ["basic"], gw, out_dir=out)
    assert gw.calls == 2


def test_failures_are_per_sample(samples):
    gw = Gateway(MockProvider(strict=True))
    run = run_grid(samples, ["A1"], ["basic", "few-shot-random"], gw)
    for cell in run.cells:
        assert not cell.ok and len(cell.failures) == 2
    few = run.cells[1]
    assert all("InsufficientExemplars" in err for _, err in few.failures)


def test_deterministic_across_workers(samples):
    docs = {run_grid(samples, ["A1", "all-callees"], ["basic", "in-context"], mock_gateway(), workers=w).to_json()
            for w in (1, 4)}
    assert len(docs) == 1


def test_exemplar_store_and_leakage(samples):
    store = build_exemplar_store(samples)
    assert {r.id for r in store.records} == {"listing1-sg", "balanced-buffer"}
    run = run_grid(samples, ["A1"], ["few-shot-random"], mock_gateway(), k=1)
    [cell] = run.cells
    assert cell.ok and cell.evaluated == 2  # each sample sees only the other as exemplar


def test_cache_key_sensitivity():
    base = ("s", "A1", "basic", "mock", "abc")
    keys = {cache_key(*base)}
    for i in range(5):
        changed = list(base)
        changed[i] += "x"
        keys.add(cache_key(*changed))
    assert len(keys) == 6
