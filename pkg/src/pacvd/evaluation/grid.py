"""Evaluation grid: every (context, prompt strategy) cell over every sample.

A run directory holds ``run.json`` (config and per-cell metrics),
``metrics.txt`` (the same numbers as a table) and ``verdicts/`` with one
transcript per (sample, cell).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..catalog import ApiCatalog, default_catalog
from ..llm.gateway import Gateway, Verdict
from ..prompts import Exemplar, ExemplarStore, PromptBundle, PromptStrategy, build_prompt
from .context import BASELINE_DEPTH, build_context, parse_context
from .dataset import SampleRecord
from .metrics import ConfusionMatrix, EmptyInput, MetricsReport, score

logger = logging.getLogger(__name__)

RUN_FILE = "run.json"
TABLE_FILE = "metrics.txt"
VERDICT_DIR = "verdicts"


class EmptyGrid(ValueError):
    pass


def cache_key(sample_id: str, context: str, strategy: str, provider_id: str, prompt_hash: str) -> str:
    doc = json.dumps([sample_id, context, strategy, provider_id, prompt_hash])
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_exemplar_store(samples: Sequence[SampleRecord], api_texts: Optional[Dict[str, str]] = None) -> ExemplarStore:
    """One exemplar per sample, plus a before/after exemplar for every
    vulnerable/safe pair sharing a CVE or fix commit."""
    api_texts = api_texts or {}
    records = [
        Exemplar(s.id, s.target_code, api_texts.get(s.id, ""), "yes" if s.vulnerable else "no",
                 source_ids=(s.id,))
        for s in samples
    ]
    groups: Dict[str, List[SampleRecord]] = {}
    for s in samples:
        key = s.cve or s.commit
        if key:
            groups.setdefault(key, []).append(s)
    for key in sorted(groups):
        vuln = [s for s in groups[key] if s.vulnerable]
        safe = [s for s in groups[key] if not s.vulnerable]
        if vuln and safe:
            before, after = vuln[0], safe[0]
            records.append(Exemplar(
                f"pair:{key}", before.target_code, api_texts.get(before.id, ""), "yes",
                before=before.target_code, after=after.target_code,
                source_ids=(before.id, after.id),
            ))
    return ExemplarStore(tuple(records))


@dataclass
class CellResult:
    context: str
    strategy: str
    confusion: Optional[ConfusionMatrix] = None
    report: Optional[MetricsReport] = None
    failures: List[Tuple[str, str]] = field(default_factory=list)
    evaluated: int = 0

    @property
    def ok(self) -> bool:
        return self.report is not None

    def to_dict(self) -> dict:
        doc = {"context": self.context, "strategy": self.strategy, "evaluated": self.evaluated,
               "failures": [{"sample": s, "error": e} for s, e in self.failures]}
        if self.confusion is not None:
            c = self.confusion
            doc["confusion"] = {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn, "unparseable": c.unparseable}
        if self.report is not None:
            doc["metrics"] = self.report.to_dict()
        return doc


@dataclass
class EvalRun:
    config: dict
    cells: List[CellResult]
    provider_calls: int = 0
    cache_hits: int = 0

    def to_dict(self) -> dict:
        return {"config": self.config, "cells": [c.to_dict() for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        return metrics_table(self.cells)


def metrics_table(cells: Sequence[CellResult]) -> str:
    head = ("Context", "Strategy", "Accuracy", "Precision", "Recall", "F1", "MCC", "N", "Unparsed", "Failed")
    rows = [head]
    for c in cells:
        if c.report is None:
            rows.append((c.context, c.strategy, "-", "-", "-", "-", "-", "0", "0", str(len(c.failures))))
            continue
        r = c.report
        rows.append((c.context, c.strategy, f"{100 * r.accuracy:.2f}", f"{100 * r.precision:.2f}",
                     f"{100 * r.recall:.2f}", f"{100 * r.f1:.2f}", f"{r.mcc:.4f}", str(c.evaluated),
                     str(c.confusion.unparseable), str(len(c.failures))))
    widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
    lines = []
    for n, row in enumerate(rows):
        cols = [row[i].ljust(widths[i]) if i < 2 else row[i].rjust(widths[i]) for i in range(len(row))]
        lines.append("  ".join(cols).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


@dataclass
class _Job:
    cell: int
    sample: SampleRecord
    context: str
    strategy: PromptStrategy


def run_grid(samples: Sequence[SampleRecord], contexts: Iterable[str], strategies: Iterable[str],
             gateway: Gateway, seed: int = 0, out_dir: Optional[str] = None, resume: bool = False,
             catalog: Optional[ApiCatalog] = None, depth_limit: int = BASELINE_DEPTH, k: int = 2,
             workers: Optional[int] = None, exemplars: Optional[ExemplarStore] = None) -> EvalRun:
    """Evaluate every sample under every (context, strategy) cell.

    Cells fail independently: a dispatch error is recorded against the
    sample and the cell is scored over the samples that did complete.
    Few-shot exemplars come from ``exemplars`` when given, otherwise from
    the other samples of the dataset.
    """
    contexts = [parse_context(c) for c in contexts]
    strategies = [PromptStrategy.parse(s) if isinstance(s, str) else s for s in strategies]
    if not contexts or not strategies:
        raise EmptyGrid("the grid needs at least one context and one prompt strategy")
    if not samples:
        raise EmptyGrid("no samples to evaluate")
    catalog = catalog or default_catalog()
    provider_id = gateway.provider.id
    verdict_dir = os.path.join(out_dir, VERDICT_DIR) if out_dir else None
    if verdict_dir:
        os.makedirs(verdict_dir, exist_ok=True)

    context_text: Dict[Tuple[str, str], str] = {}
    for ctx in contexts:
        for s in samples:
            context_text[(s.id, ctx)] = build_context(s, ctx, catalog, seed, depth_limit).text
    stores = {ctx: exemplars if exemplars is not None else build_exemplar_store(samples, {s.id: context_text[(s.id, ctx)] for s in samples})
              for ctx in contexts}

    cells = [(ctx, st) for ctx in contexts for st in strategies]
    jobs = [_Job(i, s, ctx, st) for i, (ctx, st) in enumerate(cells) for s in samples]
    stats = {"calls": 0, "hits": 0}

    def run(job: _Job):
        try:
            bundle = build_prompt(job.strategy, job.sample.target_code, context_text[(job.sample.id, job.context)],
                                  stores[job.context], seed, k, exclude=(job.sample.id,))
            key = cache_key(job.sample.id, job.context, job.strategy.value, provider_id, bundle.prompt_hash)
            path = os.path.join(verdict_dir, key + ".json") if verdict_dir else None
            if resume and path and os.path.exists(path):
                with open(path, encoding="utf-8") as fh:
                    return "hit", Verdict.from_dict(json.load(fh)["verdict"])
            verdict = gateway.complete(bundle)
            if path:
                doc = {"sample": job.sample.id, "context": job.context, "strategy": job.strategy.value,
                       "provider": provider_id, "prompt_hash": bundle.prompt_hash,
                       "prompt": bundle.to_document(),
                       "verdict": {"label": verdict.label, "raw": verdict.raw, "turns": verdict.turns,
                                   "provider_id": verdict.provider_id}}
                _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
            return "call", verdict
        except Exception as exc:  # recorded per sample, the run goes on
            logger.warning("sample %s [%s/%s]: %s", job.sample.id, job.context, job.strategy.value, exc)
            return "error", f"{type(exc).__name__}: {exc}"

    n = workers or gateway.max_in_flight
    with ThreadPoolExecutor(max_workers=n) as pool:
        outcomes = list(pool.map(run, jobs))  # map keeps job order, so the fold below is deterministic

    results = [CellResult(ctx, st.value) for ctx, st in cells]
    per_cell: Dict[int, List[Tuple[SampleRecord, Verdict]]] = {i: [] for i in range(len(cells))}
    for job, (kind, value) in zip(jobs, outcomes):
        if kind == "error":
            results[job.cell].failures.append((job.sample.id, value))
            continue
        stats["hits" if kind == "hit" else "calls"] += 1
        per_cell[job.cell].append((job.sample, value))
    for i, res in enumerate(results):
        pairs = per_cell[i]
        res.evaluated = len(pairs)
        try:
            res.confusion, res.report = score([(s.label, v) for s, v in pairs], [s.cwe for s, _ in pairs])
        except EmptyInput:
            pass

    config = {
        "contexts": contexts,
        "strategies": [s.value for s in strategies],
        "provider": provider_id,
        "seed": seed,
        "depth": depth_limit,
        "exemplars_k": k,
        "catalog_version": catalog.version,
        "samples": [s.id for s in samples],
    }
    evrun = EvalRun(config, results, stats["calls"], stats["hits"])
    if out_dir:
        _atomic_write(os.path.join(out_dir, RUN_FILE), evrun.to_json())
        _atomic_write(os.path.join(out_dir, TABLE_FILE), evrun.table())
    return evrun
