"""What accompanies the target code in a prompt: an abstraction report or raw callee code."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from ..abstraction import Level, abstract
from ..abstraction.engine import Analysis
from ..catalog import ApiCatalog
from ..graphs.callgraph import AmbiguousRoot, RootNotFound, build_call_graph
from .dataset import CalleeRecord, SampleRecord
from .similarity import similarity_components

logger = logging.getLogger(__name__)

BASELINE_DEPTH = 3
SAMPLE_SIZE = 3

NONE = "none"
ALL_CALLEES = "all-callees"
API_GUIDED = "api-guided"
SIMILARITY = "similarity"
RANDOM = "random"
HIERARCHY = "hierarchy"
BASELINES = (ALL_CALLEES, API_GUIDED, SIMILARITY, RANDOM, HIERARCHY)
LEVELS = tuple(l.value for l in Level)
CONTEXTS = (NONE,) + LEVELS + BASELINES


def parse_context(text: str) -> str:
    key = text.strip()
    if key.upper() in LEVELS:
        return key.upper()
    key = key.lower()
    if key not in CONTEXTS:
        raise ValueError(f"unknown context {text!r} (expected one of {', '.join(CONTEXTS)})")
    return key


@dataclass
class Context:
    strategy: str
    text: str
    selected: Tuple[str, ...] = ()
    flagged: bool = False  # fewer candidates than the sampler wanted
    notes: List[str] = field(default_factory=list)


def _order(callees: Sequence[CalleeRecord]) -> List[CalleeRecord]:
    return sorted(callees, key=lambda c: (c.depth, c.name))


def _candidates(sample: SampleRecord, max_depth: int = BASELINE_DEPTH) -> List[CalleeRecord]:
    seen = set()
    out = []
    for c in _order(sample.callees):
        if c.depth <= max_depth and c.name not in seen:
            seen.add(c.name)
            out.append(c)
    return out


def raw_code(callees: Sequence[CalleeRecord]) -> str:
    return "\n\n".join(f"// callee {c.name} (depth {c.depth})\n{c.code.strip()}" for c in callees)


def api_bearing(sample: SampleRecord, catalog: ApiCatalog, depth_limit: int = BASELINE_DEPTH) -> List[str]:
    """Callees whose in-depth closure contains a catalog API call."""
    try:
        graph = build_call_graph(sample.units(), sample.target_name, depth_limit)
    except (RootNotFound, AmbiguousRoot):
        return []
    a = Analysis(graph, catalog)
    families = catalog.families()
    return [c.name for c in _candidates(sample, depth_limit)
            if c.name in graph.functions and any(a.count(c.name, f) for f in families)]


def sample_random(cands: Sequence[CalleeRecord], seed: int, k: int = SAMPLE_SIZE) -> List[CalleeRecord]:
    if len(cands) <= k:
        return list(cands)
    rng = random.Random(seed)
    return _order(rng.sample(list(cands), k))


def sample_hierarchy(cands: Sequence[CalleeRecord], seed: int, quota: int = SAMPLE_SIZE) -> List[CalleeRecord]:
    """Round-robin over depths 1, 2, 3, ... with a seeded order inside each depth."""
    rng = random.Random(seed)
    by_depth = {}
    for c in cands:
        by_depth.setdefault(c.depth, []).append(c)
    queues = []
    for depth in sorted(by_depth):
        group = sorted(by_depth[depth], key=lambda c: c.name)
        rng.shuffle(group)
        queues.append(group)
    picked: List[CalleeRecord] = []
    while len(picked) < quota and any(queues):
        for q in queues:
            if q and len(picked) < quota:
                picked.append(q.pop(0))
    return _order(picked)


def sample_similar(target_code: str, cands: Sequence[CalleeRecord], k: int = SAMPLE_SIZE,
                   weights: Sequence[float] = (1, 1, 1, 1)) -> List[CalleeRecord]:
    if len(cands) <= k:
        return list(cands)
    comps = similarity_components(target_code, [c.code for c in cands])
    ranked = sorted(zip(cands, comps), key=lambda p: (-p[1].combined(weights), p[0].name))
    return _order([c for c, _ in ranked[:k]])


def build_context(sample: SampleRecord, strategy: str, catalog: ApiCatalog, seed: int = 0,
                  depth_limit: int = BASELINE_DEPTH, include_fuzzy_at_a2: bool = False,
                  similarity_weights: Sequence[float] = (1, 1, 1, 1)) -> Context:
    strategy = parse_context(strategy)
    if strategy == NONE:
        return Context(strategy, "")
    if strategy in LEVELS:
        if sample.degraded:
            return Context(strategy, "", notes=["degraded target; no abstraction"])
        try:
            report = abstract(sample.target_name, sample.units(), catalog, Level(strategy),
                              depth_limit, include_fuzzy_at_a2)
        except (RootNotFound, AmbiguousRoot) as exc:
            logger.warning("sample %s: %s", sample.id, exc)
            return Context(strategy, "", notes=[str(exc)])
        return Context(strategy, report.rendered.strip(), tuple(report.callees))

    cands = _candidates(sample, BASELINE_DEPTH)
    if strategy == ALL_CALLEES:
        chosen = cands
    elif strategy == API_GUIDED:
        names = set(api_bearing(sample, catalog, BASELINE_DEPTH))
        chosen = [c for c in cands if c.name in names]
    elif strategy == SIMILARITY:
        chosen = sample_similar(sample.target_code, cands, SAMPLE_SIZE, similarity_weights)
    elif strategy == RANDOM:
        chosen = sample_random(cands, seed)
    else:
        chosen = sample_hierarchy(cands, seed)
    flagged = strategy in (SIMILARITY, RANDOM, HIERARCHY) and len(cands) < SAMPLE_SIZE
    return Context(strategy, raw_code(chosen), tuple(c.name for c in chosen), flagged)
