"""Primitive-API usage facts per (callee, API family).

Four analyses run over the depth-limited call graph rooted at the target:
fuzzy branch class, concrete guard conditions with call chains, static
call-site counts, and key variables.  Everything is computed once at full
detail; levels are field projections of the same facts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from ..catalog import ApiCatalog
from ..frontend.nodes import Cast, Ident, SourceUnit, Unary
from ..frontend.printer import print_expr
from ..graphs.callgraph import DEFAULT_DEPTH, CallGraph, build_call_graph
from ..graphs.cfg import CallSite, Cfg, build_cfg
from ..graphs.defuse import DefUse, build_def_use, root_var
from ..graphs.paths import DEFAULT_PATH_CAP, enumerate_acyclic_paths

logger = logging.getLogger(__name__)


class FuzzyClass(Enum):
    ALL = "AllBranches"
    SOME = "SomeBranches"
    NONE = "NoBranch"

    @property
    def phrase(self) -> str:
        return {"AllBranches": "On all branches", "SomeBranches": "On some branches",
                "NoBranch": "On no branch"}[self.value]


class Level(Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"

    @property
    def rank(self) -> int:
        return int(self.value[1])

    @classmethod
    def parse(cls, text: str) -> "Level":
        try:
            return cls(text.upper())
        except ValueError:
            raise ValueError(f"unknown abstraction level {text!r} (expected A1-A4)") from None


@dataclass(frozen=True)
class ConcreteCondition:
    api: str
    guards: Tuple[str, ...]
    chain: Tuple[str, ...]
    # Call ordinals of each hop (chain[i] -> chain[i+1]), and of the API call in
    # chain[-1].  Bookkeeping only: excluded from equality and from exports.
    hops: Tuple[Tuple[int, ...], ...] = field(default=(), compare=False, repr=False)
    sites: Tuple[Tuple[str, int], ...] = field(default=(), compare=False, repr=False)

    @property
    def entry_sites(self) -> FrozenSet[int]:
        """Call ordinals inside the analysed callee that start this condition."""
        if len(self.chain) == 1:
            return frozenset(o for _, o in self.sites)
        return frozenset(h[0] for h in self.hops)

    def to_dict(self) -> dict:
        return {"api": self.api, "guards": list(self.guards), "chain": list(self.chain)}

    @classmethod
    def from_dict(cls, doc: dict) -> "ConcreteCondition":
        return cls(doc["api"], tuple(doc["guards"]), tuple(doc["chain"]))


@dataclass(frozen=True)
class ApiUsageFacts:
    callee: str
    api: str
    fuzzy: Optional[FuzzyClass] = None
    conditions: Optional[Tuple[ConcreteCondition, ...]] = None
    count: Optional[int] = None
    key_variables: Optional[Tuple[str, ...]] = None

    def project(self, level: Level, include_fuzzy_at_a2: bool = False) -> "ApiUsageFacts":
        keep_fuzzy = level is Level.A1 or include_fuzzy_at_a2
        return replace(
            self,
            fuzzy=self.fuzzy if keep_fuzzy else None,
            conditions=self.conditions if level.rank >= 2 else None,
            count=self.count if level.rank >= 3 else None,
            key_variables=self.key_variables if level.rank >= 4 else None,
        )

    def to_dict(self) -> dict:
        out: dict = {"callee": self.callee, "api": self.api}
        if self.fuzzy is not None:
            out["fuzzy"] = self.fuzzy.value
        if self.conditions is not None:
            out["conditions"] = [c.to_dict() for c in self.conditions]
        if self.count is not None:
            out["count"] = self.count
        if self.key_variables is not None:
            out["key_variables"] = list(self.key_variables)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ApiUsageFacts":
        conds = doc.get("conditions")
        keyvars = doc.get("key_variables")
        return cls(
            doc["callee"], doc["api"],
            FuzzyClass(doc["fuzzy"]) if "fuzzy" in doc else None,
            tuple(ConcreteCondition.from_dict(c) for c in conds) if conds is not None else None,
            doc.get("count"),
            tuple(keyvars) if keyvars is not None else None,
        )


@dataclass
class AbstractionReport:
    target: str
    level: Level
    facts: List[ApiUsageFacts]
    rendered: str
    depth_limit: int
    overflow_fallback_used: bool = False
    callees: List[str] = field(default_factory=list)
    include_fuzzy_at_a2: bool = False

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "level": self.level.value,
            "depth_limit": self.depth_limit,
            "overflow_fallback_used": self.overflow_fallback_used,
            "include_fuzzy_at_a2": self.include_fuzzy_at_a2,
            "callees": list(self.callees),
            "facts": [f.to_dict() for f in self.facts],
            "rendered": self.rendered,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AbstractionReport":
        return cls(
            target=doc["target"], level=Level.parse(doc["level"]),
            facts=[ApiUsageFacts.from_dict(f) for f in doc["facts"]],
            rendered=doc["rendered"], depth_limit=doc["depth_limit"],
            overflow_fallback_used=doc.get("overflow_fallback_used", False),
            callees=list(doc.get("callees", [])),
            include_fuzzy_at_a2=doc.get("include_fuzzy_at_a2", False),
        )


@dataclass(frozen=True)
class _Reached:
    """One API call site reached from a callee along a simple call chain."""

    chain: Tuple[str, ...]
    hops: Tuple[int, ...]  # hop call ordinals, len(chain) - 1
    site: CallSite
    family: str


class Analysis:
    """Shared state for all per-callee analyses of one target."""

    def __init__(self, graph: CallGraph, catalog: ApiCatalog, cfgs: Optional[Dict[str, Cfg]] = None,
                 path_cap: int = DEFAULT_PATH_CAP):
        self.graph = graph
        self.catalog = catalog
        self.path_cap = path_cap
        self.cfgs: Dict[str, Cfg] = dict(cfgs or {})
        for name, fn in graph.functions.items():
            if name not in self.cfgs:
                self.cfgs[name] = build_cfg(fn)
        self._defuse: Dict[str, DefUse] = {}
        self._reached: Dict[str, List[_Reached]] = {}
        self.overflowed: Set[str] = set()

    # -- graph helpers

    def expanded(self, name: str) -> bool:
        return name in self.graph.functions and self.graph.depth.get(name, 10 ** 9) < self.graph.depth_limit

    def is_hop(self, frame: str, site: CallSite) -> bool:
        return (
            self.catalog.get(site.callee) is None
            and self.expanded(frame)
            and site.callee in self.graph.functions
        )

    def family_of(self, site: CallSite) -> Optional[str]:
        entry = self.catalog.get(site.callee)
        return entry.family if entry is not None else None

    def defuse(self, name: str) -> DefUse:
        if name not in self._defuse:
            self._defuse[name] = build_def_use(self.graph.functions[name])
        return self._defuse[name]

    # -- reach

    def reached(self, callee: str) -> List[_Reached]:
        """API sites reachable from ``callee`` along simple call chains, in
        depth-first source order."""
        if callee in self._reached:
            return self._reached[callee]
        out: List[_Reached] = []

        def visit(chain: Tuple[str, ...], hops: Tuple[int, ...]) -> None:
            frame = chain[-1]
            for site in self.cfgs[frame].call_sites:
                fam = self.family_of(site)
                if fam is not None:
                    out.append(_Reached(chain, hops, site, fam))
                elif self.is_hop(frame, site) and site.callee not in chain:
                    visit(chain + (site.callee,), hops + (site.ordinal,))

        if callee in self.graph.functions:
            visit((callee,), ())
        self._reached[callee] = out
        return out

    def reaching_entry_ordinals(self, callee: str, family: str) -> Set[int]:
        out = set()
        for r in self.reached(callee):
            if r.family == family:
                out.add(r.hops[0] if r.hops else r.site.ordinal)
        return out

    # -- the four analyses

    def count(self, callee: str, family: str) -> int:
        return len({(r.chain[-1], r.site.ordinal) for r in self.reached(callee) if r.family == family})

    def conditions(self, callee: str, family: str) -> Tuple[ConcreteCondition, ...]:
        merged: Dict[Tuple[Tuple[str, ...], Tuple[str, ...]], ConcreteCondition] = {}
        for r in self.reached(callee):
            if r.family != family:
                continue
            guards = tuple(g.rendered for g in r.site.guards)
            key = (r.chain, guards)
            site = (r.chain[-1], r.site.ordinal)
            prev = merged.get(key)
            if prev is None:
                merged[key] = ConcreteCondition(family, guards, r.chain, (r.hops,), (site,))
            else:
                merged[key] = replace(prev, hops=prev.hops + (r.hops,), sites=prev.sites + (site,))
        return tuple(merged.values())

    def fuzzy(self, callee: str, family: str) -> FuzzyClass:
        ordinals = self.reaching_entry_ordinals(callee, family)
        if not ordinals:
            return FuzzyClass.NONE
        cfg = self.cfgs[callee]
        hit = {s.block for s in cfg.call_sites if s.ordinal in ordinals}
        paths = enumerate_acyclic_paths(cfg, self.path_cap)
        if paths.overflow:
            self.overflowed.add(callee)
            logger.info("%s: path cap %d exceeded, using reachability fallback", callee, self.path_cap)
            return _cover_by_reachability(cfg, hit)
        if paths.paths and all(any(b in hit for b in p) for p in paths.paths):
            return FuzzyClass.ALL
        return FuzzyClass.SOME

    def key_variables(self, callee: str, family: str, target_calls: Dict[str, CallSite]) -> Tuple[str, ...]:
        out: List[str] = []
        for r in self.reached(callee):
            if r.family != family:
                continue
            text = self._key_variable(r, target_calls.get(callee))
            if text is not None and text not in out:
                out.append(text)
        return tuple(out)

    def _key_variable(self, r: _Reached, target_site: Optional[CallSite]) -> Optional[str]:
        entry = self.catalog.get(r.site.callee)
        if entry is not None and entry.is_acquire:
            expr = r.site.assigned_to
        else:
            expr = r.site.args[0] if r.site.args else None
        if expr is None:
            return None
        # walk frames from the API call back to the analysed callee
        for depth in range(len(r.chain) - 1, -1, -1):
            frame = r.chain[depth]
            expr = self._resolve_copies(frame, expr)
            root = root_var(expr)
            if root is None:
                return print_expr(_strip(expr))
            params = self.graph.functions[frame].param_names
            if root not in params:
                return root
            index = params.index(root)
            if depth > 0:
                caller = r.chain[depth - 1]
                hop = _site_by_ordinal(self.cfgs[caller], r.hops[depth - 1])
            else:
                hop = target_site
            if hop is None or index >= len(hop.args):
                return root
            expr = hop.args[index]
            if depth == 0:
                return print_expr(_strip(expr))
        return None

    def _resolve_copies(self, frame: str, expr):
        du = self.defuse(frame)
        seen = set()
        while True:
            root = root_var(expr)
            if root is None or root in seen:
                return expr
            seen.add(root)
            src = du.copy_source(root)
            if src is None:
                return expr
            expr = src


def _strip(expr):
    while isinstance(expr, Cast) or (isinstance(expr, Unary) and expr.op in ("&", "*")):
        expr = expr.operand
    return expr


def _site_by_ordinal(cfg: Cfg, ordinal: int) -> Optional[CallSite]:
    for s in cfg.call_sites:
        if s.ordinal == ordinal:
            return s
    return None


def _cover_by_reachability(cfg: Cfg, hit: Set[int]) -> FuzzyClass:
    """AllBranches iff the exit is reachable, but not once hit blocks are removed.

    Equivalent to the path definition: any entry->exit walk that avoids the
    hit blocks can be shortened to an acyclic path that also avoids them.
    """

    def reachable(blocked: Set[int]) -> bool:
        if cfg.entry in blocked:
            return False
        seen = {cfg.entry}
        stack = [cfg.entry]
        while stack:
            b = stack.pop()
            if b == cfg.exit:
                return True
            for d in cfg.successors(b):
                if d not in seen and d not in blocked:
                    seen.add(d)
                    stack.append(d)
        return False

    if reachable(set()) and not reachable(hit):
        return FuzzyClass.ALL
    return FuzzyClass.SOME


def derive_fuzzy_from_conditions(conditions: Iterable[ConcreteCondition], cfg: Cfg,
                                 cap: int = DEFAULT_PATH_CAP) -> FuzzyClass:
    """Recompute the fuzzy class from A2 conditions plus path analysis."""
    ordinals: Set[int] = set()
    for c in conditions:
        ordinals |= c.entry_sites
    if not ordinals:
        return FuzzyClass.NONE
    hit = {s.block for s in cfg.call_sites if s.ordinal in ordinals}
    paths = enumerate_acyclic_paths(cfg, cap)
    if paths.overflow:
        return _cover_by_reachability(cfg, hit)
    if paths.paths and all(any(b in hit for b in p) for p in paths.paths):
        return FuzzyClass.ALL
    return FuzzyClass.SOME


# ---------------------------------------------------------------- public API


def classify_fuzzy(callee: str, graph: CallGraph, catalog: ApiCatalog, api: str,
                   cfgs: Optional[Dict[str, Cfg]] = None, cap: int = DEFAULT_PATH_CAP) -> FuzzyClass:
    return Analysis(graph, catalog, cfgs, cap).fuzzy(callee, _family(catalog, api))


def collect_conditions(callee: str, graph: CallGraph, catalog: ApiCatalog,
                       cfgs: Optional[Dict[str, Cfg]] = None) -> List[ConcreteCondition]:
    a = Analysis(graph, catalog, cfgs)
    out: List[ConcreteCondition] = []
    for fam in catalog.families():
        out.extend(a.conditions(callee, fam))
    return out


def count_calls(callee: str, graph: CallGraph, catalog: ApiCatalog,
                cfgs: Optional[Dict[str, Cfg]] = None) -> Dict[str, int]:
    a = Analysis(graph, catalog, cfgs)
    return {fam: a.count(callee, fam) for fam in catalog.families()}


def extract_key_variables(callee: str, graph: CallGraph, catalog: ApiCatalog,
                          cfgs: Optional[Dict[str, Cfg]] = None) -> Dict[str, Tuple[str, ...]]:
    a = Analysis(graph, catalog, cfgs)
    target_calls = _first_calls(a, graph.root)
    return {fam: a.key_variables(callee, fam, target_calls) for fam in catalog.families()}


def _family(catalog: ApiCatalog, api: str) -> str:
    entry = catalog.get(api)
    return entry.family if entry is not None else api


def _first_calls(a: Analysis, target: str) -> Dict[str, CallSite]:
    out: Dict[str, CallSite] = {}
    if target in a.cfgs:
        for s in a.cfgs[target].call_sites:
            out.setdefault(s.callee, s)
    return out


def compute_facts(graph: CallGraph, catalog: ApiCatalog, path_cap: int = DEFAULT_PATH_CAP):
    """Full-detail facts for every rendered callee of ``graph.root``.

    Returns ``(callees, facts, overflowed)`` where callees are the target's
    direct callees with some primitive-API activity, in first-call order.
    """
    a = Analysis(graph, catalog, path_cap=path_cap)
    target = graph.root
    target_calls = _first_calls(a, target)
    families = catalog.families()
    callees: List[str] = []
    # direct callees in first-call order, from the target's live call sites
    for site in a.cfgs[target].call_sites:
        name = site.callee
        if name in callees or not a.is_hop(target, site):
            continue
        if any(a.count(name, fam) for fam in families):
            callees.append(name)
    present = [fam for fam in families if any(a.count(c, fam) for c in callees)]
    visible = set(present)
    for fam in present:
        visible.update(catalog.family_partners(fam))
    facts: List[ApiUsageFacts] = []
    for name in callees:
        for fam in families:
            if fam not in visible:
                continue
            facts.append(ApiUsageFacts(
                callee=name,
                api=fam,
                fuzzy=a.fuzzy(name, fam),
                conditions=a.conditions(name, fam),
                count=a.count(name, fam),
                key_variables=a.key_variables(name, fam, target_calls),
            ))
    return callees, facts, bool(a.overflowed), a


def abstract(target: str, units: List[SourceUnit], catalog: ApiCatalog, level: Level = Level.A3,
             depth_limit: int = DEFAULT_DEPTH, include_fuzzy_at_a2: bool = False,
             path_cap: int = DEFAULT_PATH_CAP) -> AbstractionReport:
    from .render import render

    if isinstance(level, str):
        level = Level.parse(level)
    graph = build_call_graph(units, target, depth_limit)
    callees, facts, overflowed, _ = compute_facts(graph, catalog, path_cap)
    projected = [f.project(level, include_fuzzy_at_a2) for f in facts]
    report = AbstractionReport(
        target=target,
        level=level,
        facts=projected,
        rendered="",
        depth_limit=depth_limit,
        overflow_fallback_used=overflowed,
        callees=callees,
        include_fuzzy_at_a2=include_fuzzy_at_a2,
    )
    report.rendered = render(projected, level, depth_limit, include_fuzzy_at_a2, catalog)
    return report
