"""Depth-limited, breadth-first call graph over one or more source units."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from ..frontend.calls import extract_calls
from ..frontend.nodes import FunctionAst, SourceUnit

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 3


class RootNotFound(LookupError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no definition of {name!r}")


class AmbiguousRoot(LookupError):
    def __init__(self, name: str, paths: List[str]):
        self.name = name
        self.paths = paths
        super().__init__(f"{name!r} is defined more than once: {', '.join(paths)}")


@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    site: int  # call ordinal inside the caller


@dataclass
class CallGraph:
    root: str
    depth_limit: int
    nodes: Set[str] = field(default_factory=set)
    edges: Set[CallEdge] = field(default_factory=set)
    depth: Dict[str, int] = field(default_factory=dict)
    external: Set[str] = field(default_factory=set)
    functions: Dict[str, FunctionAst] = field(default_factory=dict)

    def callees(self, name: str) -> List[str]:
        """Distinct callees of ``name`` in first-call source order."""
        seen: List[str] = []
        for e in sorted((e for e in self.edges if e.caller == name), key=lambda e: e.site):
            if e.callee not in seen:
                seen.append(e.callee)
        return seen

    def edges_from(self, name: str) -> List[CallEdge]:
        return sorted((e for e in self.edges if e.caller == name), key=lambda e: e.site)


def index_functions(units: Iterable[SourceUnit]) -> Dict[str, List[Tuple[SourceUnit, FunctionAst]]]:
    index: Dict[str, List[Tuple[SourceUnit, FunctionAst]]] = {}
    for unit in units:
        for fn in unit.functions:
            index.setdefault(fn.name, []).append((unit, fn))
    return index


def resolve(index, name: str) -> FunctionAst:
    defs = index.get(name, [])
    if not defs:
        raise RootNotFound(name)
    if len(defs) > 1:
        raise AmbiguousRoot(name, [u.path for u, _ in defs])
    return defs[0][1]


def build_call_graph(units: List[SourceUnit], root: str, depth_limit: int = DEFAULT_DEPTH) -> CallGraph:
    """Breadth-first expansion from ``root``.

    Functions at ``depth_limit`` are included but not expanded.  Callees
    without a definition become ``external`` leaves.  Recursion adds an
    edge but never re-expands a node.
    """
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    index = index_functions(units)
    root_fn = resolve(index, root)
    g = CallGraph(root=root, depth_limit=depth_limit)
    g.nodes.add(root)
    g.depth[root] = 0
    g.functions[root] = root_fn
    queue = deque([root])
    while queue:
        name = queue.popleft()
        d = g.depth[name]
        if d >= depth_limit:
            continue
        for ordinal, rec in enumerate(extract_calls(g.functions[name])):
            callee = rec.callee
            g.edges.add(CallEdge(name, callee, ordinal))
            if callee in g.depth:
                continue
            g.nodes.add(callee)
            g.depth[callee] = d + 1
            defs = index.get(callee, [])
            if not defs:
                g.external.add(callee)
                continue
            if len(defs) > 1:
                logger.warning("%s has %d definitions; using the one in %s", callee, len(defs), defs[0][0].path)
            g.functions[callee] = defs[0][1]
            queue.append(callee)
    return g


def find_function(units: List[SourceUnit], name: str) -> Optional[FunctionAst]:
    defs = index_functions(units).get(name, [])
    return defs[0][1] if defs else None
