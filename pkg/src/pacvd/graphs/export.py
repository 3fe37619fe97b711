"""Line-oriented debug dumps: ``node <id>`` and ``edge <from> <to> [guard]``."""

from __future__ import annotations

from .callgraph import CallGraph
from .cfg import Cfg


def cfg_to_text(cfg: Cfg) -> str:
    lines = [f"# cfg {cfg.function_name} entry={cfg.entry} exit={cfg.exit}"]
    lines += [f"node {b.id}" for b in cfg.blocks]
    for e in cfg.edges:
        lines.append(f"edge {e.src} {e.dst}" + (f" {e.guard.rendered}" if e.guard else ""))
    return "\n".join(lines) + "\n"


def callgraph_to_text(graph: CallGraph) -> str:
    lines = [f"# callgraph {graph.root} depth_limit={graph.depth_limit}"]
    for name in sorted(graph.nodes, key=lambda n: (graph.depth[n], n)):
        lines.append(f"node {name}")
    for e in sorted(graph.edges, key=lambda e: (e.caller, e.site)):
        lines.append(f"edge {e.caller} {e.callee}")
    return "\n".join(lines) + "\n"
