from .callgraph import AmbiguousRoot, CallEdge, CallGraph, RootNotFound, build_call_graph
from .cfg import NOT_TAKEN, TAKEN, BasicBlock, CallSite, Cfg, Edge, Guard, build_cfg
from .defuse import CopyEdge, DefUse, Site, build_def_use, root_var
from .export import callgraph_to_text, cfg_to_text
from .paths import DEFAULT_PATH_CAP, PathExplosion, PathSet, enumerate_acyclic_paths

__all__ = [
    "AmbiguousRoot", "BasicBlock", "CallEdge", "CallGraph", "CallSite", "Cfg", "CopyEdge",
    "DEFAULT_PATH_CAP", "DefUse", "Edge", "Guard", "NOT_TAKEN", "PathExplosion", "PathSet",
    "RootNotFound", "Site", "TAKEN", "build_call_graph", "build_cfg", "build_def_use",
    "callgraph_to_text", "cfg_to_text", "enumerate_acyclic_paths", "root_var",
]
