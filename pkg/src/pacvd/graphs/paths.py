from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .cfg import Cfg

DEFAULT_PATH_CAP = 4096


class PathExplosion(Exception):
    """More acyclic paths than the cap allows."""

    def __init__(self, function: str, cap: int):
        self.function = function
        self.cap = cap
        super().__init__(f"{function}: more than {cap} acyclic paths")


@dataclass(frozen=True)
class PathSet:
    paths: Tuple[Tuple[int, ...], ...]
    overflow: bool

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)


def _reaches_exit(cfg: Cfg) -> set:
    pred = {b.id: [] for b in cfg.blocks}
    for e in cfg.edges:
        pred[e.dst].append(e.src)
    seen = {cfg.exit}
    stack = [cfg.exit]
    while stack:
        b = stack.pop()
        for p in pred[b]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def enumerate_acyclic_paths(cfg: Cfg, cap: int = DEFAULT_PATH_CAP, raise_on_overflow: bool = False) -> PathSet:
    """All entry->exit paths visiting no block twice, in DFS order.

    Each loop therefore shows up as its zero- and one-iteration shapes.
    Stops after ``cap`` paths (or a proportional step budget) and sets
    ``overflow``; with ``raise_on_overflow`` a :class:`PathExplosion` is
    raised instead.
    """
    if cap < 1:
        raise ValueError("cap must be positive")
    useful = _reaches_exit(cfg)
    paths: List[Tuple[int, ...]] = []
    if cfg.entry not in useful:
        return PathSet((), False)
    budget = max(cap * 64, 100_000)
    steps = 0
    overflow = False
    path = [cfg.entry]
    on_path = {cfg.entry}
    # iterator stack of successor lists
    stack = [iter(cfg.successors(cfg.entry))]
    while stack:
        steps += 1
        if steps > budget:
            overflow = True
            break
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if nxt in on_path or nxt not in useful:
            continue
        if nxt == cfg.exit:
            if len(paths) == cap:
                overflow = True
                break
            paths.append(tuple(path) + (nxt,))
            continue
        path.append(nxt)
        on_path.add(nxt)
        stack.append(iter(cfg.successors(nxt)))
    if overflow and raise_on_overflow:
        raise PathExplosion(cfg.function_name, cap)
    return PathSet(tuple(paths), overflow)
