"""Per-function control-flow graphs with guarded edges.

Blocks are numbered entry first, interior blocks in creation order, exit
last.  Every call site also records the structural guards that enclose it
in its own function (outermost first); these are what concrete-branch
narration reports.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..frontend.calls import iter_calls
from ..frontend.nodes import (
    Assign, Binary, Block, Break, Call, Cast, Conditional, Continue, Decl, DoWhile,
    ExprStmt, For, FunctionAst, Ident, If, Index, IndirectCall, Literal, MemberAccess,
    Return, Switch, Unary, While,
)
from ..frontend.printer import print_expr

logger = logging.getLogger(__name__)

TAKEN = "taken"
NOT_TAKEN = "not-taken"


def negate_text(expr) -> str:
    text = print_expr(expr)
    if isinstance(expr, (Ident, Literal, MemberAccess, Call, Index)):
        return f"!{text}"
    return f"!({text})"


@dataclass(frozen=True)
class Guard:
    expr: object
    polarity: str
    rendered: str

    @classmethod
    def of(cls, expr, polarity: str = TAKEN) -> "Guard":
        text = print_expr(expr) if polarity == TAKEN else negate_text(expr)
        return cls(expr, polarity, text)


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    guard: Optional[Guard] = None


@dataclass(frozen=True)
class CallSite:
    callee: str
    args: tuple
    ordinal: int  # position in source order among the function's calls
    block: int
    guards: Tuple[Guard, ...]
    assigned_to: Optional[object] = None  # lhs when the call result is stored
    line: int = 0


@dataclass
class BasicBlock:
    id: int
    stmts: List[object] = field(default_factory=list)
    call_sites: List[CallSite] = field(default_factory=list)


@dataclass
class Cfg:
    function_name: str
    blocks: List[BasicBlock]
    entry: int
    exit: int
    edges: List[Edge]
    params: Tuple[str, ...] = ()

    def __post_init__(self):
        self._succ: Dict[int, List[Edge]] = {b.id: [] for b in self.blocks}
        self._pred: Dict[int, List[Edge]] = {b.id: [] for b in self.blocks}
        for e in self.edges:
            self._succ[e.src].append(e)
            self._pred[e.dst].append(e)

    def successors(self, block: int) -> List[int]:
        return [e.dst for e in self._succ[block]]

    def out_edges(self, block: int) -> List[Edge]:
        return list(self._succ[block])

    def predecessors(self, block: int) -> List[int]:
        return [e.src for e in self._pred[block]]

    @property
    def call_sites(self) -> List[CallSite]:
        sites = [s for b in self.blocks for s in b.call_sites]
        return sorted(sites, key=lambda s: s.ordinal)

    def block(self, block_id: int) -> BasicBlock:
        return self.blocks[block_id]


def _strip(expr):
    while isinstance(expr, Cast):
        expr = expr.operand
    return expr


def _assignment_targets(expr, out: Dict[int, object]) -> None:
    """Map id(call) -> lhs for ``lhs = call(...)`` anywhere inside ``expr``."""
    if isinstance(expr, Assign):
        rhs = _strip(expr.rhs)
        if isinstance(rhs, Call) and expr.op == "=":
            out[id(rhs)] = expr.lhs
        _assignment_targets(expr.lhs, out)
        _assignment_targets(expr.rhs, out)
    elif isinstance(expr, (Binary,)):
        _assignment_targets(expr.lhs, out)
        _assignment_targets(expr.rhs, out)
    elif isinstance(expr, Conditional):
        for e in (expr.cond, expr.then, expr.other):
            _assignment_targets(e, out)
    elif isinstance(expr, (Unary, Cast)):
        _assignment_targets(expr.operand, out)
    elif isinstance(expr, (Call, IndirectCall)):
        for a in expr.args:
            _assignment_targets(a, out)
    elif isinstance(expr, MemberAccess):
        _assignment_targets(expr.base, out)
    elif isinstance(expr, Index):
        _assignment_targets(expr.base, out)
        _assignment_targets(expr.index, out)


class _Builder:
    def __init__(self, fn: FunctionAst):
        from ..frontend.calls import extract_calls

        self.fn = fn
        self.blocks: List[BasicBlock] = []
        self.edges: List[Edge] = []
        self.guards: List[Guard] = []
        self.breaks: List[int] = []
        self.continues: List[int] = []
        self.ordinals = {id(rec.node): i for i, rec in enumerate(extract_calls(fn))}
        self.entry = self.new_block()
        self.exit_id = -1  # allocated at the end so it numbers last

    def new_block(self) -> int:
        b = BasicBlock(len(self.blocks))
        self.blocks.append(b)
        return b.id

    def edge(self, src: int, dst: int, guard: Optional[Guard] = None) -> None:
        self.edges.append(Edge(src, dst, guard))

    def add_expr(self, block: int, stmt, expr) -> None:
        self.blocks[block].stmts.append(stmt)
        if expr is None:
            return
        targets: Dict[int, object] = {}
        _assignment_targets(expr, targets)
        for call in iter_calls(expr):
            self.blocks[block].call_sites.append(CallSite(
                callee=call.callee,
                args=call.args,
                ordinal=self.ordinals[id(call)],
                block=block,
                guards=tuple(self.guards),
                assigned_to=targets.get(id(call)),
                line=call.line,
            ))

    def add_decl(self, block: int, d: Decl) -> None:
        self.blocks[block].stmts.append(d)
        if d.init is None:
            return
        targets: Dict[int, object] = {}
        _assignment_targets(d.init, targets)
        init = _strip(d.init)
        if isinstance(init, Call):
            targets[id(init)] = Ident(d.name, span=d.span, line=d.line)
        for call in iter_calls(d.init):
            self.blocks[block].call_sites.append(CallSite(
                callee=call.callee,
                args=call.args,
                ordinal=self.ordinals[id(call)],
                block=block,
                guards=tuple(self.guards),
                assigned_to=targets.get(id(call)),
                line=call.line,
            ))

    def is_empty(self, block: int) -> bool:
        return not self.blocks[block].stmts and block != self.entry

    # lower(stmt, cur) returns the block where control continues
    def lower(self, s, cur: int) -> int:
        if isinstance(s, Block):
            for child in s.stmts:
                cur = self.lower(child, cur)
            return cur
        if isinstance(s, ExprStmt):
            self.add_expr(cur, s, s.expr)
            return cur
        if isinstance(s, Decl):
            self.add_decl(cur, s)
            return cur
        if isinstance(s, Return):
            self.add_expr(cur, s, s.value)
            self.edge(cur, self.exit_id)
            return self.new_block()
        if isinstance(s, Break):
            if not self.breaks:
                logger.debug("%s: break outside loop/switch ignored", self.fn.name)
                return cur
            self.edge(cur, self.breaks[-1])
            return self.new_block()
        if isinstance(s, Continue):
            if not self.continues:
                logger.debug("%s: continue outside loop ignored", self.fn.name)
                return cur
            self.edge(cur, self.continues[-1])
            return self.new_block()
        if isinstance(s, If):
            return self.lower_if(s, cur)
        if isinstance(s, While):
            return self.lower_while(s, cur)
        if isinstance(s, DoWhile):
            return self.lower_do(s, cur)
        if isinstance(s, For):
            return self.lower_for(s, cur)
        if isinstance(s, Switch):
            return self.lower_switch(s, cur)
        raise TypeError(f"unexpected statement {s!r}")

    def lower_body(self, body, start: int, guard: Optional[Guard]) -> int:
        if guard is not None:
            self.guards.append(guard)
        end = self.lower(body, start)
        if guard is not None:
            self.guards.pop()
        return end

    def lower_if(self, s: If, cur: int) -> int:
        self.add_expr(cur, ExprStmt(s.cond, span=s.span, line=s.line), s.cond)
        taken, not_taken = Guard.of(s.cond, TAKEN), Guard.of(s.cond, NOT_TAKEN)
        then_b = self.new_block()
        else_b = self.new_block() if s.other is not None else None
        join = self.new_block()
        self.edge(cur, then_b, taken)
        self.edge(cur, else_b if else_b is not None else join, not_taken)
        self.edge(self.lower_body(s.then, then_b, taken), join)
        if s.other is not None:
            self.edge(self.lower_body(s.other, else_b, not_taken), join)
        return join

    def header_from(self, cur: int) -> int:
        if self.is_empty(cur):
            return cur
        header = self.new_block()
        self.edge(cur, header)
        return header

    def lower_while(self, s: While, cur: int) -> int:
        header = self.header_from(cur)
        self.add_expr(header, ExprStmt(s.cond, span=s.span, line=s.line), s.cond)
        taken = Guard.of(s.cond, TAKEN)
        body = self.new_block()
        after = self.new_block()
        self.edge(header, body, taken)
        self.edge(header, after, Guard.of(s.cond, NOT_TAKEN))
        self.breaks.append(after)
        self.continues.append(header)
        end = self.lower_body(s.body, body, taken)
        self.breaks.pop()
        self.continues.pop()
        self.edge(end, header)
        return after

    def lower_do(self, s: DoWhile, cur: int) -> int:
        body = self.header_from(cur)
        cond = self.new_block()
        after = self.new_block()
        self.breaks.append(after)
        self.continues.append(cond)
        end = self.lower(s.body, body)
        self.breaks.pop()
        self.continues.pop()
        self.edge(end, cond)
        self.add_expr(cond, ExprStmt(s.cond, span=s.span, line=s.line), s.cond)
        self.edge(cond, body, Guard.of(s.cond, TAKEN))
        self.edge(cond, after, Guard.of(s.cond, NOT_TAKEN))
        return after

    def lower_for(self, s: For, cur: int) -> int:
        for init in s.init:
            cur = self.lower(init, cur)
        header = self.header_from(cur)
        taken = None
        body = self.new_block()
        step = self.new_block()
        after = self.new_block()
        if s.cond is not None:
            self.add_expr(header, ExprStmt(s.cond, span=s.span, line=s.line), s.cond)
            taken = Guard.of(s.cond, TAKEN)
            self.edge(header, body, taken)
            self.edge(header, after, Guard.of(s.cond, NOT_TAKEN))
        else:
            self.edge(header, body)
        self.breaks.append(after)
        self.continues.append(step)
        end = self.lower_body(s.body, body, taken)
        self.breaks.pop()
        self.continues.pop()
        self.edge(end, step)
        if s.step is not None:
            if taken is not None:
                self.guards.append(taken)
            self.add_expr(step, ExprStmt(s.step, span=s.span, line=s.line), s.step)
            if taken is not None:
                self.guards.pop()
        self.edge(step, header)
        return after

    def lower_switch(self, s: Switch, cur: int) -> int:
        self.add_expr(cur, ExprStmt(s.scrutinee, span=s.span, line=s.line), s.scrutinee)
        after = self.new_block()

        def matches(labels) -> Optional[object]:
            expr = None
            for label in labels:
                eq = Binary("==", s.scrutinee, label)
                expr = eq if expr is None else Binary("||", expr, eq)
            return expr

        case_blocks = [self.new_block() for _ in s.cases]
        all_labels = [l for c in s.cases for l in c.labels]
        guards: List[Optional[Guard]] = []
        for case in s.cases:
            if case.is_default:
                others = [l for c in s.cases if c is not case for l in c.labels]
                m = matches(others)
                guards.append(Guard.of(m, NOT_TAKEN) if m is not None else None)
            else:
                guards.append(Guard.of(matches(case.labels), TAKEN))
        has_default = any(c.is_default for c in s.cases)
        n_succ = len(s.cases) + (0 if has_default or not all_labels else 1)
        for block, guard in zip(case_blocks, guards):
            self.edge(cur, block, guard if n_succ > 1 else None)
        if not has_default:
            m = matches(all_labels)
            self.edge(cur, after, Guard.of(m, NOT_TAKEN) if m is not None and n_succ > 1 else None)
        self.breaks.append(after)
        for i, (case, block, guard) in enumerate(zip(s.cases, case_blocks, guards)):
            end = block
            if guard is not None:
                self.guards.append(guard)
            for child in case.body:
                end = self.lower(child, end)
            if guard is not None:
                self.guards.pop()
            # fallthrough into the next case, or out of the switch
            self.edge(end, case_blocks[i + 1] if i + 1 < len(case_blocks) else after)
        self.breaks.pop()
        return after

    def build(self) -> Cfg:
        self.exit_id = 10 ** 9  # placeholder id, resolved below
        first = self.new_block()
        self.edge(self.entry, first)
        end = self.lower(self.fn.body, first)
        self.edge(end, self.exit_id)
        return self.finish()

    def finish(self) -> Cfg:
        # Reachability from entry; the exit is appended as the last block.
        exit_tmp = self.exit_id
        succ: Dict[int, List[int]] = {}
        for e in self.edges:
            succ.setdefault(e.src, []).append(e.dst)
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            b = stack.pop()
            for d in succ.get(b, ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        dead = [b.id for b in self.blocks if b.id not in seen]
        if dead:
            logger.debug("%s: pruned unreachable blocks %s", self.fn.name, dead)
        live = [b for b in self.blocks if b.id in seen]
        remap = {b.id: i for i, b in enumerate(live)}
        exit_id = len(live)
        remap[exit_tmp] = exit_id
        blocks: List[BasicBlock] = []
        for b in live:
            nb = BasicBlock(remap[b.id], list(b.stmts))
            nb.call_sites = [
                CallSite(c.callee, c.args, c.ordinal, nb.id, c.guards, c.assigned_to, c.line)
                for c in b.call_sites
            ]
            blocks.append(nb)
        blocks.append(BasicBlock(exit_id))
        edges = [Edge(remap[e.src], remap[e.dst], e.guard) for e in self.edges if e.src in seen]
        # A guard only carries meaning when the block branches.
        out_count: Dict[int, int] = {}
        for e in edges:
            out_count[e.src] = out_count.get(e.src, 0) + 1
        edges = [e if out_count[e.src] > 1 else Edge(e.src, e.dst, None) for e in edges]
        return Cfg(self.fn.name, blocks, 0, exit_id, edges, self.fn.param_names)


def build_cfg(fn: FunctionAst) -> Cfg:
    """Lower ``fn`` to a CFG: If becomes a diamond, loops get a back edge,
    Switch fans out with per-case guards and fallthrough edges."""
    return _Builder(fn).build()
