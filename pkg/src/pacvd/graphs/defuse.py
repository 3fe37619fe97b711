"""Intra-procedural def-use facts and copy edges."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from ..frontend.calls import iter_statement_exprs
from ..frontend.nodes import (
    Assign, Binary, Call, Cast, Conditional, Decl, FunctionAst, Ident, Index,
    IndirectCall, MemberAccess, Unary,
)
from ..frontend.printer import print_expr


@dataclass(frozen=True)
class Site:
    var: str
    text: str  # the expression text at the site, e.g. "srp->rq"
    line: int
    order: int  # statement order within the function


@dataclass(frozen=True)
class CopyEdge:
    src: str
    dst: str
    src_expr: object
    dst_expr: object


@dataclass
class DefUse:
    function: str
    defs: Dict[str, List[Site]] = field(default_factory=dict)
    uses: Dict[str, List[Site]] = field(default_factory=dict)
    copy_edges: Set[CopyEdge] = field(default_factory=set)
    declared: Set[str] = field(default_factory=set)
    # var -> rhs expression for each definition, aligned with ``defs``
    def_values: Dict[str, List[Optional[object]]] = field(default_factory=dict)

    def chains(self) -> Dict[str, List[Tuple[Site, List[Site]]]]:
        """Pair each def with the uses that follow it before the next def."""
        out: Dict[str, List[Tuple[Site, List[Site]]]] = {}
        for var, defs in self.defs.items():
            uses = self.uses.get(var, [])
            ordered = sorted(defs, key=lambda s: s.order)
            pairs = []
            for i, d in enumerate(ordered):
                stop = ordered[i + 1].order if i + 1 < len(ordered) else float("inf")
                pairs.append((d, [u for u in uses if d.order <= u.order < stop]))
            out[var] = pairs
        return out

    def copy_source(self, var: str) -> Optional[object]:
        """The source expression when ``var`` has exactly one def and it is a copy."""
        values = self.def_values.get(var, [])
        if len(values) != 1 or values[0] is None:
            return None
        src = _strip_casts(values[0])
        if _is_chain(src) and root_var(src) in self.declared:
            return src
        return None


def root_var(expr) -> Optional[str]:
    """Root identifier of an lvalue-ish expression, looking through casts,
    ``*``/``&``, indexing and member chains."""
    while True:
        if isinstance(expr, Ident):
            return expr.name
        if isinstance(expr, MemberAccess):
            expr = expr.base
        elif isinstance(expr, Index):
            expr = expr.base
        elif isinstance(expr, Cast):
            expr = expr.operand
        elif isinstance(expr, Unary) and expr.op in ("*", "&", "++", "--"):
            expr = expr.operand
        else:
            return None


def _is_chain(expr) -> bool:
    while isinstance(expr, MemberAccess):
        expr = expr.base
    return isinstance(expr, Ident)


def _strip_casts(expr):
    while isinstance(expr, Cast):
        expr = expr.operand
    return expr


def _walk_uses(expr, order: int, out: List[Site]) -> None:
    if expr is None:
        return
    if isinstance(expr, (Ident, MemberAccess)):
        root = root_var(expr)
        if root is not None:
            out.append(Site(root, print_expr(expr), expr.line, order))
        if isinstance(expr, MemberAccess):
            _walk_uses_inner(expr.base, order, out)
        return
    if isinstance(expr, Assign):
        # lhs roots are defs, but indexing/deref inside the lhs still reads
        lhs = expr.lhs
        if not isinstance(lhs, (Ident, MemberAccess)):
            _walk_uses(lhs, order, out)
        elif expr.op != "=":
            _walk_uses(lhs, order, out)
        _walk_uses(expr.rhs, order, out)
        return
    if isinstance(expr, Binary):
        _walk_uses(expr.lhs, order, out)
        _walk_uses(expr.rhs, order, out)
    elif isinstance(expr, Conditional):
        for e in (expr.cond, expr.then, expr.other):
            _walk_uses(e, order, out)
    elif isinstance(expr, (Unary, Cast)):
        _walk_uses(expr.operand, order, out)
    elif isinstance(expr, Call):
        for a in expr.args:
            _walk_uses(a, order, out)
    elif isinstance(expr, IndirectCall):
        _walk_uses(expr.target, order, out)
        for a in expr.args:
            _walk_uses(a, order, out)
    elif isinstance(expr, Index):
        _walk_uses(expr.base, order, out)
        _walk_uses(expr.index, order, out)


def _walk_uses_inner(expr, order, out) -> None:
    # The root of a member chain was already recorded once for the chain.
    while isinstance(expr, MemberAccess):
        expr = expr.base
    if not isinstance(expr, Ident):
        _walk_uses(expr, order, out)


def _assignments(expr, out: List[Assign]) -> None:
    if isinstance(expr, Assign):
        _assignments(expr.rhs, out)
        out.append(expr)
    elif isinstance(expr, Binary):
        _assignments(expr.lhs, out)
        _assignments(expr.rhs, out)
    elif isinstance(expr, Conditional):
        for e in (expr.cond, expr.then, expr.other):
            _assignments(e, out)
    elif isinstance(expr, (Unary, Cast)):
        _assignments(expr.operand, out)
    elif isinstance(expr, (Call, IndirectCall)):
        for a in expr.args:
            _assignments(a, out)


def build_def_use(fn: FunctionAst) -> DefUse:
    du = DefUse(fn.name)
    du.declared.update(fn.param_names)
    for order, (expr, path) in enumerate(iter_statement_exprs(fn.body)):
        stmt = path[-1]
        uses: List[Site] = []
        if isinstance(stmt, Decl) and expr is stmt.init:
            du.declared.add(stmt.name)
            _walk_uses(expr, order, uses)
            _add_def(du, stmt.name, stmt.name, stmt.line, order, stmt.init)
            src = _strip_casts(stmt.init)
            if _is_chain(src):
                du.copy_edges.add(CopyEdge(root_var(src), stmt.name, src, Ident(stmt.name)))
        else:
            _walk_uses(expr, order, uses)
            assigns: List[Assign] = []
            _assignments(expr, assigns)
            for a in assigns:
                root = root_var(a.lhs)
                if root is None:
                    continue
                value = a.rhs if (a.op == "=" and isinstance(a.lhs, Ident)) else None
                _add_def(du, root, print_expr(a.lhs), a.line, order, value)
                src = _strip_casts(a.rhs)
                if a.op == "=" and _is_chain(a.lhs) and _is_chain(src):
                    du.copy_edges.add(CopyEdge(root_var(src), root, src, a.lhs))
        for u in uses:
            du.uses.setdefault(u.var, []).append(u)
    for stmt_decl in _decls_without_init(fn):
        du.declared.add(stmt_decl)
    # keep only edges over declared variables
    du.copy_edges = {e for e in du.copy_edges if e.src in du.declared and e.dst in du.declared}
    return du


def _add_def(du: DefUse, var: str, text: str, line: int, order: int, value) -> None:
    du.defs.setdefault(var, []).append(Site(var, text, line, order))
    du.def_values.setdefault(var, []).append(value if text == var else None)


def _decls_without_init(fn: FunctionAst) -> List[str]:
    names: List[str] = []

    def visit(s):
        if isinstance(s, Decl):
            names.append(s.name)
        for attr in ("stmts", "init"):
            v = getattr(s, attr, None)
            if isinstance(v, tuple):
                for c in v:
                    visit(c)
        for attr in ("then", "other", "body"):
            v = getattr(s, attr, None)
            if v is not None and not isinstance(v, tuple):
                visit(v)
        if hasattr(s, "cases"):
            for c in s.cases:
                for b in c.body:
                    visit(b)

    visit(fn.body)
    return names
