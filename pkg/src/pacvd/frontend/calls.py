"""Call-expression extraction in source order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Tuple

from .nodes import (
    Assign, Binary, Block, Call, Cast, Conditional, Decl, DoWhile, ExprStmt, For,
    FunctionAst, If, Index, IndirectCall, MemberAccess, Return, Switch, Unary, While,
)


@dataclass(frozen=True)
class CallRecord:
    callee: str
    args: tuple
    path: Tuple[object, ...]  # enclosing statements, outermost first
    node: Call


def iter_calls(expr) -> Iterator[Call]:
    """Direct calls inside ``expr`` in evaluation-friendly post-order.

    Arguments come before the call that consumes them, so ``g(h(x))``
    yields ``h`` then ``g``.
    """
    if expr is None:
        return
    if isinstance(expr, Call):
        for a in expr.args:
            yield from iter_calls(a)
        yield expr
    elif isinstance(expr, IndirectCall):
        yield from iter_calls(expr.target)
        for a in expr.args:
            yield from iter_calls(a)
    elif isinstance(expr, (Binary, Assign)):
        yield from iter_calls(expr.lhs)
        yield from iter_calls(expr.rhs)
    elif isinstance(expr, Conditional):
        yield from iter_calls(expr.cond)
        yield from iter_calls(expr.then)
        yield from iter_calls(expr.other)
    elif isinstance(expr, (Unary, Cast)):
        yield from iter_calls(expr.operand)
    elif isinstance(expr, MemberAccess):
        yield from iter_calls(expr.base)
    elif isinstance(expr, Index):
        yield from iter_calls(expr.base)
        yield from iter_calls(expr.index)


def iter_statement_exprs(stmt, path=()) -> Iterator[Tuple[object, tuple]]:
    """Yield ``(expr, path)`` for every expression owned by ``stmt``, in source order."""
    here = path + (stmt,)
    if isinstance(stmt, Block):
        for s in stmt.stmts:
            yield from iter_statement_exprs(s, here)
    elif isinstance(stmt, ExprStmt):
        yield stmt.expr, here
    elif isinstance(stmt, Decl):
        if stmt.init is not None:
            yield stmt.init, here
    elif isinstance(stmt, Return):
        if stmt.value is not None:
            yield stmt.value, here
    elif isinstance(stmt, If):
        yield stmt.cond, here
        yield from iter_statement_exprs(stmt.then, here)
        if stmt.other is not None:
            yield from iter_statement_exprs(stmt.other, here)
    elif isinstance(stmt, While):
        yield stmt.cond, here
        yield from iter_statement_exprs(stmt.body, here)
    elif isinstance(stmt, DoWhile):
        yield from iter_statement_exprs(stmt.body, here)
        yield stmt.cond, here
    elif isinstance(stmt, For):
        for s in stmt.init:
            yield from iter_statement_exprs(s, here)
        if stmt.cond is not None:
            yield stmt.cond, here
        if stmt.step is not None:
            yield stmt.step, here
        yield from iter_statement_exprs(stmt.body, here)
    elif isinstance(stmt, Switch):
        yield stmt.scrutinee, here
        for case in stmt.cases:
            for s in case.body:
                yield from iter_statement_exprs(s, here)


def extract_calls(fn: FunctionAst) -> List[CallRecord]:
    """All direct calls in ``fn`` in source order, with their statement path."""
    out: List[CallRecord] = []
    for expr, path in iter_statement_exprs(fn.body):
        for call in iter_calls(expr):
            out.append(CallRecord(call.callee, call.args, path, call))
    return out
