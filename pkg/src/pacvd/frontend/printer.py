"""Pretty-printer for the C-subset AST.

Output re-parses to a structurally identical tree.  Expression text is
also what guard conditions and key variables are rendered with, so the
spelling follows C source conventions: ``srp->rq->cmd != srp->rq->__cmd``.
"""

from __future__ import annotations

from typing import List

from .nodes import (
    Assign, Binary, Block, Break, Call, Cast, Conditional, Continue, Decl, DoWhile,
    ExprStmt, For, FunctionAst, Ident, If, Index, IndirectCall, Literal,
    MemberAccess, Opaque, Return, SourceUnit, Switch, TypeName, Unary, While,
)
from .parser import BINARY_PRECEDENCE

_COMMA, _ASSIGN, _COND = 0, 1, 2
_UNARY, _POSTFIX, _PRIMARY = 14, 15, 16


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _COMMA if e.op == "," else BINARY_PRECEDENCE[e.op] + 2
    if isinstance(e, Assign):
        return _ASSIGN
    if isinstance(e, Conditional):
        return _COND
    if isinstance(e, (Cast,)) or (isinstance(e, Unary) and not e.postfix):
        return _UNARY
    if isinstance(e, (Call, IndirectCall, Index, MemberAccess, Unary)):
        return _POSTFIX
    return _PRIMARY


def _wrap(e, min_prec: int) -> str:
    text = print_expr(e)
    return f"({text})" if _prec(e) < min_prec else text


def print_expr(e) -> str:
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, (Literal, Opaque)):
        return e.text
    if isinstance(e, TypeName):
        return e.text
    if isinstance(e, MemberAccess):
        return f"{_wrap(e.base, _POSTFIX)}{'->' if e.arrow else '.'}{e.field}"
    if isinstance(e, Call):
        return f"{e.callee}({', '.join(_wrap(a, _ASSIGN) for a in e.args)})"
    if isinstance(e, IndirectCall):
        return f"{_wrap(e.target, _POSTFIX)}({', '.join(_wrap(a, _ASSIGN) for a in e.args)})"
    if isinstance(e, Index):
        return f"{_wrap(e.base, _POSTFIX)}[{print_expr(e.index)}]"
    if isinstance(e, Unary):
        if e.postfix:
            return f"{_wrap(e.operand, _POSTFIX)}{e.op}"
        if e.op == "sizeof":
            return f"sizeof({print_expr(e.operand)})"
        inner = _wrap(e.operand, _UNARY)
        if inner[:1] in ("-", "+", "&") and inner[:1] == e.op[-1:]:
            inner = f"({inner})"
        return f"{e.op}{inner}"
    if isinstance(e, Cast):
        return f"({e.type_text}){_wrap(e.operand, _UNARY)}"
    if isinstance(e, Binary):
        p = _prec(e)
        sep = ", " if e.op == "," else f" {e.op} "
        return f"{_wrap(e.lhs, p)}{sep}{_wrap(e.rhs, p + 1)}"
    if isinstance(e, Conditional):
        return f"{_wrap(e.cond, _COND + 1)} ? {print_expr(e.then)} : {_wrap(e.other, _COND)}"
    if isinstance(e, Assign):
        return f"{_wrap(e.lhs, _UNARY)} {e.op} {_wrap(e.rhs, _ASSIGN)}"
    raise TypeError(f"not an expression: {e!r}")


def _join(type_text: str, name: str) -> str:
    return f"{type_text}{name}" if type_text.endswith("*") else f"{type_text} {name}"


def _decl_text(d: Decl) -> str:
    t = d.type_text
    if "(*)" in t:
        head = t.replace("(*)", f"(*{d.name})", 1)
    elif "[" in t:
        i = t.index("[")
        head = _join(t[:i].rstrip(), d.name) + t[i:]
    else:
        head = _join(t, d.name)
    if d.init is not None:
        head += f" = {_wrap(d.init, _ASSIGN)}"
    return head


def _stmt_lines(s, indent: int) -> List[str]:
    pad = "    " * indent
    if isinstance(s, Block):
        out = [pad + "{"]
        for child in s.stmts:
            out.extend(_stmt_lines(child, indent + 1))
        out.append(pad + "}")
        return out
    if isinstance(s, ExprStmt):
        return [f"{pad}{print_expr(s.expr)};"]
    if isinstance(s, Decl):
        return [f"{pad}{_decl_text(s)};"]
    if isinstance(s, Return):
        return [f"{pad}return;" if s.value is None else f"{pad}return {print_expr(s.value)};"]
    if isinstance(s, Break):
        return [f"{pad}break;"]
    if isinstance(s, Continue):
        return [f"{pad}continue;"]
    if isinstance(s, If):
        out = [f"{pad}if ({print_expr(s.cond)})"] + _body(s.then, indent)
        if s.other is not None:
            out += [f"{pad}else"] + _body(s.other, indent)
        return out
    if isinstance(s, While):
        return [f"{pad}while ({print_expr(s.cond)})"] + _body(s.body, indent)
    if isinstance(s, DoWhile):
        return [f"{pad}do"] + _body(s.body, indent) + [f"{pad}while ({print_expr(s.cond)});"]
    if isinstance(s, For):
        if not s.init:
            init = ";"
        elif all(isinstance(i, Decl) for i in s.init):
            rest = [d.name if d.init is None else f"{d.name} = {_wrap(d.init, _ASSIGN)}" for d in s.init[1:]]
            init = ", ".join([_decl_text(s.init[0])] + rest) + ";"
        else:
            init = f"{print_expr(s.init[0].expr)};"
        cond = print_expr(s.cond) if s.cond is not None else ""
        step = print_expr(s.step) if s.step is not None else ""
        return [f"{pad}for ({init} {cond}; {step})"] + _body(s.body, indent)
    if isinstance(s, Switch):
        out = [f"{pad}switch ({print_expr(s.scrutinee)})", pad + "{"]
        for case in s.cases:
            for label in case.labels:
                out.append(f"{pad}case {print_expr(label)}:")
            if case.is_default:
                out.append(f"{pad}default:")
            for child in case.body:
                out.extend(_stmt_lines(child, indent + 1))
        out.append(pad + "}")
        return out
    raise TypeError(f"not a statement: {s!r}")


def _body(s, indent: int) -> List[str]:
    if isinstance(s, Block):
        return _stmt_lines(s, indent)
    return _stmt_lines(s, indent + 1)


def print_function(fn: FunctionAst) -> str:
    params = []
    for p in fn.params:
        t = p.type_text
        if "(*)" in t:
            params.append(t.replace("(*)", f"(*{p.name})", 1))
        elif "[" in t:
            i = t.index("[")
            params.append(_join(t[:i].rstrip(), p.name) + t[i:])
        else:
            params.append(_join(t, p.name))
    head = f"{fn.return_type} {fn.name}({', '.join(params) or 'void'})"
    return "\n".join([head] + _stmt_lines(fn.body, 0)) + "\n"


def print_unit(unit: SourceUnit) -> str:
    return "\n".join(print_function(fn) for fn in unit.functions)
