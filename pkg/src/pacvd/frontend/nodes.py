"""AST node types for the C subset.

Every node carries a byte ``span`` and a ``line``; both are excluded from
equality so that two trees parsed from differently formatted text compare
equal when their structure matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class Node:
    span: Tuple[int, int] = field(default=(0, 0), compare=False, repr=False, kw_only=True)
    line: int = field(default=0, compare=False, repr=False, kw_only=True)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Ident(Node):
    name: str


@dataclass(frozen=True)
class Literal(Node):
    text: str


@dataclass(frozen=True)
class TypeName(Node):
    """Type operand of ``sizeof(T)`` or a compound literal."""

    text: str


@dataclass(frozen=True)
class MemberAccess(Node):
    base: "Expr"
    field: str
    arrow: bool


@dataclass(frozen=True)
class Call(Node):
    callee: str
    args: Tuple["Expr", ...]


@dataclass(frozen=True)
class IndirectCall(Node):
    """Call through a function pointer, e.g. ``req->end_io(req, err)``.

    Function pointers are outside the analysed subset: these never resolve to
    a callee, but their arguments are still walked for nested direct calls.
    """

    target: "Expr"
    args: Tuple["Expr", ...]


@dataclass(frozen=True)
class Index(Node):
    base: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: "Expr"
    postfix: bool = False


@dataclass(frozen=True)
class Cast(Node):
    type_text: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary(Node):
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Conditional(Node):
    cond: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class Assign(Node):
    lhs: "Expr"
    rhs: "Expr"
    op: str = "="


@dataclass(frozen=True)
class Opaque(Node):
    """Token text of a construct the parser does not model (inline asm, goto)."""

    text: str


Expr = Union[
    Ident, Literal, TypeName, MemberAccess, Call, IndirectCall, Index, Unary,
    Cast, Binary, Conditional, Assign, Opaque,
]


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Block(Node):
    stmts: Tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: "Stmt"
    other: Optional["Stmt"] = None


@dataclass(frozen=True)
class While(Node):
    cond: Expr
    body: "Stmt"


@dataclass(frozen=True)
class DoWhile(Node):
    body: "Stmt"
    cond: Expr


@dataclass(frozen=True)
class For(Node):
    init: Tuple["Stmt", ...]
    cond: Optional[Expr]
    step: Optional[Expr]
    body: "Stmt"


@dataclass(frozen=True)
class SwitchCase(Node):
    labels: Tuple[Expr, ...]
    is_default: bool
    body: Tuple["Stmt", ...]


@dataclass(frozen=True)
class Switch(Node):
    scrutinee: Expr
    cases: Tuple[SwitchCase, ...]


@dataclass(frozen=True)
class Return(Node):
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Break(Node):
    pass


@dataclass(frozen=True)
class Continue(Node):
    pass


@dataclass(frozen=True)
class ExprStmt(Node):
    expr: Expr


@dataclass(frozen=True)
class Decl(Node):
    name: str
    type_text: str
    init: Optional[Expr] = None


Stmt = Union[Block, If, While, DoWhile, For, Switch, Return, Break, Continue, ExprStmt, Decl]


# ------------------------------------------------------------------ top level


@dataclass(frozen=True)
class Param:
    name: str
    type_text: str


@dataclass(frozen=True)
class FunctionAst:
    name: str
    params: Tuple[Param, ...]
    body: Block
    return_type: str = "int"
    span: Tuple[int, int] = field(default=(0, 0), compare=False)
    line: int = field(default=0, compare=False)

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str
    functions: Tuple[FunctionAst, ...]

    def function(self, name: str) -> Optional[FunctionAst]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def source_of(self, fn: FunctionAst) -> str:
        """Original source text of ``fn`` (spans are byte offsets)."""
        raw = self.text.encode("utf-8")
        return raw[fn.span[0]:fn.span[1]].decode("utf-8")
