"""Recursive-descent parser for the analysed C subset.

Supported: function definitions; Block/If/While/Do/For/Switch/Return/
Break/Continue/Decl/ExprStmt statements; identifiers, member access,
indexing, unary/binary/ternary operators, casts, assignment, calls and
literals.  Top-level declarations, prototypes, typedefs and struct
definitions are skipped.  Inside a function body, a statement the
expression grammar cannot model is kept as an ``Opaque`` expression
statement so real-world snippets degrade instead of failing.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple, Union

from .lexer import TYPE_KEYWORDS, EncodingError, ParseError, Token, byte_offsets, tokenize
from .nodes import (
    Assign, Binary, Block, Break, Call, Cast, Conditional, Continue, Decl, DoWhile,
    Expr, ExprStmt, For, FunctionAst, Ident, If, Index, IndirectCall, Literal,
    MemberAccess, Opaque, Param, Return, SourceUnit, Stmt, Switch, SwitchCase,
    TypeName, Unary, While,
)

logger = logging.getLogger(__name__)

MAX_NESTING = 256

ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=")

BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7,
    "<<": 8, ">>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}

PREFIX_OPS = ("!", "~", "-", "+", "*", "&", "++", "--")

_ASM = ("asm", "__asm", "__asm__")
_CAST_FOLLOWERS = ("id", "num", "str", "chr")


class _Parser:
    def __init__(self, text: str, path: str):
        self.text = text
        self.path = path
        self.toks = tokenize(text, path)
        self.pos = 0
        self.depth = 0
        self.to_byte = byte_offsets(text)

    # -------------------------------------------------------------- helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        i = min(self.pos + k, len(self.toks) - 1)
        return self.toks[i]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, expected: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"expected {expected}, found {found}", t.line, t.col, self.path)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(repr(op))
        return self.advance()

    def expect_kw(self, kw: str) -> Token:
        if not (self.tok.kind == "kw" and self.tok.text == kw):
            raise self.error(repr(kw))
        return self.advance()

    def meta(self, start: Token) -> dict:
        end = self.toks[self.pos - 1].end if self.pos > 0 else start.end
        return {"span": (self.to_byte(start.start), self.to_byte(max(end, start.start))), "line": start.line}

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ParseError("nesting too deep", self.tok.line, self.tok.col, self.path)

    def leave(self) -> None:
        self.depth -= 1

    def skip_balanced(self) -> None:
        """Skip one token, or a whole bracketed group if it opens one."""
        pairs = {"(": ")", "[": "]", "{": "}"}
        opener = self.advance()
        if not (opener.kind == "op" and opener.text in pairs):
            return
        stack = [pairs[opener.text]]
        while stack:
            t = self.advance()
            if t.kind == "eof":
                raise ParseError(f"unbalanced {opener.text!r}", opener.line, opener.col, self.path)
            if t.kind == "op":
                if t.text in pairs:
                    stack.append(pairs[t.text])
                elif t.text in (")", "]", "}"):
                    if t.text != stack[-1]:
                        raise ParseError(f"mismatched {t.text!r}", t.line, t.col, self.path)
                    stack.pop()

    # ------------------------------------------------------------ top level

    def parse_unit(self) -> SourceUnit:
        functions: List[FunctionAst] = []
        seen = set()
        while self.tok.kind != "eof":
            fn = self.parse_external()
            if fn is None:
                continue
            if fn.name in seen:
                raise ParseError(f"redefinition of function {fn.name!r}", fn.line, 1, self.path)
            seen.add(fn.name)
            functions.append(fn)
        return SourceUnit(self.path, self.text, tuple(functions))

    def parse_external(self) -> Optional[FunctionAst]:
        start_index = self.pos
        if self.tok.is_op(";"):
            self.advance()
            return None
        while True:
            t = self.tok
            if t.kind == "eof":
                raise self.error("';' or '{'")
            if t.is_op(";"):
                self.advance()
                return None
            if t.is_op("(", "["):
                self.skip_balanced()
                continue
            if t.is_op(")", "]", "}"):
                raise self.error("declaration")
            if t.is_op("{"):
                head = _strip_attributes(self.toks[start_index:self.pos])
                if self._is_function_head(head):
                    return self.parse_function(head)
                # struct/union/enum body or aggregate initializer
                self.skip_balanced()
                continue
            self.advance()

    @staticmethod
    def _is_function_head(head: Sequence[Token]) -> bool:
        if len(head) < 3 or not head[-1].is_op(")"):
            return False
        if any(t.is_op("=") for t in head):
            return False
        open_index = _matching_open(head, len(head) - 1)
        return open_index is not None and open_index > 0 and head[open_index - 1].kind == "id"

    def parse_function(self, head: Sequence[Token]) -> FunctionAst:
        close = len(head) - 1
        open_index = _matching_open(head, close)
        name_tok = head[open_index - 1]
        return_type = " ".join(t.text for t in head[:open_index - 1]) or "int"
        params = _parse_params(head[open_index + 1:close], self.path)
        body = self.parse_block()
        start = head[0]
        end = self.toks[self.pos - 1]
        return FunctionAst(
            name=name_tok.text,
            params=params,
            body=body,
            return_type=return_type,
            span=(self.to_byte(start.start), self.to_byte(end.end)),
            line=start.line,
        )

    # ----------------------------------------------------------- statements

    def parse_block(self) -> Block:
        start = self.expect_op("{")
        self.enter()
        stmts: List[Stmt] = []
        while not self.tok.is_op("}"):
            if self.tok.kind == "eof":
                raise self.error("'}'")
            stmts.extend(self.parse_statement_list())
        self.advance()
        self.leave()
        return Block(tuple(stmts), **self.meta(start))

    def parse_statement(self) -> Stmt:
        stmts = self.parse_statement_list()
        if len(stmts) == 1:
            return stmts[0]
        first = stmts[0] if stmts else None
        return Block(tuple(stmts), span=first.span if first else (0, 0), line=first.line if first else 0)

    def parse_statement_list(self) -> List[Stmt]:
        """One source statement; a multi-declarator declaration yields several."""
        t = self.tok
        if t.is_op("{"):
            return [self.parse_block()]
        if t.is_op(";"):
            self.advance()
            return [Block((), **self.meta(t))]
        if t.kind == "kw":
            kw = t.text
            if kw == "if":
                return [self.parse_if()]
            if kw == "while":
                return [self.parse_while()]
            if kw == "do":
                return [self.parse_do()]
            if kw == "for":
                return [self.parse_for()]
            if kw == "switch":
                return [self.parse_switch()]
            if kw == "return":
                self.advance()
                value = None if self.tok.is_op(";") else self.parse_expr()
                self.expect_op(";")
                return [Return(value, **self.meta(t))]
            if kw == "break":
                self.advance()
                self.expect_op(";")
                return [Break(**self.meta(t))]
            if kw == "continue":
                self.advance()
                self.expect_op(";")
                return [Continue(**self.meta(t))]
            if kw in ("goto",) + _ASM:
                return [self.parse_opaque()]
            if kw in ("case", "default"):
                raise self.error("statement (case label outside switch)")
            if kw == "else":
                raise self.error("statement")
        if t.kind == "id" and self.peek().is_op(":"):
            # Labels are dropped; the labelled statement is kept.
            self.advance()
            self.advance()
            if self.tok.is_op("}"):
                return []
            return self.parse_statement_list()
        if self.at_declaration():
            return self.parse_declaration()
        return [self.parse_expr_statement()]

    def parse_expr_statement(self) -> Stmt:
        start = self.tok
        saved = self.pos
        try:
            expr = self.parse_expr()
            self.expect_op(";")
            return ExprStmt(expr, **self.meta(start))
        except ParseError as exc:
            self.pos = saved
            try:
                return self.parse_opaque()
            except ParseError:
                raise exc from None

    def parse_opaque(self) -> Stmt:
        start = self.tok
        first = self.pos
        while not self.tok.is_op(";"):
            if self.tok.kind == "eof" or self.tok.is_op("}"):
                raise self.error("';'")
            self.skip_balanced()
        text = " ".join(t.text for t in self.toks[first:self.pos])
        self.advance()
        logger.debug("%s:%d: opaque statement %r", self.path, start.line, text)
        return ExprStmt(Opaque(text, **self.meta(start)), **self.meta(start))

    def parse_paren_cond(self) -> Expr:
        self.expect_op("(")
        cond = self.parse_expr()
        self.expect_op(")")
        return cond

    def parse_if(self) -> Stmt:
        start = self.advance()
        self.enter()
        cond = self.parse_paren_cond()
        then = self.parse_statement()
        other = None
        if self.tok.kind == "kw" and self.tok.text == "else":
            self.advance()
            other = self.parse_statement()
        self.leave()
        return If(cond, then, other, **self.meta(start))

    def parse_while(self) -> Stmt:
        start = self.advance()
        self.enter()
        cond = self.parse_paren_cond()
        body = self.parse_statement()
        self.leave()
        return While(cond, body, **self.meta(start))

    def parse_do(self) -> Stmt:
        start = self.advance()
        self.enter()
        body = self.parse_statement()
        self.expect_kw("while")
        cond = self.parse_paren_cond()
        self.expect_op(";")
        self.leave()
        return DoWhile(body, cond, **self.meta(start))

    def parse_for(self) -> Stmt:
        start = self.advance()
        self.enter()
        self.expect_op("(")
        init: Tuple[Stmt, ...] = ()
        if self.tok.is_op(";"):
            self.advance()
        elif self.at_declaration():
            init = tuple(self.parse_declaration())
        else:
            init_start = self.tok
            expr = self.parse_expr()
            self.expect_op(";")
            init = (ExprStmt(expr, **self.meta(init_start)),)
        cond = None if self.tok.is_op(";") else self.parse_expr()
        self.expect_op(";")
        step = None if self.tok.is_op(")") else self.parse_expr()
        self.expect_op(")")
        body = self.parse_statement()
        self.leave()
        return For(init, cond, step, body, **self.meta(start))

    def parse_switch(self) -> Stmt:
        start = self.advance()
        self.enter()
        scrutinee = self.parse_paren_cond()
        self.expect_op("{")
        cases: List[SwitchCase] = []
        labels: List[Expr] = []
        is_default = False
        body: List[Stmt] = []
        case_start: Optional[Token] = None
        seen_labels = set()
        have_default = False

        def flush():
            if case_start is not None:
                cases.append(SwitchCase(tuple(labels), is_default, tuple(body), span=(0, 0), line=case_start.line))

        while not self.tok.is_op("}"):
            t = self.tok
            if t.kind == "eof":
                raise self.error("'}'")
            if t.kind == "kw" and t.text in ("case", "default"):
                if body or case_start is None:
                    flush()
                    labels, is_default, body = [], False, []
                    case_start = t
                self.advance()
                if t.text == "case":
                    label = self.parse_conditional()
                    key = _label_key(label)
                    if key in seen_labels:
                        raise ParseError(f"duplicate case label {key}", t.line, t.col, self.path)
                    seen_labels.add(key)
                    labels.append(label)
                else:
                    if have_default:
                        raise ParseError("multiple default labels", t.line, t.col, self.path)
                    have_default = True
                    is_default = True
                self.expect_op(":")
                continue
            if case_start is None:
                raise self.error("'case' or 'default'")
            body.extend(self.parse_statement_list())
        flush()
        self.advance()
        self.leave()
        return Switch(scrutinee, tuple(cases), **self.meta(start))

    # --------------------------------------------------------- declarations

    def at_declaration(self) -> bool:
        t = self.tok
        if t.kind == "kw":
            return t.text in TYPE_KEYWORDS
        if t.kind != "id":
            return False
        nxt = self.peek()
        if nxt.kind == "id":
            return True
        if nxt.kind == "kw" and nxt.text in ("const", "volatile", "restrict", "__restrict"):
            return True
        if nxt.is_op("*"):
            k = 1
            while self.peek(k).is_op("*") or (self.peek(k).kind == "kw" and self.peek(k).text == "const"):
                k += 1
            return self.peek(k).kind == "id" and self.peek(k + 1).is_op("=", ";", ",", "[", ")")
        return False

    def parse_declaration(self) -> List[Stmt]:
        start = self.tok
        base: List[str] = []
        saw_type = False
        while True:
            t = self.tok
            if t.kind == "kw" and t.text in ("struct", "union", "enum"):
                base.append(self.advance().text)
                if self.tok.kind == "id":
                    base.append(self.advance().text)
                if self.tok.is_op("{"):
                    self.skip_balanced()
                saw_type = True
                continue
            if t.kind == "kw" and t.text in TYPE_KEYWORDS:
                base.append(self.advance().text)
                if t.text not in ("const", "volatile", "static", "extern", "register", "auto",
                                  "inline", "typedef", "restrict", "__restrict", "__inline",
                                  "__inline__", "__const"):
                    saw_type = True
                continue
            if t.kind == "id" and not saw_type:
                base.append(self.advance().text)
                saw_type = True
                continue
            break
        base_text = " ".join(base)
        decls: List[Stmt] = []
        while True:
            decls.append(self.parse_declarator(base_text, start))
            if self.tok.is_op(","):
                self.advance()
                continue
            break
        self.expect_op(";")
        return decls

    def parse_declarator(self, base_text: str, start: Token) -> Decl:
        decl_start = self.tok
        stars = ""
        while self.tok.is_op("*") or (self.tok.kind == "kw" and self.tok.text in ("const", "volatile", "restrict", "__restrict")):
            t = self.advance()
            stars += "*" if t.text == "*" else f" {t.text} "
        suffix = ""
        if self.tok.is_op("("):
            # function-pointer declarator: T (*name)(params)
            self.advance()
            while self.tok.is_op("*"):
                self.advance()
            if self.tok.kind != "id":
                raise self.error("declarator name")
            name = self.advance().text
            self.expect_op(")")
            group_start = self.pos
            if self.tok.is_op("("):
                self.skip_balanced()
            params = _tidy_type(self.toks[group_start:self.pos])
            type_text = f"{base_text} {stars}(*){params}".replace("  ", " ").strip()
        else:
            if self.tok.kind != "id":
                raise self.error("declarator name")
            name = self.advance().text
            while self.tok.is_op("["):
                group_start = self.pos
                self.skip_balanced()
                suffix += "".join(t.text for t in self.toks[group_start:self.pos])
            type_text = " ".join(f"{base_text} {stars.strip()}".split()) + suffix
        init = None
        if self.tok.is_op("="):
            self.advance()
            if self.tok.is_op("{"):
                init = self.parse_brace_literal()
            else:
                init = self.parse_assign()
        return Decl(name, type_text, init, **self.meta(decl_start))

    def parse_brace_literal(self) -> Expr:
        start = self.tok
        first = self.pos
        self.skip_balanced()
        text = " ".join(t.text for t in self.toks[first:self.pos])
        return Literal(text, **self.meta(start))

    # ---------------------------------------------------------- expressions

    def parse_expr(self) -> Expr:
        start = self.tok
        expr = self.parse_assign()
        while self.tok.is_op(","):
            self.advance()
            rhs = self.parse_assign()
            expr = Binary(",", expr, rhs, **self.meta(start))
        return expr

    def parse_assign(self) -> Expr:
        start = self.tok
        self.enter()
        lhs = self.parse_conditional()
        if self.tok.kind == "op" and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            rhs = self.parse_assign()
            lhs = Assign(lhs, rhs, op, **self.meta(start))
        self.leave()
        return lhs

    def parse_conditional(self) -> Expr:
        start = self.tok
        cond = self.parse_binary(1)
        if self.tok.is_op("?"):
            self.advance()
            then = self.parse_expr()
            self.expect_op(":")
            other = self.parse_conditional()
            return Conditional(cond, then, other, **self.meta(start))
        return cond

    def parse_binary(self, min_prec: int) -> Expr:
        start = self.tok
        lhs = self.parse_unary()
        while True:
            t = self.tok
            prec = BINARY_PRECEDENCE.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return lhs
            self.advance()
            rhs = self.parse_binary(prec + 1)
            lhs = Binary(t.text, lhs, rhs, **self.meta(start))

    def parse_unary(self) -> Expr:
        start = self.tok
        self.enter()
        try:
            if start.kind == "op" and start.text in PREFIX_OPS:
                self.advance()
                operand = self.parse_unary()
                return Unary(start.text, operand, **self.meta(start))
            if start.kind == "kw" and start.text == "sizeof":
                self.advance()
                if self.tok.is_op("(") and self._type_name_follows(self.pos + 1):
                    self.advance()
                    tname = self.parse_type_name()
                    self.expect_op(")")
                    return Unary("sizeof", tname, **self.meta(start))
                return Unary("sizeof", self.parse_unary(), **self.meta(start))
            if start.is_op("(") and self._is_cast():
                self.advance()
                tname = self.parse_type_name()
                self.expect_op(")")
                if self.tok.is_op("{"):
                    return Cast(tname.text, self.parse_brace_literal(), **self.meta(start))
                operand = self.parse_unary()
                return Cast(tname.text, operand, **self.meta(start))
            return self.parse_postfix()
        finally:
            self.leave()

    def _type_name_follows(self, i: int) -> bool:
        t = self.toks[i]
        if t.kind == "kw":
            return t.text in TYPE_KEYWORDS
        if t.kind != "id":
            return False
        j = i + 1
        while self.toks[j].is_op("*") or (self.toks[j].kind == "kw" and self.toks[j].text == "const"):
            j += 1
        return self.toks[j].is_op(")") and j > i + 1

    def _is_cast(self) -> bool:
        i = self.pos + 1
        if self._type_name_follows(i):
            return True
        # "(ident) operand": a parenthesised typedef name followed by an operand
        t = self.toks[i]
        if t.kind == "id" and self.toks[i + 1].is_op(")"):
            nxt = self.toks[i + 2]
            if nxt.kind in _CAST_FOLLOWERS or nxt.is_op("(", "!", "~"):
                return True
            if nxt.kind == "kw" and nxt.text == "sizeof":
                return True
        return False

    def parse_type_name(self) -> TypeName:
        start = self.tok
        parts: List[str] = []
        while not self.tok.is_op(")"):
            t = self.tok
            if t.kind == "eof":
                raise self.error("')'")
            if t.is_op("(", "["):
                first = self.pos
                self.skip_balanced()
                parts.append("".join(x.text for x in self.toks[first:self.pos]))
                continue
            if not (t.kind in ("kw", "id") or t.is_op("*")):
                raise self.error("type name")
            parts.append(self.advance().text)
        return TypeName(" ".join(parts), **self.meta(start))

    def parse_postfix(self) -> Expr:
        start = self.tok
        expr = self.parse_primary()
        while True:
            t = self.tok
            if t.is_op("("):
                self.advance()
                args: List[Expr] = []
                if not self.tok.is_op(")"):
                    args.append(self.parse_assign())
                    while self.tok.is_op(","):
                        self.advance()
                        args.append(self.parse_assign())
                self.expect_op(")")
                if isinstance(expr, Ident):
                    expr = Call(expr.name, tuple(args), **self.meta(start))
                else:
                    expr = IndirectCall(expr, tuple(args), **self.meta(start))
            elif t.is_op("["):
                self.advance()
                index = self.parse_expr()
                self.expect_op("]")
                expr = Index(expr, index, **self.meta(start))
            elif t.is_op(".", "->"):
                self.advance()
                if self.tok.kind != "id":
                    raise self.error("member name")
                name = self.advance().text
                expr = MemberAccess(expr, name, t.text == "->", **self.meta(start))
            elif t.is_op("++", "--"):
                self.advance()
                expr = Unary(t.text, expr, postfix=True, **self.meta(start))
            else:
                return expr

    def parse_primary(self) -> Expr:
        t = self.tok
        if t.kind == "id":
            self.advance()
            return Ident(t.text, **self.meta(t))
        if t.kind in ("num", "chr"):
            self.advance()
            return Literal(t.text, **self.meta(t))
        if t.kind == "str":
            parts = []
            while self.tok.kind == "str":
                parts.append(self.advance().text)
            return Literal(" ".join(parts), **self.meta(t))
        if t.is_op("("):
            self.advance()
            expr = self.parse_expr()
            self.expect_op(")")
            return expr
        raise self.error("expression")


def _label_key(label: Expr) -> str:
    from .printer import print_expr

    return print_expr(label)


def _matching_open(toks: Sequence[Token], close: int) -> Optional[int]:
    depth = 0
    for i in range(close, -1, -1):
        t = toks[i]
        if t.is_op(")"):
            depth += 1
        elif t.is_op("("):
            depth -= 1
            if depth == 0:
                return i
    return None


def _parse_params(toks: Sequence[Token], path: str) -> Tuple[Param, ...]:
    groups: List[List[Token]] = [[]]
    depth = 0
    for t in toks:
        if t.is_op("(", "["):
            depth += 1
        elif t.is_op(")", "]"):
            depth -= 1
        if t.is_op(",") and depth == 0:
            groups.append([])
        else:
            groups[-1].append(t)
    params: List[Param] = []
    for i, group in enumerate(groups):
        if not group:
            continue
        if len(group) == 1 and group[0].kind == "kw" and group[0].text == "void":
            continue
        if group[0].is_op("..."):
            continue
        name_index = _param_name_index(group)
        if name_index is None:
            params.append(Param(f"__arg{i}", _tidy_type(group)))
            continue
        type_toks = group[:name_index] + group[name_index + 1:]
        params.append(Param(group[name_index].text, _tidy_type(type_toks)))
    return tuple(params)


def _tidy_type(toks: Sequence[Token]) -> str:
    text = " ".join(t.text for t in toks)
    for a, b in (("( ", "("), (" )", ")"), (" [", "["), ("[ ", "["), (" ]", "]"), ("(*)(", "(*)(")):
        text = text.replace(a, b)
    return text.replace(") (", ")(")


def _param_name_index(group: Sequence[Token]) -> Optional[int]:
    for i in range(len(group) - 2):
        if group[i].is_op("(") and group[i + 1].is_op("*") and group[i + 2].kind == "id":
            return i + 2
    last = None
    for i, t in enumerate(group):
        if t.is_op("["):
            break
        if t.kind == "id":
            last = i
    if last is None or last == 0:
        return None  # unnamed parameter such as "size_t" or "Sg_fd *"
    prev = group[last - 1]
    if prev.kind == "kw" and prev.text in ("struct", "union", "enum"):
        return None
    return last


def _strip_attributes(head: Sequence[Token]) -> Sequence[Token]:
    while head and head[-1].is_op(")"):
        open_index = _matching_open(head, len(head) - 1)
        if open_index is None or open_index == 0:
            break
        if head[open_index - 1].text not in ("__attribute__", "__attribute"):
            break
        head = head[:open_index - 1]
    return head


def parse_unit(path: str, text: Union[str, bytes]) -> SourceUnit:
    """Parse C-subset source into a :class:`SourceUnit`.

    ``text`` may be ``bytes`` (decoded as strict UTF-8) or ``str``.  Raises
    :class:`ParseError` on malformed input and :class:`EncodingError` on
    invalid UTF-8; it never raises anything else.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"invalid UTF-8 at byte {exc.start}", 0, 0, path) from None
    parser = _Parser(text, path)
    try:
        return parser.parse_unit()
    except RecursionError:
        t = parser.tok
        raise ParseError("nesting too deep", t.line, t.col, path) from None
