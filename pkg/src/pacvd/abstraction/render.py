"""Plain-text rendering of usage facts, one section per feature."""

from __future__ import annotations

import re
from typing import Dict, List, Optional, Sequence

from ..catalog import ApiCatalog
from .engine import ApiUsageFacts, FuzzyClass, Level

_IDENT = re.compile(r"[A-Za-z_]\w*")


def quote_expr(text: str) -> str:
    """Parenthesise anything but a plain identifier: ``srp`` vs ``(srp->rq)``."""
    return text if _IDENT.fullmatch(text) else f"({text})"


def empty_line(depth_limit: int) -> str:
    return f"No primitive API activity detected within depth {depth_limit}."


def _by_callee(facts: Sequence[ApiUsageFacts]) -> Dict[str, List[ApiUsageFacts]]:
    grouped: Dict[str, List[ApiUsageFacts]] = {}
    for f in facts:
        grouped.setdefault(f.callee, []).append(f)
    return grouped


def render_fuzzy(facts: Sequence[ApiUsageFacts]) -> List[str]:
    lines: List[str] = []
    for callee, group in _by_callee(facts).items():
        lines.append(f'In the "{callee}" function:')
        present = [f for f in group if f.fuzzy is not FuzzyClass.NONE]
        absent = [f for f in group if f.fuzzy is FuzzyClass.NONE]
        for f in present + absent:
            lines.append(f'{f.fuzzy.phrase}, the "{f.api}" API is called.')
    return lines


def _sentence(api: str, guards: Sequence[str], capital: bool) -> str:
    lead = "If" if capital else "if"
    if not guards:
        return f'{lead} unconditionally, the "{api}" API is called.'
    return f'{lead} {" and ".join(quote_expr(g) for g in guards)}, the "{api}" API is called.'


def render_concrete(facts: Sequence[ApiUsageFacts]) -> List[str]:
    lines: List[str] = []
    for callee, group in _by_callee(facts).items():
        narrated = set()
        header = False
        for f in group:
            for c in f.conditions or ():
                if len(c.chain) == 1:
                    if not header:
                        lines.append(f'In the "{callee}" function:')
                        header = True
                    lines.append(_sentence(c.api, c.guards, True))
                    continue
                parts = []
                for a, b in zip(c.chain, c.chain[1:]):
                    if (a, b) not in narrated:
                        narrated.add((a, b))
                        parts.append(f'In the "{a}" function, the "{b}" function is called.')
                parts.append(f'In the "{c.chain[-1]}" function,')
                lines.extend(parts[:-2])
                lines.append(" ".join(parts[-2:]))
                lines.append(_sentence(c.api, c.guards, False))
    return lines


def render_counts(facts: Sequence[ApiUsageFacts]) -> List[str]:
    lines: List[str] = []
    for callee, group in _by_callee(facts).items():
        lines.append(f'In the "{callee}" function:')
        for i, f in enumerate(group):
            end = "." if i == len(group) - 1 else ","
            lines.append(f'    the "{f.api}" API is called {f.count} times{end}')
    return lines


def render_key_variables(facts: Sequence[ApiUsageFacts]) -> List[str]:
    lines: List[str] = []
    for callee, group in _by_callee(facts).items():
        body = [
            f'    the "{f.api}" API operates on the "{quote_expr(v)}" variable.'
            for f in group
            for v in (f.key_variables or ())
        ]
        if body:
            lines.append(f'In the "{callee}" function:')
            lines.extend(body)
    return lines


def render(facts: Sequence[ApiUsageFacts], level: Level, depth_limit: int,
           include_fuzzy_at_a2: bool = False, catalog: Optional[ApiCatalog] = None) -> str:
    """Deterministic text for ``facts`` at ``level``.

    A1 is the fuzzy section; A2 the concrete section; A3 adds counts; A4
    adds key variables.
    """
    if isinstance(level, str):
        level = Level.parse(level)
    if not facts:
        return empty_line(depth_limit) + "\n"
    lines: List[str] = []
    if level is Level.A1 or include_fuzzy_at_a2:
        lines += render_fuzzy(facts)
    if level.rank >= 2:
        lines += render_concrete(facts)
    if level.rank >= 3:
        lines += render_counts(facts)
    if level.rank >= 4:
        lines += render_key_variables(facts)
    return "\n".join(lines) + "\n"


def normalize(text: str) -> str:
    """Whitespace- and typography-insensitive form used for golden comparison."""
    text = text.replace("→", "->").replace("≠", "!=")
    text = text.replace("``", '"').replace("''", '"')
    return " ".join(text.split())
