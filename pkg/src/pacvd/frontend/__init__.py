from .calls import CallRecord, extract_calls, iter_calls
from .lexer import EncodingError, ParseError
from .nodes import *  # noqa: F401,F403
from .parser import parse_unit
from .printer import print_expr, print_function, print_unit

__all__ = [
    "CallRecord", "EncodingError", "ParseError", "extract_calls", "iter_calls",
    "parse_unit", "print_expr", "print_function", "print_unit",
]
