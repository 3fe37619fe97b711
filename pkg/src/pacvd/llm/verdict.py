from __future__ import annotations

import re

YES, NO, UNPARSEABLE = "yes", "no", "unparseable"

_WORD = re.compile(r"[a-z]+")
_SENTENCE_END = re.compile(r"[.!?\n]")


def first_sentence(text: str) -> str:
    return _SENTENCE_END.split(text.strip(), 1)[0]


def parse_verdict(text: str) -> str:
    """Map a model reply to yes / no / unparseable.

    The first alphabetic token decides when it is yes/no and the opposite
    answer does not also appear in the first sentence.  Otherwise exactly
    one of the two must appear as a word in the first sentence.
    """
    lowered = text.lower()
    sentence = set(_WORD.findall(first_sentence(lowered)))
    first = _WORD.search(lowered)
    if first is not None and first.group(0) in (YES, NO):
        word = first.group(0)
        other = NO if word == YES else YES
        if other not in sentence:
            return word
    has_yes, has_no = YES in sentence, NO in sentence
    if has_yes != has_no:
        return YES if has_yes else NO
    return UNPARSEABLE
