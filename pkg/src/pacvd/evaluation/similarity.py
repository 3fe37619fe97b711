"""Code similarity components used by similarity-based callee sampling."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence

from rapidfuzz.distance import Levenshtein

from ..frontend.lexer import ParseError, tokenize

K1 = 1.2
B = 0.75

_FALLBACK_TOKEN = re.compile(r"[A-Za-z_]\w*|\d+|\S")
_CALL = re.compile(r"\b([A-Za-z_]\w*)\s*\(")
_NOT_CALLS = {"if", "while", "for", "switch", "return", "sizeof"}


def tokens(code: str) -> List[str]:
    try:
        return [t.text for t in tokenize(code) if t.kind != "eof"]
    except ParseError:
        return _FALLBACK_TOKEN.findall(code)


def called_names(code: str) -> set:
    return {m for m in _CALL.findall(code) if m not in _NOT_CALLS}


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def levenshtein(a: Sequence, b: Sequence) -> int:
    return Levenshtein.distance(list(a), list(b))


def edit_similarity(a: Sequence, b: Sequence) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def bm25_scores(query: Sequence[str], corpus: Sequence[Sequence[str]], k1: float = K1, b: float = B) -> List[float]:
    """Okapi BM25 of ``query`` against every document (unique query terms)."""
    n = len(corpus)
    if n == 0:
        return []
    avgdl = sum(len(d) for d in corpus) / n or 1.0
    df = Counter()
    for d in corpus:
        df.update(set(d))
    terms = list(dict.fromkeys(query))
    scores = []
    for d in corpus:
        tf = Counter(d)
        s = 0.0
        for q in terms:
            f = tf.get(q, 0)
            if not f:
                continue
            idf = math.log(1 + (n - df[q] + 0.5) / (df[q] + 0.5))
            s += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * len(d) / avgdl))
        scores.append(s)
    return scores


def min_max(values: Sequence[float]) -> List[float]:
    if not values:
        return []
    lo, hi = min(values), max(values)
    if hi == lo:
        return [1.0 if hi > 0 else 0.0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


@dataclass(frozen=True)
class Similarity:
    token_jaccard: float
    api_jaccard: float
    edit: float
    bm25: float

    def combined(self, weights: Sequence[float] = (1, 1, 1, 1)) -> float:
        parts = (self.token_jaccard, self.api_jaccard, self.edit, self.bm25)
        total = sum(weights)
        return sum(w * p for w, p in zip(weights, parts)) / total if total else 0.0


def similarity_components(target: str, callees: Sequence[str]) -> List[Similarity]:
    """Components for each callee against ``target``; BM25 uses the callees as corpus."""
    t_tokens = tokens(target)
    t_calls = called_names(target)
    docs = [tokens(c) for c in callees]
    bm25 = min_max(bm25_scores(t_tokens, docs))
    return [
        Similarity(jaccard(t_tokens, d), jaccard(t_calls, called_names(c)), edit_similarity(t_tokens, d), s)
        for c, d, s in zip(callees, docs, bm25)
    ]


def similarity_score(target: str, callee: str, corpus: Optional[Sequence[str]] = None,
                     weights: Sequence[float] = (1, 1, 1, 1)) -> float:
    """Weighted mean (equal by default) of the four components, in [0, 1]."""
    corpus = list(corpus) if corpus else [callee]
    if callee not in corpus:
        corpus.append(callee)
    comps = similarity_components(target, corpus)
    return comps[corpus.index(callee)].combined(weights)
