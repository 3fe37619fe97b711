"""Deterministic offline provider: rules, fingerprint replay, and recording."""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional


class UnscriptedPrompt(LookupError):
    def __init__(self, fingerprint: str):
        self.fingerprint = fingerprint
        super().__init__(f"no scripted reply for prompt {fingerprint}")


def fingerprint(messages: List[Dict[str, str]]) -> str:
    doc = json.dumps([[m["role"], m["content"]] for m in messages], ensure_ascii=False)
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Rule:
    pattern: str
    reply: str
    regex: bool = False

    def matches(self, text: str) -> bool:
        if self.regex:
            return re.search(self.pattern, text) is not None
        return self.pattern in text


class MockProvider:
    """Replies from recorded fingerprints first, then the first matching rule,
    then ``default``; in strict mode an unmatched prompt raises."""

    def __init__(self, rules: Optional[List[Rule]] = None, fingerprints: Optional[Dict[str, str]] = None,
                 default: Optional[str] = None, strict: bool = False, name: str = "mock"):
        self.rules = list(rules or [])
        self.fingerprints = dict(fingerprints or {})
        self.default = default
        self.strict = strict
        self.id = name
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_script(cls, doc: dict, name: str = "mock") -> "MockProvider":
        rules = []
        for r in doc.get("rules", []):
            if "contains" in r:
                rules.append(Rule(r["contains"], r["reply"]))
            elif "regex" in r:
                rules.append(Rule(r["regex"], r["reply"], regex=True))
            else:
                raise ValueError(f"rule needs 'contains' or 'regex': {r}")
        return cls(rules, doc.get("fingerprints"), doc.get("default"), bool(doc.get("strict", False)),
                   doc.get("name", name))

    @classmethod
    def from_file(cls, path: str) -> "MockProvider":
        with open(path, encoding="utf-8") as fh:
            return cls.from_script(json.load(fh), name=f"mock:{path.rsplit('/', 1)[-1]}")

    def chat(self, messages: List[Dict[str, str]]) -> str:
        with self._lock:
            self.calls += 1
        fp = fingerprint(messages)
        if fp in self.fingerprints:
            return self.fingerprints[fp]
        text = "\n".join(m["content"] for m in messages)
        for rule in self.rules:
            if rule.matches(text):
                return rule.reply
        if self.strict or self.default is None:
            raise UnscriptedPrompt(fp)
        return self.default


class RecordingProvider:
    """Wraps a provider and remembers every exchange for later replay."""

    def __init__(self, inner):
        self.inner = inner
        self.id = inner.id
        self.recorded: Dict[str, str] = {}
        self._lock = threading.Lock()

    def chat(self, messages: List[Dict[str, str]]) -> str:
        reply = self.inner.chat(messages)
        with self._lock:
            self.recorded[fingerprint(messages)] = reply
        return reply

    def script(self) -> dict:
        return {"name": self.id, "strict": True, "fingerprints": dict(sorted(self.recorded.items()))}
