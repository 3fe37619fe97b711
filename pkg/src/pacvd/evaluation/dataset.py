"""Line-delimited JSON sample records."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

from ..frontend import ParseError, SourceUnit, parse_unit

logger = logging.getLogger(__name__)

LABELS = ("vulnerable", "safe")


class SchemaError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class CalleeRecord:
    name: str
    code: str
    depth: int


@dataclass
class SampleRecord:
    id: str
    target_name: str
    target_code: str
    label: str
    callees: List[CalleeRecord] = field(default_factory=list)
    cve: Optional[str] = None
    cwe: Optional[str] = None
    project: str = ""
    commit: str = ""
    degraded: bool = False

    @property
    def vulnerable(self) -> bool:
        return self.label == "vulnerable"

    def units(self) -> List[SourceUnit]:
        """Parsed target and callee code; unparseable pieces are skipped."""
        out: List[SourceUnit] = []
        seen = set()
        pieces = [(f"{self.id}:{self.target_name}", self.target_code)]
        pieces += [(f"{self.id}:{c.name}", c.code) for c in self.callees]
        for path, code in pieces:
            try:
                unit = parse_unit(path, code)
            except ParseError as exc:
                logger.info("%s: skipping unparseable code: %s", self.id, exc)
                continue
            fresh = tuple(fn for fn in unit.functions if fn.name not in seen)
            seen.update(fn.name for fn in fresh)
            out.append(SourceUnit(unit.path, unit.text, fresh))
        return out

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("degraded")
        return doc


_REQUIRED = ("id", "target_name", "target_code", "label")


def parse_record(doc, line: int = 0) -> SampleRecord:
    if not isinstance(doc, dict):
        raise SchemaError("record must be a JSON object", line)
    for key in _REQUIRED:
        if key not in doc:
            raise SchemaError(f"missing field {key!r}", line)
        if not isinstance(doc[key], str) or not doc[key]:
            raise SchemaError(f"field {key!r} must be a non-empty string", line)
    if doc["label"] not in LABELS:
        raise SchemaError(f"label must be one of {LABELS}, got {doc['label']!r}", line)
    callees: List[CalleeRecord] = []
    raw_callees = doc.get("callees", [])
    if not isinstance(raw_callees, list):
        raise SchemaError("callees must be a list", line)
    for c in raw_callees:
        if not isinstance(c, dict) or not {"name", "code", "depth"} <= set(c):
            raise SchemaError("each callee needs name, code and depth", line)
        if not isinstance(c["depth"], int) or isinstance(c["depth"], bool) or c["depth"] < 1:
            raise SchemaError(f"callee {c.get('name')!r}: depth must be an integer >= 1", line)
        callees.append(CalleeRecord(str(c["name"]), str(c["code"]), c["depth"]))
    extra = set(doc) - set(_REQUIRED) - {"callees", "cve", "cwe", "project", "commit"}
    if extra:
        raise SchemaError(f"unknown fields {sorted(extra)}", line)
    rec = SampleRecord(
        id=doc["id"], target_name=doc["target_name"], target_code=doc["target_code"],
        label=doc["label"], callees=callees, cve=doc.get("cve"), cwe=doc.get("cwe"),
        project=doc.get("project", ""), commit=doc.get("commit", ""),
    )
    rec.degraded = not _target_parses(rec)
    if rec.degraded:
        logger.warning("sample %s: target %s does not parse; flagged degraded", rec.id, rec.target_name)
    return rec


def _target_parses(rec: SampleRecord) -> bool:
    try:
        unit = parse_unit(rec.target_name, rec.target_code)
    except ParseError:
        return False
    return unit.function(rec.target_name) is not None


def load_dataset(path: str) -> List[SampleRecord]:
    records: List[SampleRecord] = []
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from None
            rec = parse_record(doc, lineno)
            if rec.id in ids:
                raise SchemaError(f"duplicate id {rec.id!r}", lineno)
            ids.add(rec.id)
            records.append(rec)
    return records


def dump_dataset(records: List[SampleRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def depth_buckets(sample: SampleRecord, max_depth: int) -> List[Tuple[int, List[CalleeRecord]]]:
    buckets = {}
    for c in sample.callees:
        if c.depth <= max_depth:
            buckets.setdefault(c.depth, []).append(c)
    return sorted(buckets.items())
