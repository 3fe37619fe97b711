"""Primitive-API catalog: resource APIs, categories and acquire/release pairs.

Document format, one directive per line::

    # comment
    version default-1
    extends default
    api kmalloc memory-alloc canonical=malloc cwe=CWE-401,CWE-415
    pair kmalloc kfree
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

logger = logging.getLogger(__name__)

CATEGORIES = (
    "memory-alloc", "memory-free", "file-open", "file-close", "dir-open", "dir-close",
    "lock", "unlock", "other-resource",
)

ACQUIRE_CATEGORIES = frozenset({"memory-alloc", "file-open", "dir-open", "lock"})
RELEASE_CATEGORIES = frozenset({"memory-free", "file-close", "dir-close", "unlock"})


class SchemaError(ValueError):
    def __init__(self, message: str, line: int = 0, entry: str = ""):
        self.line = line
        self.entry = entry
        prefix = f"line {line}: " if line else ""
        super().__init__(f"{prefix}{message}" + (f" ({entry!r})" if entry else ""))


class DuplicateEntry(SchemaError):
    pass


@dataclass(frozen=True)
class ApiEntry:
    name: str
    category: str
    canonical: Optional[str] = None
    cwes: Tuple[str, ...] = ()

    @property
    def family(self) -> str:
        """Name used in renders: the canonical family name when present."""
        return self.canonical or self.name

    @property
    def is_release(self) -> bool:
        return self.category in RELEASE_CATEGORIES

    @property
    def is_acquire(self) -> bool:
        return self.category in ACQUIRE_CATEGORIES


@dataclass(frozen=True)
class ApiCatalog:
    entries: Tuple[ApiEntry, ...] = ()
    pairs: Tuple[Tuple[str, str], ...] = ()
    version: str = ""
    _by_name: Dict[str, ApiEntry] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        names = {}
        for e in self.entries:
            if e.name in names:
                raise DuplicateEntry("duplicate api", entry=e.name)
            if e.category not in CATEGORIES:
                raise SchemaError(f"unknown category {e.category}", entry=e.name)
            names[e.name] = e
        for e in self.entries:
            if e.canonical is not None and e.canonical not in names:
                raise SchemaError(f"canonical {e.canonical} is not an entry", entry=e.name)
        for a, r in self.pairs:
            for n in (a, r):
                if n not in names:
                    raise SchemaError(f"pair references undeclared api {n}", entry=f"{a} {r}")
        if len(set(self.pairs)) != len(self.pairs):
            raise DuplicateEntry("duplicate pair")
        self._by_name.update(names)

    def get(self, name: str) -> Optional[ApiEntry]:
        return self._by_name.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.entries)

    def families(self) -> List[str]:
        """Family names in catalog order (first appearance)."""
        out: List[str] = []
        for e in self.entries:
            if e.family not in out:
                out.append(e.family)
        return out

    def family_partners(self, family: str) -> List[str]:
        """Families paired with ``family`` in either direction."""
        out: List[str] = []
        for a, r in self.pairs:
            fa, fr = self._by_name[a].family, self._by_name[r].family
            if fa == family and fr not in out:
                out.append(fr)
            if fr == family and fa not in out:
                out.append(fa)
        return out

    def lint(self) -> List[str]:
        released = {r for _, r in self.pairs}
        return [
            f"release api {e.name} has no acquire pair"
            for e in self.entries
            if e.is_release and e.name not in released
        ]


def match_call(catalog: ApiCatalog, callee: str) -> Optional[ApiEntry]:
    """Exact-name lookup; ``calloc`` reports as itself but carries canonical ``malloc``."""
    return catalog.get(callee)


_DEFAULT_ENTRIES = (
    ApiEntry("malloc", "memory-alloc"),
    ApiEntry("calloc", "memory-alloc", canonical="malloc"),
    ApiEntry("realloc", "memory-alloc", canonical="malloc"),
    ApiEntry("free", "memory-free"),
    ApiEntry("open", "file-open"),
    ApiEntry("fopen", "file-open"),
    ApiEntry("fdopen", "file-open"),
    ApiEntry("opendir", "dir-open"),
    ApiEntry("close", "file-close"),
    ApiEntry("fclose", "file-close"),
    ApiEntry("closedir", "dir-close"),
)

_DEFAULT_PAIRS = (
    ("malloc", "free"), ("calloc", "free"), ("realloc", "free"),
    ("open", "close"), ("fopen", "fclose"), ("fdopen", "fclose"),
    ("opendir", "closedir"),
)

DEFAULT_VERSION = "default-1"


def default_catalog() -> ApiCatalog:
    return ApiCatalog(_DEFAULT_ENTRIES, _DEFAULT_PAIRS, DEFAULT_VERSION)


def load_catalog(source: str) -> ApiCatalog:
    entries: List[ApiEntry] = []
    pairs: List[Tuple[str, str]] = []
    version = ""
    seen: Dict[str, int] = {}
    seen_pairs = set()
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        kind = words[0]
        if kind == "version":
            if len(words) != 2:
                raise SchemaError("version takes one value", lineno, line)
            version = words[1]
        elif kind == "extends":
            if words[1:] != ["default"]:
                raise SchemaError("only 'extends default' is supported", lineno, line)
            base = default_catalog()
            for e in base.entries:
                if e.name in seen:
                    raise DuplicateEntry("duplicate api", lineno, e.name)
                seen[e.name] = lineno
                entries.append(e)
            for p in base.pairs:
                seen_pairs.add(p)
                pairs.append(p)
            version = version or base.version
        elif kind == "api":
            if len(words) < 3:
                raise SchemaError("api needs a name and a category", lineno, line)
            name, category = words[1], words[2]
            if category not in CATEGORIES:
                raise SchemaError(f"unknown category {category}", lineno, name)
            canonical = None
            cwes: Tuple[str, ...] = ()
            for opt in words[3:]:
                key, sep, value = opt.partition("=")
                if not sep or not value:
                    raise SchemaError(f"malformed option {opt}", lineno, name)
                if key == "canonical":
                    canonical = value
                elif key == "cwe":
                    cwes = tuple(c for c in value.split(",") if c)
                else:
                    raise SchemaError(f"unknown option {key}", lineno, name)
            if name in seen:
                raise DuplicateEntry("duplicate api", lineno, name)
            seen[name] = lineno
            entries.append(ApiEntry(name, category, canonical, cwes))
        elif kind == "pair":
            if len(words) != 3:
                raise SchemaError("pair takes two names", lineno, line)
            p = (words[1], words[2])
            if p in seen_pairs:
                raise DuplicateEntry("duplicate pair", lineno, line)
            seen_pairs.add(p)
            pairs.append(p)
        else:
            raise SchemaError(f"unknown directive {kind}", lineno, line)
    names = {e.name for e in entries}
    for e in entries:
        if e.canonical is not None and e.canonical not in names:
            raise SchemaError(f"canonical {e.canonical} is not declared", seen[e.name], e.name)
    for a, r in pairs:
        for n in (a, r):
            if n not in names:
                raise SchemaError(f"pair references undeclared api {n}", entry=f"{a} {r}")
    catalog = ApiCatalog(tuple(entries), tuple(pairs), version)
    for warning in catalog.lint():
        logger.warning(warning)
    return catalog


def serialize_catalog(catalog: ApiCatalog) -> str:
    """Flat document that :func:`load_catalog` reads back to an equal catalog."""
    lines = []
    if catalog.version:
        lines.append(f"version {catalog.version}")
    for e in catalog.entries:
        parts = ["api", e.name, e.category]
        if e.canonical:
            parts.append(f"canonical={e.canonical}")
        if e.cwes:
            parts.append("cwe=" + ",".join(e.cwes))
        lines.append(" ".join(parts))
    for a, r in catalog.pairs:
        lines.append(f"pair {a} {r}")
    return "\n".join(lines) + ("\n" if lines else "")
