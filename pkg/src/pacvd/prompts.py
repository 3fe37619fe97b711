"""Detection prompts for the six prompting strategies.

Templates are filled in a single pass, so code that happens to contain a
slot name such as ``[API]`` is never substituted twice.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple


class InsufficientExemplars(ValueError):
    pass


class UnresolvedPlaceholder(AssertionError):
    pass


class PromptStrategy(Enum):
    BASIC = "basic"
    ROLE_PLAYING = "role-playing"
    CHAIN_OF_THOUGHT = "cot"
    IN_CONTEXT = "in-context"
    FEW_SHOT_RANDOM = "few-shot-random"
    FEW_SHOT_CONTRASTIVE = "few-shot-contrastive"

    @property
    def two_turn(self) -> bool:
        return self in (PromptStrategy.CHAIN_OF_THOUGHT, PromptStrategy.IN_CONTEXT)

    @property
    def few_shot(self) -> bool:
        return self in (PromptStrategy.FEW_SHOT_RANDOM, PromptStrategy.FEW_SHOT_CONTRASTIVE)

    @classmethod
    def parse(cls, text: str) -> "PromptStrategy":
        aliases = {
            "basicprompt": "basic", "roleplaying": "role-playing", "chainofthought": "cot",
            "chain-of-thought": "cot", "incontext": "in-context", "fewshotrandom": "few-shot-random",
            "fewshotcontrastive": "few-shot-contrastive",
        }
        key = text.strip().lower()
        key = aliases.get(key.replace("_", "").replace(" ", ""), key)
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown strategy {text!r} (expected one of {names})") from None


SYSTEM = "system"
USER = "user"
ASSISTANT_PLACEHOLDER = "assistant-placeholder"

ANALYSIS_SLOT = "[Code Analysis]"
TRUNCATION_MARKER = "\n[... truncated]"

# ------------------------------------------------------------------ templates

ROLE_SYSTEM = (
    "You are an expert vulnerability detection system. "
    "Provide precise and direct answers with explanations only when necessary."
)

_DETECT_TAIL = (
    "Provide a detailed response on the vulnerability status of the code. "
    'If the code is vulnerable, start your answer with "yes" and provide a brief explanation. '
    'If not, start with "no" and explain why.'
)

BASIC = "Analyze the following code snippet and associated API information[CODE], [API]. " + _DETECT_TAIL
BASIC_NO_API = "Analyze the following code snippet[CODE]. " + _DETECT_TAIL

COT_1 = (
    "[CODE], [API] Based on the above code and API information, please provide a detailed "
    "summary of the code's functionality, analyze the code structure, and locate all positions "
    "where pointers are constructed and dereferenced."
)
COT_1_NO_API = (
    "[CODE] Based on the above code, please provide a detailed summary of the code's "
    "functionality, analyze the code structure, and locate all positions where pointers are "
    "constructed and dereferenced."
)
COT_2 = (
    "Based on your previous analysis: [Code Analysis], determine whether the code contains "
    "significant vulnerabilities. Answer 'yes' or 'no' and provide reasons if vulnerabilities "
    "are identified."
)

IC_1 = (
    "As a code reviewer, evaluate this code snippet for clarity, functionality, and "
    "maintainability. Consider also the associated API information to ensure that the control "
    "flow aligns with the intended use and structure of the code. [CODE], [API]."
)
IC_1_NO_API = (
    "As a code reviewer, evaluate this code snippet for clarity, functionality, and "
    "maintainability. [CODE]."
)
IC_2 = (
    "Based on your initial observations and the API information, make a final assessment of "
    "whether the code meets the standards for clarity, functionality, and maintainability. "
    "Respond with 'yes' if improvements are needed, or 'no' if it meets the criteria."
)
IC_2_NO_API = (
    "Based on your initial observations, make a final assessment of whether the code meets the "
    "standards for clarity, functionality, and maintainability. Respond with 'yes' if "
    "improvements are needed, or 'no' if it meets the criteria."
)

FS_EXAMPLE = "Code Example [N]: [CODE] API Information: [API] Output: [LABEL]"
FS_EXAMPLE_NO_API = "Code Example [N]: [CODE] Output: [LABEL]"
FS_QUERY = (
    "Refer to the examples above, then analyze the following code snippet and associated API "
    "information[CODE], [API]. " + _DETECT_TAIL
)
FS_QUERY_NO_API = "Refer to the examples above, then analyze the following code snippet[CODE]. " + _DETECT_TAIL

FC_INTRO = (
    "Examine the 'Before Fix' and 'After Fix' code snippets to understand the vulnerability "
    "remediation. Determine if the 'Before Fix' version is vulnerable, and if so, explain how "
    "the 'After Fix' version addresses the issue."
)
FC_PAIR = "Before Fix: [CODE1], After Fix: [CODE2]"
FC_QUERY = (
    "Refer to these examples. Now, analyze the following code snippet and API Information"
    "[CODE], [API]. Respond with 'yes' if it is vulnerable, otherwise answer 'no'."
)
FC_QUERY_NO_API = (
    "Refer to these examples. Now, analyze the following code snippet[CODE]. "
    "Respond with 'yes' if it is vulnerable, otherwise answer 'no'."
)

# The phrase each strategy must carry verbatim.
ANCHORS = {
    PromptStrategy.BASIC: 'If the code is vulnerable, start your answer with "yes"',
    PromptStrategy.ROLE_PLAYING: "You are an expert vulnerability detection system",
    PromptStrategy.CHAIN_OF_THOUGHT: "locate all positions where pointers are constructed and dereferenced",
    PromptStrategy.IN_CONTEXT: "evaluate this code snippet for clarity, functionality, and maintainability",
    PromptStrategy.FEW_SHOT_RANDOM: "Refer to the examples above",
    PromptStrategy.FEW_SHOT_CONTRASTIVE: "Examine the 'Before Fix' and 'After Fix' code snippets",
}

_SLOT = re.compile(r"\[(?:CODE1|CODE2|CODE|API|N|LABEL)\]")


def code_block(code: str) -> str:
    return f"\nCode:\n```c\n{code.rstrip()}\n```\n"


def api_block(api_text: str) -> str:
    return f"\nAPI Information:\n{api_text.rstrip()}\n"


def fill(template: str, values: Mapping[str, str]) -> str:
    """Substitute every slot in one pass; a slot without a value is an error."""

    def sub(m: "re.Match[str]") -> str:
        key = m.group(0)
        if key not in values:
            raise UnresolvedPlaceholder(f"no value for {key}")
        return values[key]

    return _SLOT.sub(sub, template)


# ------------------------------------------------------------------ exemplars


@dataclass(frozen=True)
class Exemplar:
    id: str
    code: str
    api_text: str = ""
    label: str = "no"  # yes | no
    before: Optional[str] = None
    after: Optional[str] = None
    source_ids: Tuple[str, ...] = ()  # dataset samples this exemplar was built from

    @property
    def paired(self) -> bool:
        return self.before is not None and self.after is not None

    def touches(self, sample_id: str) -> bool:
        return sample_id == self.id or sample_id in self.source_ids


@dataclass(frozen=True)
class ExemplarStore:
    records: Tuple[Exemplar, ...] = ()

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("exemplar ids must be unique")

    def get(self, exemplar_id: str) -> Exemplar:
        for r in self.records:
            if r.id == exemplar_id:
                return r
        raise KeyError(exemplar_id)

    def __len__(self) -> int:
        return len(self.records)


def load_exemplars(path: str) -> ExemplarStore:
    """Line-delimited JSON, one object per exemplar with the ``Exemplar`` field names."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                doc["source_ids"] = tuple(doc.get("source_ids", ()))
                records.append(Exemplar(**doc))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad exemplar record: {exc}") from None
    return ExemplarStore(tuple(records))


def select_exemplars(store: ExemplarStore, strategy: PromptStrategy, k: int = 2,
                     seed: Optional[int] = None, exclude: Iterable[str] = ()) -> List[str]:
    """Seeded uniform choice without replacement, returned in id order.

    Contrastive selection only draws records that carry before/after code.
    Records built from any id in ``exclude`` are never eligible.
    """
    excluded = set(exclude)
    eligible = sorted(
        (r for r in store.records if not any(r.touches(x) for x in excluded)),
        key=lambda r: r.id,
    )
    if strategy is PromptStrategy.FEW_SHOT_CONTRASTIVE:
        eligible = [r for r in eligible if r.paired]
    if k < 1 or len(eligible) < k:
        raise InsufficientExemplars(
            f"{strategy.value} needs {k} exemplars, {len(eligible)} eligible"
        )
    rng = random.Random(0 if seed is None else seed)
    chosen = rng.sample([r.id for r in eligible], k)
    return sorted(chosen)


# --------------------------------------------------------------------- bundle


@dataclass(frozen=True)
class Turn:
    role: str
    text: str


@dataclass(frozen=True)
class PromptBundle:
    strategy: PromptStrategy
    turns: Tuple[Turn, ...]
    placeholders_resolved: bool
    exemplars: Tuple[str, ...] = ()
    seed: Optional[int] = None
    # slots still to be filled at dispatch time, e.g. "[Code Analysis]"
    pending: Tuple[str, ...] = field(default=())

    @property
    def prompt_hash(self) -> str:
        doc = json.dumps(self.to_document(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(doc.encode("utf-8")).hexdigest()[:16]

    @property
    def text(self) -> str:
        return "\n\n".join(t.text for t in self.turns)

    def to_document(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "seed": self.seed,
            "exemplars": list(self.exemplars),
            "messages": [{"role": t.role, "content": t.text} for t in self.turns],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "PromptBundle":
        turns = tuple(Turn(m["role"], m["content"]) for m in doc["messages"])
        strategy = PromptStrategy(doc["strategy"])
        pending = (ANALYSIS_SLOT,) if strategy is PromptStrategy.CHAIN_OF_THOUGHT else ()
        return cls(strategy, turns, True, tuple(doc.get("exemplars", ())), doc.get("seed"), pending)


def resolve_analysis(text: str, analysis: str, limit: Optional[int] = None) -> str:
    """Fill ``[Code Analysis]`` with the first reply, tail-truncated past ``limit`` chars."""
    if limit is not None and len(analysis) > limit:
        keep = max(0, limit - len(TRUNCATION_MARKER))
        analysis = analysis[:keep] + TRUNCATION_MARKER
    head, sep, tail = text.partition(ANALYSIS_SLOT)
    if not sep:
        raise UnresolvedPlaceholder(f"{ANALYSIS_SLOT} not present")
    return head + analysis + tail


def _code_api(code: str, api_text: str) -> Dict[str, str]:
    return {"[CODE]": code_block(code), "[API]": api_block(api_text) if api_text else ""}


def build_prompt(strategy: PromptStrategy, code: str, api_text: str = "",
                 store: Optional[ExemplarStore] = None, seed: Optional[int] = None,
                 k: int = 2, exclude: Iterable[str] = ()) -> PromptBundle:
    """Assemble the turns for ``strategy``.

    An empty ``api_text`` selects the no-API templates, which drop every
    API clause rather than leaving an empty section.
    """
    if isinstance(strategy, str):
        strategy = PromptStrategy.parse(strategy)
    with_api = bool(api_text.strip())
    values = _code_api(code, api_text)
    turns: List[Turn] = []
    exemplar_ids: Tuple[str, ...] = ()
    pending: Tuple[str, ...] = ()

    if strategy is PromptStrategy.BASIC:
        turns.append(Turn(USER, fill(BASIC if with_api else BASIC_NO_API, values)))
    elif strategy is PromptStrategy.ROLE_PLAYING:
        turns.append(Turn(SYSTEM, ROLE_SYSTEM))
        turns.append(Turn(USER, fill(BASIC if with_api else BASIC_NO_API, values)))
    elif strategy is PromptStrategy.CHAIN_OF_THOUGHT:
        turns.append(Turn(USER, fill(COT_1 if with_api else COT_1_NO_API, values)))
        turns.append(Turn(ASSISTANT_PLACEHOLDER, ""))
        turns.append(Turn(USER, COT_2))
        pending = (ANALYSIS_SLOT,)
    elif strategy is PromptStrategy.IN_CONTEXT:
        turns.append(Turn(USER, fill(IC_1 if with_api else IC_1_NO_API, values)))
        turns.append(Turn(ASSISTANT_PLACEHOLDER, ""))
        turns.append(Turn(USER, IC_2 if with_api else IC_2_NO_API))
    else:
        if store is None:
            raise InsufficientExemplars(f"{strategy.value} needs an exemplar store")
        exemplar_ids = tuple(select_exemplars(store, strategy, k, seed, exclude))
        for x in exclude:
            assert not any(store.get(i).touches(x) for i in exemplar_ids), "exemplar leakage"
        parts: List[str] = []
        if strategy is PromptStrategy.FEW_SHOT_RANDOM:
            for n, eid in enumerate(exemplar_ids, 1):
                ex = store.get(eid)
                ex_values = {"[N]": str(n), "[LABEL]": ex.label, **_code_api(ex.code, ex.api_text)}
                use_api = with_api and bool(ex.api_text.strip())
                parts.append(fill(FS_EXAMPLE if use_api else FS_EXAMPLE_NO_API, ex_values))
            body = "; ".join(parts) + ". " + fill(FS_QUERY if with_api else FS_QUERY_NO_API, values)
        else:
            for eid in exemplar_ids:
                ex = store.get(eid)
                parts.append(fill(FC_PAIR, {"[CODE1]": code_block(ex.before), "[CODE2]": code_block(ex.after)}))
            body = " ".join([FC_INTRO] + parts + [fill(FC_QUERY if with_api else FC_QUERY_NO_API, values)])
        turns.append(Turn(USER, body))

    return PromptBundle(
        strategy=strategy,
        turns=tuple(turns),
        placeholders_resolved=True,
        exemplars=exemplar_ids,
        seed=seed if strategy.few_shot else None,
        pending=pending,
    )
