from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    unparseable: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn,
                               self.tn + other.tn, self.unparseable + other.unparseable)


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float
    per_cwe: Dict[str, "MetricsReport"] = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {k: v for k, v in asdict(self).items() if k != "per_cwe"}
        if self.per_cwe:
            doc["per_cwe"] = {k: v.to_dict() for k, v in sorted(self.per_cwe.items())}
        return doc


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Standard formulas; undefined ratios are 0 (MCC too, when any marginal is 0)."""
    if cm.total == 0:
        raise EmptyInput("no predictions to score")
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    accuracy = (tp + tn) / cm.total
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    marginals = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(marginals) if marginals else 0.0
    return MetricsReport(accuracy, precision, recall, f1, mcc)


def _truth(label) -> bool:
    if isinstance(label, bool):
        return label
    return str(label).lower() in ("vulnerable", "yes", "1", "true")


def _predicted(verdict) -> Tuple[bool, bool]:
    """(predicted vulnerable, was unparseable)."""
    label = getattr(verdict, "label", verdict)
    label = str(label).lower()
    if label == "yes":
        return True, False
    if label == "no":
        return False, False
    return False, True


def confusion(predictions: Iterable[Tuple[object, object]]) -> ConfusionMatrix:
    tp = fp = fn = tn = unp = 0
    for truth, verdict in predictions:
        pred, unparseable = _predicted(verdict)
        unp += unparseable
        if _truth(truth):
            tp += pred
            fn += not pred
        else:
            fp += pred
            tn += not pred
    return ConfusionMatrix(tp, fp, fn, tn, unp)


def score(predictions: Sequence[Tuple[object, object]],
          cwes: Optional[Sequence[Optional[str]]] = None) -> Tuple[ConfusionMatrix, MetricsReport]:
    """Score ``(truth label, verdict)`` pairs.  Unparseable verdicts count as
    "no" and are tallied separately."""
    predictions = list(predictions)
    if not predictions:
        raise EmptyInput("no predictions to score")
    cm = confusion(predictions)
    report = metrics(cm)
    if cwes is not None:
        groups: Dict[str, list] = {}
        for pair, cwe in zip(predictions, cwes):
            groups.setdefault(cwe or "unlabeled", []).append(pair)
        report.per_cwe = {k: metrics(confusion(v)) for k, v in groups.items()}
    return cm, report
