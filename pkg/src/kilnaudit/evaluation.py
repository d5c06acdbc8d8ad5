"""Detection-set evaluation: greedy matching, precision/recall, per-class
average precision, inverse-count-weighted mAP and stratified splitting."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import DomainError
from .obb import KilnClass, boxes_may_overlap, obb_iou

MATCH_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class MatchedPair:
    det_id: str
    truth_id: str
    iou: float


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class MatchResult:
    per_class: dict = field(default_factory=dict)  # KilnClass -> ClassCounts
    pairs: list = field(default_factory=list)
    # per class, (confidence, det_id, matched) ranked by descending confidence
    ranked: dict = field(default_factory=dict)
    truth_counts: dict = field(default_factory=dict)

    @property
    def tp(self) -> int:
        return sum(c.tp for c in self.per_class.values())

    @property
    def fp(self) -> int:
        return sum(c.fp for c in self.per_class.values())

    @property
    def fn(self) -> int:
        return sum(c.fn for c in self.per_class.values())


def match(dets, truths, iou_thresh: float = MATCH_IOU_THRESHOLD) -> MatchResult:
    """Greedy confidence-ordered matching. Each detection takes the
    highest-IoU unmatched truth of its own class at IoU >= iou_thresh;
    leftovers are false positives, unmatched truths false negatives."""
    result = MatchResult()
    for cls in KilnClass:
        result.per_class[cls] = ClassCounts()
        result.ranked[cls] = []
        result.truth_counts[cls] = 0
    truths = list(truths)
    for t in truths:
        result.truth_counts[t.kiln_class] += 1
    taken = [False] * len(truths)
    for d in sorted(dets, key=lambda d: (-d.confidence, d.id)):
        best_iou = 0.0
        best_j = -1
        for j, t in enumerate(truths):
            if taken[j] or t.kiln_class != d.kiln_class:
                continue
            if iou_thresh > 0 and not boxes_may_overlap(d.box, t.box):
                continue
            iou = obb_iou(d.box, t.box)
            if iou >= iou_thresh and (
                iou > best_iou or (iou == best_iou and best_j >= 0 and t.id < truths[best_j].id)
            ):
                best_iou = iou
                best_j = j
        counts = result.per_class[d.kiln_class]
        if best_j >= 0:
            taken[best_j] = True
            counts.tp += 1
            result.pairs.append(MatchedPair(d.id, truths[best_j].id, best_iou))
            result.ranked[d.kiln_class].append((d.confidence, d.id, True))
        else:
            counts.fp += 1
            result.ranked[d.kiln_class].append((d.confidence, d.id, False))
    for j, t in enumerate(truths):
        if not taken[j]:
            result.per_class[t.kiln_class].fn += 1
    return result


def precision_recall(m: MatchResult) -> tuple[float | None, float | None]:
    """Overall precision and recall; None where the denominator is zero."""
    tp, fp, fn = m.tp, m.fp, m.fn
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    return precision, recall


def precision_recall_from_counts(tp: int, fp: int, fn: int):
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    return precision, recall


def average_precision(match_flags, truth_count: int) -> float | None:
    """Area under the all-points-interpolated precision/recall curve.
    match_flags are booleans ranked by descending confidence; None when
    there is no truth to recall."""
    if truth_count <= 0:
        return None
    flags = list(match_flags)
    precisions = []
    tp = 0
    for i, flag in enumerate(flags, start=1):
        tp += bool(flag)
        precisions.append(tp / i)
    # precision envelope: max precision at >= this recall
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    tp = 0
    prev_recall = 0.0
    for flag, p_env in zip(flags, precisions):
        if flag:
            tp += 1
            recall = tp / truth_count
            ap += (recall - prev_recall) * p_env
            prev_recall = recall
    return ap


def weighted_map(per_class_ap: dict, per_class_counts: dict) -> float:
    """Mean of class APs weighted inversely to class truth counts:
    w_c = (1/n_c) / sum_k 1/n_k."""
    included = [
        (cls, ap)
        for cls, ap in per_class_ap.items()
        if per_class_counts.get(cls, 0) > 0 and ap is not None
    ]
    if not included:
        raise DomainError("weighted mAP needs at least one class with truths")
    inv = {cls: 1.0 / per_class_counts[cls] for cls, _ in included}
    total = sum(inv.values())
    return sum(ap * inv[cls] / total for cls, ap in included)


@dataclass
class EvalReport:
    per_class_ap: dict
    weighted_map: float | None
    match: MatchResult
    precision: float | None
    recall: float | None

    def to_dict(self) -> dict:
        classes = []
        for cls in KilnClass:
            counts = self.match.per_class[cls]
            p, r = precision_recall_from_counts(counts.tp, counts.fp, counts.fn)
            classes.append(
                {
                    "class": cls.value,
                    "ap": self.per_class_ap.get(cls),
                    "tp": counts.tp,
                    "fp": counts.fp,
                    "fn": counts.fn,
                    "precision": p,
                    "recall": r,
                    "truths": self.match.truth_counts[cls],
                }
            )
        return {
            "classes": classes,
            "tp": self.match.tp,
            "fp": self.match.fp,
            "fn": self.match.fn,
            "precision": self.precision,
            "recall": self.recall,
            "weighted_map": self.weighted_map,
        }

    def to_table(self) -> str:
        rows = [f"{'class':<10} {'AP':>7} {'TP':>6} {'FP':>6} {'FN':>6} {'P':>6} {'R':>6}"]
        d = self.to_dict()

        def fmt(v, spec):
            return "-" if v is None else format(v, spec)

        for c in d["classes"]:
            rows.append(
                f"{c['class']:<10} {fmt(c['ap'], '7.4f')} {c['tp']:>6} {c['fp']:>6} "
                f"{c['fn']:>6} {fmt(c['precision'], '6.2f')} {fmt(c['recall'], '6.2f')}"
            )
        rows.append(
            f"{'overall':<10} {'':>7} {d['tp']:>6} {d['fp']:>6} {d['fn']:>6} "
            f"{fmt(d['precision'], '6.2f')} {fmt(d['recall'], '6.2f')}"
        )
        rows.append(f"weighted mAP: {fmt(d['weighted_map'], '.4f')}")
        return "\n".join(rows)


def evaluate(dets, truths, iou_thresh: float = MATCH_IOU_THRESHOLD) -> EvalReport:
    m = match(dets, truths, iou_thresh)
    per_class_ap = {}
    for cls in KilnClass:
        flags = [f for _, _, f in sorted(m.ranked[cls], key=lambda r: (-r[0], r[1]))]
        per_class_ap[cls] = average_precision(flags, m.truth_counts[cls])
    try:
        wmap = weighted_map(per_class_ap, m.truth_counts)
    except DomainError:
        wmap = None
    precision, recall = precision_recall(m)
    return EvalReport(per_class_ap, wmap, m, precision, recall)


def stratified_split(items, label_of, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Split items into len(ratios) subsets with per-class proportional
    allocation (largest-remainder rounding, remainder ties going to the
    later split). Deterministic for a given seed."""
    if any(r < 0 for r in ratios):
        raise DomainError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DomainError(f"ratios must sum to 1, got {sum(ratios)}")
    rng = random.Random(seed)
    by_class: dict = {}
    for item in items:
        by_class.setdefault(label_of(item), []).append(item)
    splits = [[] for _ in ratios]
    for label in sorted(by_class, key=str):
        group = by_class[label]
        rng.shuffle(group)
        quotas = [len(group) * r for r in ratios]
        counts = [int(q) for q in quotas]
        leftover = len(group) - sum(counts)
        order = sorted(
            range(len(ratios)), key=lambda i: (quotas[i] - counts[i], i), reverse=True
        )
        for i in order[:leftover]:
            counts[i] += 1
        start = 0
        for i, n in enumerate(counts):
            splits[i].extend(group[start : start + n])
            start += n
    return tuple(splits)
