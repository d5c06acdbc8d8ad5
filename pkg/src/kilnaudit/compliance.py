"""Distance-based siting-rule auditor: bulk-loaded rectangle tree over
feature geometries, per-kiln violation detection against per-state
thresholds, and the aggregate violation matrix."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from . import geo
from .errors import ConfigError
from .ingest import (
    CRITERIA_ORDER,
    CRITERION_CATEGORY,
    ComplianceRuleSet,
    Criterion,
    FeatureCategory,
    KilnRecord,
)

_LEAF_SIZE = 16


class _StrTree:
    """Static sort-tile-recursive packed rectangle tree. Build once, query
    with axis-aligned rectangles; returns payload indices."""

    def __init__(self, bboxes):
        self._bboxes = list(bboxes)
        n = len(self._bboxes)
        if n == 0:
            self._root = None
            return
        entries = list(range(n))
        entries.sort(key=lambda i: (self._bboxes[i][0] + self._bboxes[i][2]))
        slice_count = max(1, math.ceil(math.sqrt(math.ceil(n / _LEAF_SIZE))))
        slice_size = math.ceil(n / slice_count)
        leaves = []
        for s in range(0, n, slice_size):
            strip = entries[s : s + slice_size]
            strip.sort(key=lambda i: (self._bboxes[i][1] + self._bboxes[i][3]))
            for t in range(0, len(strip), _LEAF_SIZE):
                chunk = strip[t : t + _LEAF_SIZE]
                leaves.append((self._merge(chunk), chunk, True))
        nodes = leaves
        while len(nodes) > 1:
            parents = []
            for t in range(0, len(nodes), _LEAF_SIZE):
                chunk = nodes[t : t + _LEAF_SIZE]
                bbox = self._merge_boxes([c[0] for c in chunk])
                parents.append((bbox, chunk, False))
            nodes = parents
        self._root = nodes[0]

    def _merge(self, idxs):
        return self._merge_boxes([self._bboxes[i] for i in idxs])

    @staticmethod
    def _merge_boxes(boxes):
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )

    def query(self, minx, miny, maxx, maxy) -> list[int]:
        if self._root is None:
            return []
        out: list[int] = []
        stack = [self._root]
        while stack:
            bbox, children, is_leaf = stack.pop()
            if bbox[0] > maxx or bbox[2] < minx or bbox[1] > maxy or bbox[3] < miny:
                continue
            if is_leaf:
                for i in children:
                    b = self._bboxes[i]
                    if not (b[0] > maxx or b[2] < minx or b[1] > maxy or b[3] < miny):
                        out.append(i)
            else:
                stack.extend(children)
        return out


def _mercator_bbox(g: geo.Geometry):
    lon0, lat0, lon1, lat1 = geo.geometry_bbox(g)
    a = geo.wgs84_to_mercator(geo.GeoPoint(lon0, lat0))
    b = geo.wgs84_to_mercator(geo.GeoPoint(lon1, lat1))
    return (a.x, a.y, b.x, b.y)


def _query_window(p: geo.GeoPoint, radius_m: float):
    """Mercator rectangle guaranteed to contain every point within radius_m
    ground meters of p. Mercator stretches ground distance by 1/cos(lat), so
    pad with the worst factor over the reachable latitude band."""
    dlat = math.degrees(radius_m / geo.EARTH_RADIUS)
    lat_far = min(abs(p.lat) + dlat, geo.MAX_MERCATOR_LAT)
    pad = radius_m / math.cos(math.radians(lat_far)) * 1.001 + 1.0
    m = geo.wgs84_to_mercator(p)
    return (m.x - pad, m.y - pad, m.x + pad, m.y + pad)


class SpatialFeatureIndex:
    """Immutable radius-query index over feature layers. candidates() may
    over-select (bbox prefilter); within()/nearest_within() refine with the
    exact distance function."""

    def __init__(self, layers):
        self.entries: list[tuple[FeatureCategory, object]] = []
        self._by_category: dict[FeatureCategory, list[int]] = {}
        bboxes = []
        for layer in layers:
            for f in layer.features:
                idx = len(self.entries)
                self.entries.append((layer.category, f))
                self._by_category.setdefault(layer.category, []).append(idx)
                bboxes.append(_mercator_bbox(f.geometry))
        self._tree = _StrTree(bboxes)

    def candidates(self, p: geo.GeoPoint, radius_m: float, category=None):
        hits = self._tree.query(*_query_window(p, radius_m))
        for i in sorted(hits):
            cat, f = self.entries[i]
            if category is None or cat == category:
                yield cat, f

    def nearest_within(self, p: geo.GeoPoint, radius_m: float, category):
        """(distance_m, feature) of the closest feature of the category with
        distance < radius_m, or None. Distance ties break on feature id."""
        best = None
        for _, f in self.candidates(p, radius_m, category):
            d = geo.point_to_geometry_distance(p, f.geometry)
            if d < radius_m and (best is None or (d, f.id) < (best[0], best[1].id)):
                best = (d, f)
        return best


def build_index(layers) -> SpatialFeatureIndex:
    return SpatialFeatureIndex(layers)


class KilnCentroidIndex:
    """Point index over non-discarded kiln centroids for inter-kiln checks."""

    def __init__(self, kilns):
        self.kilns = [k for k in kilns if not k.discarded]
        bboxes = []
        for k in self.kilns:
            c = k.centroid
            m = geo.wgs84_to_mercator(c)
            bboxes.append((m.x, m.y, m.x, m.y))
        self._tree = _StrTree(bboxes)

    def nearest_other(self, kiln: KilnRecord, radius_m: float):
        """(distance_m, other) of the closest other kiln within radius_m,
        else None."""
        p = kiln.centroid
        best = None
        for i in sorted(self._tree.query(*_query_window(p, radius_m))):
            other = self.kilns[i]
            if other.id == kiln.id:
                continue
            d = geo.haversine_distance(p, other.centroid)
            if d < radius_m and (best is None or (d, other.id) < (best[0], best[1].id)):
                best = (d, other)
        return best


@dataclass(frozen=True)
class Violation:
    kiln_id: str
    criterion: Criterion
    distance_m: float
    threshold_m: float
    feature_id: str


def audit_kiln(
    kiln: KilnRecord,
    index: SpatialFeatureIndex,
    rules: ComplianceRuleSet,
    kiln_index: KilnCentroidIndex | None = None,
) -> list[Violation]:
    """All rule violations for one kiln, judged by its own state's
    thresholds. Distances run from the kiln centroid; a violation needs the
    nearest feature strictly closer than the threshold."""
    if not rules.has_state(kiln.state):
        raise ConfigError(
            f"kiln {kiln.id}: state {kiln.state!r} not present in the rule table"
        )
    violations: list[Violation] = []
    for criterion in CRITERIA_ORDER:
        threshold = rules.threshold(kiln.state, criterion)
        if threshold is None:
            continue
        if criterion is Criterion.INTER_KILN:
            if kiln_index is None:
                continue
            hit = kiln_index.nearest_other(kiln, threshold)
            if hit is not None:
                violations.append(
                    Violation(kiln.id, criterion, hit[0], threshold, hit[1].id)
                )
            continue
        hit = index.nearest_within(kiln.centroid, threshold, CRITERION_CATEGORY[criterion])
        if hit is not None:
            violations.append(
                Violation(kiln.id, criterion, hit[0], threshold, hit[1].id)
            )
    return violations


def audit_all(
    kilns, layers, rules: ComplianceRuleSet
) -> dict[str, list[Violation]]:
    """Audit every non-discarded kiln; returns kiln id -> violations."""
    index = build_index(layers)
    active = [k for k in kilns if not k.discarded]
    kiln_index = KilnCentroidIndex(active)
    return {k.id: audit_kiln(k, index, rules, kiln_index) for k in active}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class ComplianceSummary:
    states: list[str]
    counts: dict  # criterion -> state -> int | None
    non_compliant: dict
    kiln_count: dict
    percentage: dict

    def to_dict(self) -> dict:
        crits = [c.value for c in CRITERIA_ORDER]
        return {
            "states": self.states,
            "criteria": crits,
            "violations": {
                c.value: {s: self.counts[c][s] for s in self.states + ["Total"]}
                for c in CRITERIA_ORDER
            },
            "non_compliant": dict(self.non_compliant),
            "kiln_count": dict(self.kiln_count),
            "percentage": dict(self.percentage),
        }


def aggregate(kilns, violations_by_kiln, rules: ComplianceRuleSet) -> ComplianceSummary:
    """Fold per-kiln violations into the per-state matrix: per-criterion
    violator counts (a kiln counts once per criterion), kilns violating at
    least one rule, totals and rounded percentages."""
    active = [k for k in kilns if not k.discarded]
    states = sorted({k.state for k in active})
    by_id = {k.id: k for k in active}
    counts = {
        c: {s: (0 if rules.threshold(s, c) is not None else None) for s in states}
        for c in CRITERIA_ORDER
    }
    non_compliant = {s: 0 for s in states}
    kiln_count = {s: 0 for s in states}
    for k in active:
        kiln_count[k.state] += 1
    for kiln_id, violations in violations_by_kiln.items():
        kiln = by_id.get(kiln_id)
        if kiln is None:
            continue
        seen = set()
        for v in violations:
            if v.criterion not in seen:
                seen.add(v.criterion)
                counts[v.criterion][kiln.state] = (counts[v.criterion][kiln.state] or 0) + 1
        if seen:
            non_compliant[kiln.state] += 1
    for c in CRITERIA_ORDER:
        vals = [counts[c][s] for s in states]
        counts[c]["Total"] = (
            None if all(v is None for v in vals) else sum(v or 0 for v in vals)
        )
    non_compliant["Total"] = sum(non_compliant[s] for s in states)
    kiln_count["Total"] = sum(kiln_count[s] for s in states)
    percentage = {}
    for s in states + ["Total"]:
        total = kiln_count[s]
        percentage[s] = (
            None if total == 0 else _round_half_up(100.0 * non_compliant[s] / total)
        )
    return ComplianceSummary(states, counts, non_compliant, kiln_count, percentage)


def violations_to_csv(violations_by_kiln) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["kiln_id", "criterion", "distance_m", "threshold_m", "feature_id"])
    rows = [
        (v.kiln_id, v.criterion.value, f"{v.distance_m:.3f}", f"{v.threshold_m:g}", v.feature_id)
        for vs in violations_by_kiln.values()
        for v in vs
    ]
    for row in sorted(rows):
        w.writerow(row)
    return out.getvalue()
