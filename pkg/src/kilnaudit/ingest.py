"""Parsers and writers for every external format: OSM-style feature layers,
quad-corner label files, ESRI ASCII population grids, the siting-rule table
and the canonical kiln dataset (GeoJSON)."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geo
from .errors import ConfigError, GeometryError, ParseError
from .obb import (
    CLASS_BY_INDEX,
    FRAME_MERCATOR,
    FRAME_PIXEL,
    INDEX_BY_CLASS,
    CropGeoreference,
    Detection,
    KilnClass,
    OrientedBox,
    corners,
    shoelace_area,
)


# ---------------------------------------------------------------------------
# feature layers (OSM extracts, hospitals, district/state boundaries, ...)
# ---------------------------------------------------------------------------

class FeatureCategory(str, enum.Enum):
    HABITATION = "habitation"
    ORCHARD = "orchard"
    NATURE_RESERVE = "nature_reserve"
    SCHOOL = "school"
    HOSPITAL = "hospital"
    RELIGIOUS = "religious"
    NATIONAL_HIGHWAY = "national_highway"
    STATE_HIGHWAY = "state_highway"
    DISTRICT_HIGHWAY = "district_highway"
    WETLAND = "wetland"
    RIVER = "river"
    RAILWAY = "railway"
    KILN = "kiln"


def _fclass(value):
    return lambda props: props.get("fclass") == value


def _type_in(*values):
    return lambda props: props.get("type") in values


def _ref_prefix(*prefixes):
    def check(props):
        ref = props.get("ref")
        return isinstance(ref, str) and ref.startswith(prefixes)

    return check


# One predicate per category, mirroring the upstream extraction filters.
# Categories without a filter (railway, kiln) accept every feature.
CATEGORY_FILTERS = {
    FeatureCategory.HABITATION: _fclass("residential"),
    FeatureCategory.ORCHARD: _fclass("orchard"),
    FeatureCategory.NATURE_RESERVE: _fclass("nature_reserve"),
    FeatureCategory.SCHOOL: _type_in("school"),
    FeatureCategory.HOSPITAL: _type_in("hospital"),
    FeatureCategory.RELIGIOUS: _type_in("temple", "mosque", "church"),
    FeatureCategory.NATIONAL_HIGHWAY: _ref_prefix("NH", "NE"),
    FeatureCategory.STATE_HIGHWAY: _ref_prefix("SH"),
    FeatureCategory.DISTRICT_HIGHWAY: _ref_prefix("MDR"),
    FeatureCategory.WETLAND: _fclass("wetland"),
    FeatureCategory.RIVER: _fclass("river"),
    FeatureCategory.RAILWAY: lambda props: True,
    FeatureCategory.KILN: lambda props: True,
}


@dataclass(frozen=True)
class Feature:
    id: str
    geometry: geo.Geometry
    properties: dict = field(default_factory=dict)


@dataclass
class FeatureLayer:
    category: FeatureCategory
    features: list[Feature] = field(default_factory=list)


@dataclass(frozen=True)
class FeatureIssue:
    index: int
    message: str


def _ring_from_positions(positions, close: bool = False):
    pts = tuple(geo.GeoPoint(float(lon), float(lat)) for lon, lat in positions)
    if close and pts and pts[0] != pts[-1]:
        raise GeometryError("polygon ring not closed")
    return pts


def _geojson_geometry(gj: dict) -> list[geo.Geometry]:
    """Expand one GeoJSON geometry into our geometry types (Multi* become
    several parts)."""
    gtype = gj.get("type")
    coords = gj.get("coordinates")
    if gtype == "Point":
        return [geo.Point(geo.GeoPoint(float(coords[0]), float(coords[1])))]
    if gtype == "MultiPoint":
        return [geo.Point(geo.GeoPoint(float(x), float(y))) for x, y in coords]
    if gtype == "LineString":
        return [geo.Polyline(_ring_from_positions(coords))]
    if gtype == "MultiLineString":
        return [geo.Polyline(_ring_from_positions(part)) for part in coords]
    if gtype == "Polygon":
        rings = [_ring_from_positions(r, close=True) for r in coords]
        return [geo.Polygon(rings[0], tuple(rings[1:]))]
    if gtype == "MultiPolygon":
        out = []
        for part in coords:
            rings = [_ring_from_positions(r, close=True) for r in part]
            out.append(geo.Polygon(rings[0], tuple(rings[1:])))
        return out
    raise GeometryError(f"unknown geometry type {gtype!r}")


def _load_json(data):
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        return json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON at byte {e.pos}: {e.msg}") from e


def parse_feature_geojson(
    data, category: FeatureCategory, feature_filter=None
) -> tuple[FeatureLayer, list[FeatureIssue]]:
    """Read a WGS84 FeatureCollection, keeping features that satisfy the
    category filter. Invalid features are reported in the issue list, never
    silently dropped."""
    doc = _load_json(data)
    if doc.get("type") != "FeatureCollection":
        raise ParseError(f"expected FeatureCollection, got {doc.get('type')!r}")
    category = FeatureCategory(category)
    predicate = feature_filter or CATEGORY_FILTERS[category]
    layer = FeatureLayer(category)
    issues: list[FeatureIssue] = []
    for i, f in enumerate(doc.get("features", [])):
        props = f.get("properties") or {}
        if not predicate(props):
            continue
        fid = str(props.get("osm_id") or f.get("id") or f"{category.value}-{i}")
        try:
            parts = _geojson_geometry(f.get("geometry") or {})
        except (GeometryError, ParseError, TypeError, ValueError, KeyError) as e:
            issues.append(FeatureIssue(i, f"feature {i} ({fid}): {e}"))
            continue
        for k, part in enumerate(parts):
            part_id = fid if len(parts) == 1 else f"{fid}#{k}"
            layer.features.append(Feature(part_id, part, dict(props)))
    return layer, issues


def feature_layer_to_geojson(layer: FeatureLayer) -> dict:
    features = []
    for f in layer.features:
        g = f.geometry
        if isinstance(g, geo.Point):
            gj = {"type": "Point", "coordinates": [g.coords.lon, g.coords.lat]}
        elif isinstance(g, geo.Polyline):
            gj = {
                "type": "LineString",
                "coordinates": [[v.lon, v.lat] for v in g.vertices],
            }
        else:
            gj = {
                "type": "Polygon",
                "coordinates": [[[v.lon, v.lat] for v in ring] for ring in g.rings()],
            }
        features.append(
            {"type": "Feature", "id": f.id, "geometry": gj, "properties": f.properties}
        )
    return {"type": "FeatureCollection", "features": features}


# ---------------------------------------------------------------------------
# quad-corner label files
# ---------------------------------------------------------------------------

def _convex_hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def half(iterable):
        out = []
        for p in iterable:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def min_area_oriented_box(points, frame: str) -> OrientedBox:
    """Minimal-area oriented box around a point set (rotating calipers over
    hull edges). Exact when the points are the corners of a rectangle.
    Among equal-area candidates the largest canonical theta wins, keeping
    the fit deterministic for squares."""
    hull = _convex_hull([(float(x), float(y)) for x, y in points])
    if len(hull) < 3:
        raise GeometryError("points are collinear; no oriented box fits them")
    best: OrientedBox | None = None
    best_area = math.inf
    for i in range(len(hull)):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % len(hull)]
        angle = math.atan2(y2 - y1, x2 - x1)
        c, s = math.cos(-angle), math.sin(-angle)
        xs = [x * c - y * s for x, y in hull]
        ys = [x * s + y * c for x, y in hull]
        w = max(xs) - min(xs)
        h = max(ys) - min(ys)
        if w <= 0 or h <= 0:
            continue
        lx = (max(xs) + min(xs)) / 2
        ly = (max(ys) + min(ys)) / 2
        ca, sa = math.cos(angle), math.sin(angle)
        box = OrientedBox(
            lx * ca - ly * sa, lx * sa + ly * ca, w, h, angle, frame
        )
        area = box.area
        if area < best_area * (1 - 1e-12):
            best, best_area = box, area
        elif best is not None and area <= best_area * (1 + 1e-12):
            if box.theta > best.theta:
                best = box
    if best is None:
        raise GeometryError("points are collinear; no oriented box fits them")
    return best


def parse_quad_labels(text: str, georef: CropGeoreference) -> list[Detection]:
    """One detection per line: `class x1 y1 x2 y2 x3 y3 x4 y4 [confidence]`
    with coordinates normalized to [0, 1] relative to the crop. A missing
    confidence means ground truth (1.0)."""
    out: list[Detection] = []
    size = float(georef.crop_size_px)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) not in (9, 10):
            raise ParseError(f"line {lineno}: expected 9 or 10 fields, got {len(toks)}")
        try:
            cls_idx = int(toks[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad class index {toks[0]!r}") from None
        if cls_idx not in CLASS_BY_INDEX:
            raise ParseError(f"line {lineno}: unknown class index {cls_idx}")
        try:
            vals = [float(t) for t in toks[1:]]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric coordinate") from None
        coords = vals[:8]
        if any(not 0.0 <= v <= 1.0 for v in coords):
            raise ParseError(f"line {lineno}: coordinate outside [0, 1]")
        conf = vals[8] if len(toks) == 10 else 1.0
        if not 0.0 <= conf <= 1.0:
            raise ParseError(f"line {lineno}: confidence {conf} outside [0, 1]")
        pts = [(coords[2 * k] * size, coords[2 * k + 1] * size) for k in range(4)]
        try:
            box = min_area_oriented_box(pts, FRAME_PIXEL)
        except GeometryError as e:
            raise ParseError(f"line {lineno}: {e}") from None
        out.append(
            Detection(
                box=box,
                kiln_class=CLASS_BY_INDEX[cls_idx],
                confidence=conf,
                id=f"{georef.crop_id}:{lineno}",
                source_crop=georef.crop_id,
            )
        )
    return out


def write_quad_labels(detections, georef: CropGeoreference) -> str:
    size = float(georef.crop_size_px)
    lines = []
    for d in detections:
        if d.box.frame != FRAME_PIXEL:
            raise ParseError(f"detection {d.id}: label files hold pixel-frame boxes")
        flat = []
        for x, y in corners(d.box):
            nx, ny = x / size, y / size
            if not (-1e-9 <= nx <= 1 + 1e-9 and -1e-9 <= ny <= 1 + 1e-9):
                raise ParseError(f"detection {d.id}: corners fall outside the crop")
            flat += [min(1.0, max(0.0, nx)), min(1.0, max(0.0, ny))]
        toks = [str(INDEX_BY_CLASS[d.kiln_class])] + [f"{v:.8f}" for v in flat]
        if d.confidence != 1.0:
            toks.append(f"{d.confidence:.6f}")
        lines.append(" ".join(toks))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# population grid (ESRI ASCII)
# ---------------------------------------------------------------------------

@dataclass
class PopulationGrid:
    """Regular lat/lon raster of person counts; row 0 is the northernmost."""

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(
            self.nrows, self.ncols
        )
        if self.cellsize <= 0:
            raise ParseError(f"cellsize must be positive, got {self.cellsize}")

    def cell_center(self, row: int, col: int) -> geo.GeoPoint:
        return geo.GeoPoint(
            self.xllcorner + (col + 0.5) * self.cellsize,
            self.yllcorner + (self.nrows - row - 0.5) * self.cellsize,
        )

    def valid_mask(self) -> np.ndarray:
        return self.values != self.nodata

    def total_population(self) -> float:
        return float(self.values[self.valid_mask()].sum())


_GRID_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def parse_population_grid(text: str) -> PopulationGrid:
    tokens = text.split()
    header: dict[str, float] = {}
    i = 0
    while i + 1 < len(tokens):
        key = tokens[i].lower()
        if key in _GRID_HEADER_KEYS or key == "nodata_value":
            header[key] = float(tokens[i + 1])
            i += 2
        else:
            break
    missing = [k for k in _GRID_HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"grid header missing {', '.join(missing)}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    nodata = header.get("nodata_value", -9999.0)
    body = tokens[i:]
    if len(body) != ncols * nrows:
        raise ParseError(
            f"grid payload has {len(body)} values, expected {ncols * nrows}"
        )
    try:
        values = np.array([float(t) for t in body], dtype=float)
    except ValueError as e:
        raise ParseError(f"non-numeric grid value: {e}") from None
    values = values.reshape(nrows, ncols)
    bad = (values < 0) & (values != nodata)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ParseError(f"negative population at row {r}, col {c}")
    return PopulationGrid(
        ncols=ncols,
        nrows=nrows,
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=nodata,
        values=values,
    )


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_population_grid(grid: PopulationGrid) -> str:
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {_num(grid.xllcorner)}",
        f"yllcorner {_num(grid.yllcorner)}",
        f"cellsize {_num(grid.cellsize)}",
        f"NODATA_value {_num(grid.nodata)}",
    ]
    for row in grid.values:
        lines.append(" ".join(_num(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# siting-rule table
# ---------------------------------------------------------------------------

class Criterion(str, enum.Enum):
    INTER_KILN = "inter_kiln"
    HABITATION = "habitation"
    NATIONAL_HIGHWAY = "national_highway"
    RIVER = "river"
    STATE_HIGHWAY = "state_highway"
    DISTRICT_HIGHWAY = "district_highway"
    RAILWAY = "railway"
    NATURE_RESERVE = "nature_reserve"
    ORCHARD = "orchard"
    WETLAND = "wetland"
    SCHOOL = "school"
    RELIGIOUS = "religious"
    HOSPITAL = "hospital"


# reporting order: highest-violation categories first, hospital included
CRITERIA_ORDER = (
    Criterion.INTER_KILN,
    Criterion.HOSPITAL,
    Criterion.HABITATION,
    Criterion.NATIONAL_HIGHWAY,
    Criterion.RIVER,
    Criterion.STATE_HIGHWAY,
    Criterion.DISTRICT_HIGHWAY,
    Criterion.RAILWAY,
    Criterion.NATURE_RESERVE,
    Criterion.ORCHARD,
    Criterion.WETLAND,
    Criterion.SCHOOL,
    Criterion.RELIGIOUS,
)

CRITERION_CATEGORY = {
    Criterion.HABITATION: FeatureCategory.HABITATION,
    Criterion.NATIONAL_HIGHWAY: FeatureCategory.NATIONAL_HIGHWAY,
    Criterion.RIVER: FeatureCategory.RIVER,
    Criterion.STATE_HIGHWAY: FeatureCategory.STATE_HIGHWAY,
    Criterion.DISTRICT_HIGHWAY: FeatureCategory.DISTRICT_HIGHWAY,
    Criterion.RAILWAY: FeatureCategory.RAILWAY,
    Criterion.NATURE_RESERVE: FeatureCategory.NATURE_RESERVE,
    Criterion.ORCHARD: FeatureCategory.ORCHARD,
    Criterion.WETLAND: FeatureCategory.WETLAND,
    Criterion.SCHOOL: FeatureCategory.SCHOOL,
    Criterion.RELIGIOUS: FeatureCategory.RELIGIOUS,
    Criterion.HOSPITAL: FeatureCategory.HOSPITAL,
}


def _normalize_criterion(name: str) -> Criterion:
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    if key in ("religious_places", "religious_place"):
        key = "religious"
    try:
        return Criterion(key)
    except ValueError:
        raise ConfigError(f"unknown criterion {name!r}") from None


@dataclass(frozen=True)
class ComplianceRuleSet:
    """(state, criterion) -> minimum distance in meters. Pairs without an
    entry have no rule."""

    thresholds: dict
    states: tuple[str, ...]

    def threshold(self, state: str, criterion: Criterion) -> float | None:
        return self.thresholds.get((state, Criterion(criterion)))

    def has_state(self, state: str) -> bool:
        return state in self.states


def parse_rule_table(text: str) -> ComplianceRuleSet:
    """CSV with a `state` column followed by one column per criterion;
    cells hold meters, `-` (or blank) marks an undefined rule."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise ConfigError("empty rule table")
    header = rows[0]
    if not header or header[0].strip().lower() not in ("state", ""):
        raise ConfigError("first column of the rule table must be 'state'")
    criteria = [_normalize_criterion(c) for c in header[1:]]
    thresholds: dict = {}
    states: list[str] = []
    for r, row in enumerate(rows[1:], start=2):
        state = row[0].strip()
        if not state:
            raise ConfigError(f"row {r}: missing state name")
        if state in states:
            raise ConfigError(f"row {r}: duplicate state {state!r}")
        states.append(state)
        for crit, cell in zip(criteria, row[1:]):
            cell = cell.strip()
            if cell in ("", "-"):
                continue
            try:
                meters = float(cell)
            except ValueError:
                raise ConfigError(f"row {r}: bad threshold {cell!r}") from None
            if meters <= 0:
                raise ConfigError(f"row {r}: threshold must be positive, got {cell}")
            thresholds[(state, crit)] = meters
    return ComplianceRuleSet(thresholds=thresholds, states=tuple(states))


def write_rule_table(rules: ComplianceRuleSet) -> str:
    criteria = [c for c in CRITERIA_ORDER]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["state"] + [c.value for c in criteria])
    for state in rules.states:
        row = [state]
        for c in criteria:
            t = rules.threshold(state, c)
            row.append("-" if t is None else _num(t))
        w.writerow(row)
    return out.getvalue()


# ---------------------------------------------------------------------------
# canonical kiln dataset
# ---------------------------------------------------------------------------

class ValidationState(str, enum.Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    ADJUSTED = "adjusted"
    RECLASSIFIED = "reclassified"
    DISCARDED = "discarded"


@dataclass
class Provenance:
    crop_id: str = ""
    model_run: str = ""
    created: str = ""
    updated: str = ""

    def to_dict(self) -> dict:
        return {k: v for k, v in vars(self).items() if v}


@dataclass
class KilnRecord:
    id: str
    box: OrientedBox  # Mercator frame
    kiln_class: KilnClass
    confidence: float
    state: str = ""
    validation_state: ValidationState = ValidationState.PENDING
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        if self.box.frame != FRAME_MERCATOR:
            raise ParseError(f"kiln {self.id}: record boxes live in the Mercator frame")
        self.kiln_class = KilnClass(self.kiln_class)
        self.validation_state = ValidationState(self.validation_state)

    @property
    def centroid(self) -> geo.GeoPoint:
        return geo.mercator_to_wgs84(geo.MercatorPoint(self.box.cx, self.box.cy))

    @property
    def discarded(self) -> bool:
        return self.validation_state is ValidationState.DISCARDED


def kiln_to_feature(rec: KilnRecord) -> dict:
    # the box is quantized (mm / nanoradian) before its corners are taken, so
    # a parse that re-derives the center from the corners re-quantizes onto
    # the same grid and write . parse is byte-stable after one round
    q = OrientedBox(
        round(rec.box.cx, 3),
        round(rec.box.cy, 3),
        round(rec.box.w, 3),
        round(rec.box.h, 3),
        round(rec.box.theta, 9),
        rec.box.frame,
    )
    ring = []
    for x, y in corners(q):
        p = geo.mercator_to_wgs84(geo.MercatorPoint(x, y))
        ring.append([p.lon, p.lat])
    ring.append(ring[0])
    props = {
        "id": rec.id,
        "class": rec.kiln_class.value,
        "confidence": round(rec.confidence, 6),
        "state": rec.state,
        "validation_state": rec.validation_state.value,
        "theta": q.theta,
        "w_m": q.w,
        "h_m": q.h,
    }
    prov = rec.provenance.to_dict()
    if prov:
        props["provenance"] = prov
    return {
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [ring]},
        "properties": props,
    }


def _feature_to_kiln(f: dict, index: int) -> KilnRecord:
    props = f.get("properties") or {}
    for key in ("id", "class", "confidence", "validation_state", "theta", "w_m", "h_m"):
        if key not in props:
            raise ParseError(f"feature {index}: missing property {key!r}")
    gj = f.get("geometry") or {}
    if gj.get("type") != "Polygon":
        raise ParseError(f"feature {index}: kiln geometry must be a Polygon")
    ring = gj["coordinates"][0]
    if len(ring) != 5:
        raise ParseError(f"feature {index}: kiln ring must have 4 corners")
    merc = [geo.wgs84_to_mercator(geo.GeoPoint(float(x), float(y))) for x, y in ring[:4]]
    cx = sum(m.x for m in merc) / 4
    cy = sum(m.y for m in merc) / 4
    try:
        box = OrientedBox(
            cx, cy, float(props["w_m"]), float(props["h_m"]), float(props["theta"])
        )
        cls = KilnClass(props["class"])
        vstate = ValidationState(props["validation_state"])
    except (GeometryError, ValueError) as e:
        raise ParseError(f"feature {index}: {e}") from None
    ring_area = shoelace_area([(m.x, m.y) for m in merc])
    if abs(ring_area - box.area) > 0.01 * box.area:
        raise ParseError(
            f"feature {index}: corner polygon area {ring_area:.1f} disagrees with "
            f"w_m*h_m {box.area:.1f}"
        )
    conf = float(props["confidence"])
    if not 0.0 <= conf <= 1.0:
        raise ParseError(f"feature {index}: confidence {conf} outside [0, 1]")
    prov = props.get("provenance") or {}
    return KilnRecord(
        id=str(props["id"]),
        box=box,
        kiln_class=cls,
        confidence=conf,
        state=str(props.get("state", "")),
        validation_state=vstate,
        provenance=Provenance(
            crop_id=prov.get("crop_id", ""),
            model_run=prov.get("model_run", ""),
            created=prov.get("created", ""),
            updated=prov.get("updated", ""),
        ),
    )


def read_kiln_dataset(data) -> list[KilnRecord]:
    doc = _load_json(data)
    if doc.get("type") != "FeatureCollection":
        raise ParseError(f"expected FeatureCollection, got {doc.get('type')!r}")
    records = []
    problems = []
    seen = set()
    for i, f in enumerate(doc.get("features", [])):
        try:
            rec = _feature_to_kiln(f, i)
            if rec.id in seen:
                raise ParseError(f"feature {i}: duplicate kiln id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
        except ParseError as e:
            problems.append(str(e))
    if problems:
        shown = "; ".join(problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ParseError(f"kiln dataset has {len(problems)} bad feature(s): {shown}{more}")
    return records


def kiln_dataset_to_geojson(records) -> dict:
    return {
        "type": "FeatureCollection",
        "features": [kiln_to_feature(r) for r in sorted(records, key=lambda r: r.id)],
    }


def write_kiln_dataset(records) -> str:
    return json.dumps(kiln_dataset_to_geojson(records), indent=2, sort_keys=True) + "\n"
