"""Crop grids over mosaics and the 1 km2 annotation grid over regions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import geo
from .errors import DomainError

MOSAIC_SIZE = 4096
CROP_SIZE = 640
CROP_OVERLAP = 64


@dataclass(frozen=True)
class CropSpec:
    image_size: int = MOSAIC_SIZE
    crop_size: int = CROP_SIZE
    overlap: int = CROP_OVERLAP

    def __post_init__(self):
        if self.overlap < 0 or self.crop_size <= self.overlap:
            raise DomainError(
                f"need crop_size > overlap >= 0, got {self.crop_size}/{self.overlap}"
            )
        if self.crop_size > self.image_size:
            raise DomainError(
                f"crop_size {self.crop_size} exceeds image_size {self.image_size}"
            )

    @property
    def stride(self) -> int:
        return self.crop_size - self.overlap


def _axis_origins(size: int, crop: int, stride: int) -> list[int]:
    xs = list(range(0, size - crop + 1, stride))
    # clamp the final crop so it ends exactly at the image edge
    if xs[-1] != size - crop:
        xs.append(size - crop)
    return xs


def crop_origins(spec: CropSpec) -> list[tuple[int, int]]:
    """Top-left (x0, y0) of every crop, row-major; every pixel of the mosaic
    lies in at least one crop."""
    axis = _axis_origins(spec.image_size, spec.crop_size, spec.stride)
    return [(x, y) for y in axis for x in axis]


class CellStatus(str, enum.Enum):
    UNVISITED = "unvisited"
    IN_PROGRESS = "in-progress"
    DONE = "done"


@dataclass
class GridCell:
    polygon: geo.Polygon
    row: int
    col: int
    status: CellStatus = CellStatus.UNVISITED


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _point_in_rings(x, y, rings) -> bool:
    outer, holes = rings[0], rings[1:]

    def in_ring(ring):
        inside = False
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if (y1 > y) != (y2 > y):
                if x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
                    inside = not inside
        return inside

    return in_ring(outer) and not any(in_ring(h) for h in holes)


def _cell_intersects(x0, y0, x1, y1, rings) -> bool:
    # any cell corner inside the region
    for cx, cy in ((x0, y0), (x1, y0), (x1, y1), (x0, y1)):
        if _point_in_rings(cx, cy, rings):
            return True
    # any region vertex inside the cell
    for ring in rings:
        for vx, vy in ring[:-1]:
            if x0 < vx < x1 and y0 < vy < y1:
                return True
    # any edge crossing
    rect = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    for ring in rings:
        for a, b in zip(ring, ring[1:]):
            for c, d in zip(rect, rect[1:]):
                if _segments_intersect(a, b, c, d):
                    return True
    return False


def _project_rings(poly: geo.Polygon) -> list[list[tuple[float, float]]]:
    out = []
    for ring in poly.rings():
        out.append([(m.x, m.y) for m in (geo.wgs84_to_mercator(v) for v in ring)])
    return out


def annotation_grid(regions, cell_km: float = 1.0) -> list[GridCell]:
    """Axis-aligned cells of cell_km x cell_km in Mercator meters, anchored
    at the region collection's bounding-box corner, keeping every cell that
    intersects a region polygon. Row/col count from the south-west corner.

    Cells are sized in projected meters, matching what a labeling web map
    shows; at lat 28 a "1 km" Mercator cell is about 0.88 ground-km.
    """
    if cell_km <= 0:
        raise DomainError(f"cell_km must be positive, got {cell_km}")
    cell = cell_km * 1000.0
    region_rings = [_project_rings(r) for r in regions]
    if not region_rings:
        return []

    all_x = [x for rings in region_rings for ring in rings for x, _ in ring]
    all_y = [y for rings in region_rings for ring in rings for _, y in ring]
    ax, ay = min(all_x), min(all_y)

    candidates: dict[tuple[int, int], list] = {}
    for rings in region_rings:
        xs = [x for ring in rings for x, _ in ring]
        ys = [y for ring in rings for _, y in ring]
        # trailing -1e-9 keeps projection round-trip noise from adding a
        # zero-width row/column beyond the bounding box
        c0 = int((min(xs) - ax) // cell)
        c1 = max(c0, math.ceil((max(xs) - ax) / cell - 1e-9) - 1)
        r0 = int((min(ys) - ay) // cell)
        r1 = max(r0, math.ceil((max(ys) - ay) / cell - 1e-9) - 1)
        for row in range(r0, r1 + 1):
            for col in range(c0, c1 + 1):
                candidates.setdefault((row, col), []).append(rings)

    cells = []
    for (row, col), ring_sets in sorted(candidates.items()):
        x0, y0 = ax + col * cell, ay + row * cell
        if not any(
            _cell_intersects(x0, y0, x0 + cell, y0 + cell, rs) for rs in ring_sets
        ):
            continue
        ring = tuple(
            geo.mercator_to_wgs84(geo.MercatorPoint(x, y))
            for x, y in ((x0, y0), (x0 + cell, y0), (x0 + cell, y0 + cell),
                         (x0, y0 + cell), (x0, y0))
        )
        cells.append(GridCell(geo.Polygon(ring), row=row, col=col))
    return cells


def grid_to_geojson(cells) -> dict:
    features = []
    for c in cells:
        coords = [[[v.lon, v.lat] for v in c.polygon.outer]]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": coords},
                "properties": {"row": c.row, "col": c.col, "status": c.status.value},
            }
        )
    return {"type": "FeatureCollection", "features": features}


def grid_from_geojson(data: dict) -> list[GridCell]:
    cells = []
    for f in data.get("features", []):
        ring = tuple(
            geo.GeoPoint(lon, lat) for lon, lat in f["geometry"]["coordinates"][0]
        )
        props = f.get("properties", {})
        cells.append(
            GridCell(
                geo.Polygon(ring),
                row=int(props["row"]),
                col=int(props["col"]),
                status=CellStatus(props.get("status", "unvisited")),
            )
        )
    return cells
