"""Coordinate systems, geodesic distances and zoom/resolution math.

Two Earth radii are used on purpose: the Web Mercator projection is defined
on a sphere of radius 6378137 m (the WGS84 semi-major axis), while ground
distances use the IUGG mean radius 6371008.8 m. Mixing them is how standard
web-GIS tooling behaves, and results stay reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, GeometryError

MERCATOR_RADIUS = 6378137.0
EARTH_RADIUS = 6371008.8
MERCATOR_BOUND = math.pi * MERCATOR_RADIUS  # 20037508.342789244
MAX_MERCATOR_LAT = 85.051129
TILE_SIZE = 256
MAX_ZOOM = 23

_METERS_PER_DEGREE = EARTH_RADIUS * math.pi / 180.0


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 position. lon is normalized into [-180, 180]; lat must lie in
    the Web Mercator validity band."""

    lon: float
    lat: float

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise DomainError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not -MAX_MERCATOR_LAT < self.lat < MAX_MERCATOR_LAT:
            raise DomainError(
                f"latitude {self.lat} outside Web Mercator band "
                f"(+-{MAX_MERCATOR_LAT})"
            )
        if not -180.0 <= self.lon <= 180.0:
            lon = math.fmod(self.lon + 180.0, 360.0)
            if lon < 0:
                lon += 360.0
            object.__setattr__(self, "lon", lon - 180.0)


@dataclass(frozen=True)
class MercatorPoint:
    """EPSG:3857 position in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite coordinate ({self.x}, {self.y})")
        bound = MERCATOR_BOUND * (1 + 1e-12)
        if abs(self.x) > bound or abs(self.y) > bound:
            raise DomainError(
                f"({self.x}, {self.y}) outside Mercator extent +-{MERCATOR_BOUND}"
            )


def _check_ring(ring: tuple[GeoPoint, ...]) -> None:
    if len(ring) < 4:
        raise GeometryError(f"ring needs >= 3 distinct vertices, got {len(ring)} entries")
    if ring[0] != ring[-1]:
        raise GeometryError("ring is not closed (first vertex != last)")
    if len({(p.lon, p.lat) for p in ring[:-1]}) < 3:
        raise GeometryError("ring has fewer than 3 distinct vertices")


@dataclass(frozen=True)
class Point:
    coords: GeoPoint


@dataclass(frozen=True)
class Polyline:
    vertices: tuple[GeoPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(self.vertices) < 2:
            raise GeometryError("polyline needs >= 2 vertices")


@dataclass(frozen=True)
class Polygon:
    """Outer ring plus optional holes; rings are closed (first == last)."""

    outer: tuple[GeoPoint, ...]
    holes: tuple[tuple[GeoPoint, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outer", tuple(self.outer))
        object.__setattr__(self, "holes", tuple(tuple(h) for h in self.holes))
        _check_ring(self.outer)
        for hole in self.holes:
            _check_ring(hole)

    def rings(self):
        yield self.outer
        yield from self.holes


Geometry = Point | Polyline | Polygon


def wgs84_to_mercator(p: GeoPoint) -> MercatorPoint:
    """Forward spherical Mercator projection. atanh(sin(lat)) is the same
    function as ln(tan(pi/4 + lat/2)) but exact at the equator."""
    x = MERCATOR_RADIUS * math.radians(p.lon)
    y = MERCATOR_RADIUS * math.atanh(math.sin(math.radians(p.lat)))
    return MercatorPoint(x, y)


def mercator_to_wgs84(p: MercatorPoint) -> GeoPoint:
    """Exact analytic inverse of wgs84_to_mercator. A last-ulp overshoot at
    the antimeridian clamps to 180 instead of wrapping."""
    lon = math.degrees(p.x / MERCATOR_RADIUS)
    lon = max(-180.0, min(180.0, lon))
    lat = math.degrees(math.asin(math.tanh(p.y / MERCATOR_RADIUS)))
    return GeoPoint(lon, lat)


def ground_resolution(zoom: int, lat: float) -> float:
    """Meters per pixel of a 256px web-map tile at the given zoom and latitude."""
    if not isinstance(zoom, int) or not 0 <= zoom <= MAX_ZOOM:
        raise DomainError(f"zoom {zoom!r} outside [0, {MAX_ZOOM}]")
    if not abs(lat) < 90.0:
        raise DomainError(f"latitude {lat} out of range")
    return (
        2 * math.pi * MERCATOR_RADIUS * math.cos(math.radians(lat))
        / (TILE_SIZE * (1 << zoom))
    )


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on the mean-radius sphere."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    s = (
        math.sin(dphi / 2) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    )
    return 2 * EARTH_RADIUS * math.asin(min(1.0, math.sqrt(s)))


def _local_xy(origin: GeoPoint, p: GeoPoint) -> tuple[float, float]:
    """Equirectangular approximation centered at origin, in meters."""
    dlon = p.lon - origin.lon
    if dlon > 180.0:
        dlon -= 360.0
    elif dlon < -180.0:
        dlon += 360.0
    x = math.radians(dlon) * math.cos(math.radians(origin.lat)) * EARTH_RADIUS
    y = math.radians(p.lat - origin.lat) * EARTH_RADIUS
    return x, y


def _segment_distance_from_origin(ax, ay, bx, by) -> float:
    dx = bx - ax
    dy = by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.hypot(ax, ay)
    # projection of the origin onto the segment, clamped to the endpoints
    t = -(ax * dx + ay * dy) / seg2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(ax + t * dx, ay + t * dy)


def _point_to_vertices_distance(p: GeoPoint, vertices) -> float:
    """Min distance from p to the chain of segments through vertices."""
    coords = [_local_xy(p, v) for v in vertices]
    best = math.inf
    for (ax, ay), (bx, by) in zip(coords, coords[1:]):
        d = _segment_distance_from_origin(ax, ay, bx, by)
        if d < best:
            best = d
    return best


def point_in_ring(p: GeoPoint, ring: tuple[GeoPoint, ...]) -> bool:
    """Even-odd ray casting in lon/lat space. Boundary points are not
    guaranteed either way; callers needing boundary semantics should check
    distance to the ring separately."""
    inside = False
    px, py = p.lon, p.lat
    for a, b in zip(ring, ring[1:]):
        ay, by = a.lat, b.lat
        if (ay > py) != (by > py):
            x_cross = a.lon + (py - ay) * (b.lon - a.lon) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


def point_in_polygon(p: GeoPoint, poly: Polygon) -> bool:
    if not point_in_ring(p, poly.outer):
        return False
    return not any(point_in_ring(p, hole) for hole in poly.holes)


def point_to_geometry_distance(p: GeoPoint, g: Geometry) -> float:
    """Meters from p to a geometry; 0 when p lies inside a polygon."""
    if isinstance(g, Point):
        return haversine_distance(p, g.coords)
    if isinstance(g, Polyline):
        return _point_to_vertices_distance(p, g.vertices)
    if isinstance(g, Polygon):
        if point_in_polygon(p, g):
            return 0.0
        return min(_point_to_vertices_distance(p, ring) for ring in g.rings())
    raise GeometryError(f"unsupported geometry {type(g).__name__}")


def geometry_bbox(g: Geometry) -> tuple[float, float, float, float]:
    """(min lon, min lat, max lon, max lat) over the geometry's vertices."""
    if isinstance(g, Point):
        pts = [g.coords]
    elif isinstance(g, Polyline):
        pts = list(g.vertices)
    elif isinstance(g, Polygon):
        pts = [v for ring in g.rings() for v in ring]
    else:
        raise GeometryError(f"unsupported geometry {type(g).__name__}")
    lons = [v.lon for v in pts]
    lats = [v.lat for v in pts]
    return min(lons), min(lats), max(lons), max(lats)


def meters_to_degrees_lat(meters: float) -> float:
    return meters / _METERS_PER_DEGREE
