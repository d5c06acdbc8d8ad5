"""Oriented bounding boxes: corner math, convex clipping, IoU, suppression
and pixel<->Mercator reprojection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from . import geo
from .errors import DomainError, FrameError, GeometryError

FRAME_PIXEL = "pixel"
FRAME_MERCATOR = "mercator"
_FRAMES = (FRAME_PIXEL, FRAME_MERCATOR)

NMS_IOU_THRESHOLD = 0.33
NMS_CONFIDENCE_THRESHOLD = 0.25


class KilnClass(str, enum.Enum):
    CFCBK = "CFCBK"
    FCBK = "FCBK"
    ZIGZAG = "Zigzag"


CLASS_BY_INDEX = {0: KilnClass.CFCBK, 1: KilnClass.FCBK, 2: KilnClass.ZIGZAG}
INDEX_BY_CLASS = {v: k for k, v in CLASS_BY_INDEX.items()}


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle. theta is radians counterclockwise from +x to the
    w edge, canonicalized into [-pi/2, pi/2) with w >= h for non-square
    boxes (the (w, h, theta) and (h, w, theta +- pi/2) representations
    describe the same rectangle; squares keep the theta they were built
    with, modulo pi)."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float
    frame: str = FRAME_MERCATOR

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise GeometryError(f"non-finite {name}")
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"degenerate box extents w={self.w}, h={self.h}")
        if self.frame not in _FRAMES:
            raise FrameError(f"unknown frame {self.frame!r}")
        t = math.fmod(self.theta + math.pi / 2, math.pi)
        if t < 0:
            t += math.pi
        t -= math.pi / 2
        w, h = self.w, self.h
        # squares keep their angle: swapping equal extents is arbitrary and
        # last-ulp noise in w - h must not flip theta by a quarter turn
        if w < h and not math.isclose(w, h, rel_tol=1e-9):
            w, h = h, w
            t = t - math.pi / 2 if t >= 0 else t + math.pi / 2
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "theta", t)

    @property
    def area(self) -> float:
        return self.w * self.h


def corners(box: OrientedBox) -> tuple[tuple[float, float], ...]:
    """Four vertices, counterclockwise in the box's coordinate frame,
    centroid at (cx, cy)."""
    c = math.cos(box.theta)
    s = math.sin(box.theta)
    hw = box.w / 2
    hh = box.h / 2
    local = ((hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh))
    return tuple(
        (box.cx + x * c - y * s, box.cy + x * s + y * c) for x, y in local
    )


def shoelace_area(poly) -> float:
    """Signed x2 omitted: returns the absolute polygon area."""
    n = len(poly)
    acc = 0.0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2


def convex_intersection_area(a, b) -> float:
    """Area of the intersection of two convex polygons (vertex sequences).
    Clips a successively by every edge half-plane of b (Sutherland-Hodgman);
    b must wind counterclockwise."""
    poly = list(a)
    nb = len(b)
    for i in range(nb):
        ex1, ey1 = b[i]
        ex2, ey2 = b[(i + 1) % nb]
        dx = ex2 - ex1
        dy = ey2 - ey1
        clipped = []
        n = len(poly)
        if n == 0:
            return 0.0
        px, py = poly[-1]
        prev_side = dx * (py - ey1) - dy * (px - ex1)
        for qx, qy in poly:
            side = dx * (qy - ey1) - dy * (qx - ex1)
            if side >= 0:
                if prev_side < 0:
                    t = prev_side / (prev_side - side)
                    clipped.append((px + t * (qx - px), py + t * (qy - py)))
                clipped.append((qx, qy))
            elif prev_side >= 0:
                t = prev_side / (prev_side - side)
                clipped.append((px + t * (qx - px), py + t * (qy - py)))
            px, py, prev_side = qx, qy, side
        poly = clipped
    if len(poly) < 3:
        return 0.0
    return shoelace_area(poly)


def obb_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Intersection over union; 0 for disjoint boxes, 1 for identical."""
    if a.frame != b.frame:
        raise FrameError(f"IoU across frames {a.frame!r} vs {b.frame!r}")
    inter = convex_intersection_area(corners(a), corners(b))
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


@dataclass(frozen=True)
class Detection:
    box: OrientedBox
    kiln_class: KilnClass
    confidence: float
    id: str
    source_crop: str = ""

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError(f"confidence {self.confidence} outside [0, 1]")
        if not isinstance(self.kiln_class, KilnClass):
            object.__setattr__(self, "kiln_class", KilnClass(self.kiln_class))


def boxes_may_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Cheap reject: boxes whose centers sit farther apart than the sum of
    their half-diagonals cannot intersect."""
    reach = (math.hypot(a.w, a.h) + math.hypot(b.w, b.h)) / 2
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    return dx * dx + dy * dy <= reach * reach


def nms(
    detections,
    iou_thresh: float = NMS_IOU_THRESHOLD,
    conf_thresh: float = NMS_CONFIDENCE_THRESHOLD,
    class_agnostic: bool = True,
) -> list[Detection]:
    """Greedy non-maximum suppression.

    Detections below conf_thresh are dropped; the rest are visited by
    descending confidence (ties broken by id, so output is deterministic)
    and any candidate with IoU >= iou_thresh against an already-kept box is
    suppressed. Output keeps the descending-confidence order.
    """
    pool = sorted(
        (d for d in detections if d.confidence >= conf_thresh),
        key=lambda d: (-d.confidence, d.id),
    )
    kept: list[Detection] = []
    for cand in pool:
        suppressed = False
        for k in kept:
            if not class_agnostic and k.kiln_class != cand.kiln_class:
                continue
            # the distance reject is exact only when a zero IoU cannot reach
            # the threshold
            if iou_thresh > 0 and not boxes_may_overlap(cand.box, k.box):
                continue
            if obb_iou(cand.box, k.box) >= iou_thresh:
                suppressed = True
                break
        if not suppressed:
            kept.append(cand)
    return kept


def merge_cross_tile(
    detections,
    iou_thresh: float = NMS_IOU_THRESHOLD,
    conf_thresh: float = NMS_CONFIDENCE_THRESHOLD,
    class_agnostic: bool = True,
) -> list[Detection]:
    """Deduplicate detections of the same physical kiln seen from multiple
    overlapping crops. All boxes must already be in the Mercator frame."""
    detections = list(detections)
    bad = {d.box.frame for d in detections if d.box.frame != FRAME_MERCATOR}
    if bad:
        raise FrameError(
            f"cross-tile merge needs Mercator boxes, found frame(s) {sorted(bad)}"
        )
    return nms(detections, iou_thresh, conf_thresh, class_agnostic)


@dataclass(frozen=True)
class CropGeoreference:
    """Affine link between a crop's pixel grid and Mercator meters.

    origin_x/origin_y locate the crop's top-left pixel corner; pixel y grows
    downward (image convention) while Mercator y grows northward, so the
    vertical axis flips and theta changes sign across the transform. The
    footprint on the ground is identical either way.
    """

    crop_id: str
    origin_x: float
    origin_y: float
    m_per_px: float
    crop_size_px: int = 640

    def __post_init__(self):
        if self.m_per_px <= 0:
            raise DomainError(f"m_per_px must be positive, got {self.m_per_px}")
        if self.crop_size_px <= 0:
            raise DomainError(f"crop_size_px must be positive, got {self.crop_size_px}")

    def pixel_to_mercator(self, px: float, py: float) -> tuple[float, float]:
        return self.origin_x + px * self.m_per_px, self.origin_y - py * self.m_per_px

    def mercator_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.origin_x) / self.m_per_px, (self.origin_y - y) / self.m_per_px


def reproject_box(
    box: OrientedBox, georef: CropGeoreference, to_frame: str
) -> OrientedBox:
    """Move a box between the crop pixel frame and Mercator meters."""
    if to_frame not in _FRAMES:
        raise FrameError(f"unknown target frame {to_frame!r}")
    if box.frame == to_frame:
        return box
    if to_frame == FRAME_MERCATOR:
        cx, cy = georef.pixel_to_mercator(box.cx, box.cy)
        scale = georef.m_per_px
    else:
        cx, cy = georef.mercator_to_pixel(box.cx, box.cy)
        scale = 1.0 / georef.m_per_px
    return OrientedBox(cx, cy, box.w * scale, box.h * scale, -box.theta, to_frame)


def georef_for_crop(
    crop_id: str,
    crop_origin_px: tuple[int, int],
    mosaic_top_left: geo.MercatorPoint,
    zoom: int,
    crop_size_px: int = 640,
    lat_for_resolution: float = 0.0,
) -> CropGeoreference:
    """Georeference a crop cut from a mosaic whose top-left corner is known."""
    mpp = geo.ground_resolution(zoom, lat_for_resolution)
    ox, oy = crop_origin_px
    return CropGeoreference(
        crop_id=crop_id,
        origin_x=mosaic_top_left.x + ox * mpp,
        origin_y=mosaic_top_left.y - oy * mpp,
        m_per_px=mpp,
        crop_size_px=crop_size_px,
    )


def box_centroid_wgs84(box: OrientedBox) -> geo.GeoPoint:
    if box.frame != FRAME_MERCATOR:
        raise FrameError("centroid in WGS84 needs a Mercator-frame box")
    return geo.mercator_to_wgs84(geo.MercatorPoint(box.cx, box.cy))


def with_frame(box: OrientedBox, frame: str) -> OrientedBox:
    return replace(box, frame=frame)
