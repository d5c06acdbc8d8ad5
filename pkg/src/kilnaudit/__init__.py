"""kilnaudit: turns oriented-bounding-box brick-kiln detections into a
validated inventory, audits it against distance-based siting rules, and
estimates emissions and population exposure."""

from .errors import (
    ConfigError,
    DomainError,
    FrameError,
    GeometryError,
    KilnAuditError,
    OracleError,
    ParseError,
    WorkflowError,
)
from .geo import GeoPoint, MercatorPoint, Point, Polygon, Polyline
from .obb import Detection, KilnClass, OrientedBox

__all__ = [
    "ConfigError",
    "Detection",
    "DomainError",
    "FrameError",
    "GeoPoint",
    "GeometryError",
    "KilnAuditError",
    "KilnClass",
    "MercatorPoint",
    "OracleError",
    "OrientedBox",
    "ParseError",
    "Point",
    "Polygon",
    "Polyline",
    "WorkflowError",
]

__version__ = "0.1.0"
