"""HTTP service exposing the kiln dataset, the validation workflow, grid
progress, analytic reports and a pass-through basemap tile proxy."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import impact, reports, tiling
from .errors import ConfigError, KilnAuditError
from .ingest import KilnClass, ValidationState, kiln_to_feature
from .obb import OrientedBox
from .workflow import ActionKind, KilnStore, ValidationAction

_STATUS_BY_CODE = {
    "unknown_kiln": 404,
    "unknown_cell": 404,
    "invalid_transition": 409,
    "bad_action": 400,
    "missing_input": 404,
    "bad_request": 400,
}


@dataclass
class ServerConfig:
    workspace: Path
    upstream_tile_url: str = ""
    host: str = "127.0.0.1"
    port: int = 8000

    @classmethod
    def load(cls, path=None, env=os.environ) -> "ServerConfig":
        data = {}
        if path:
            data = json.loads(Path(path).read_text())
        workspace = env.get("KILNAUDIT_WORKSPACE", data.get("workspace"))
        if not workspace:
            raise ConfigError("no workspace configured (config file or KILNAUDIT_WORKSPACE)")
        cfg = cls(
            workspace=Path(workspace),
            upstream_tile_url=env.get(
                "KILNAUDIT_TILE_URL", data.get("upstream_tile_url", "")
            ),
            host=data.get("host", "127.0.0.1"),
            port=int(data.get("port", 8000)),
        )
        listen = env.get("KILNAUDIT_LISTEN")
        if listen:
            host, _, port = listen.rpartition(":")
            cfg.host = host or cfg.host
            cfg.port = int(port)
        return cfg


class _ApiError(KilnAuditError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _default_tile_fetcher(url: str):
    import httpx

    resp = httpx.get(url, timeout=30.0)
    resp.raise_for_status()
    return resp.content, resp.headers.get("content-type", "application/octet-stream")


class _GridState:
    """Annotation grid with persisted cell statuses."""

    def __init__(self, path: Path):
        self.path = path
        self.cells = {}
        self._lock = threading.Lock()
        if path.exists():
            for cell in tiling.grid_from_geojson(json.loads(path.read_text())):
                self.cells[(cell.row, cell.col)] = cell

    def set_status(self, row: int, col: int, status: tiling.CellStatus):
        with self._lock:
            cell = self.cells.get((row, col))
            if cell is None:
                raise _ApiError("unknown_cell", f"no grid cell ({row}, {col})")
            cell.status = status
            doc = tiling.grid_to_geojson(
                [self.cells[k] for k in sorted(self.cells)]
            )
            tmp = self.path.with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, sort_keys=True))
            os.replace(tmp, self.path)
            return cell

    def done_count(self) -> int:
        return sum(1 for c in self.cells.values() if c.status is tiling.CellStatus.DONE)


def _parse_bbox(raw: str):
    try:
        w, s, e, n = (float(v) for v in raw.split(","))
    except ValueError:
        raise _ApiError("bad_request", f"bbox must be w,s,e,n, got {raw!r}") from None
    if w > e or s > n:
        raise _ApiError("bad_request", "bbox west>east or south>north")
    return w, s, e, n


def create_app(config: ServerConfig, tile_fetcher=None) -> FastAPI:
    workspace = Path(config.workspace)
    workspace.mkdir(parents=True, exist_ok=True)
    store = KilnStore(workspace)
    grid = _GridState(workspace / "grid.geojson")
    fetch_tile = tile_fetcher or _default_tile_fetcher

    app = FastAPI(title="kilnaudit")
    app.state.store = store
    app.state.grid = grid
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(KilnAuditError)
    async def _kiln_error(request: Request, exc: KilnAuditError):
        code = getattr(exc, "code", "bad_request")
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(code, 400),
            content={"code": code, "message": str(exc)},
        )

    # -- dataset ------------------------------------------------------------

    @app.get("/api/kilns")
    def list_kilns(
        bbox: str | None = None,
        state: str | None = None,
        kiln_class: str | None = Query(default=None, alias="class"),
        validation_state: str | None = None,
        cursor: str | None = None,
        limit: int = Query(default=1000, ge=1, le=10000),
    ):
        records = [store.records[k] for k in sorted(store.records)]
        if bbox:
            w, s, e, n = _parse_bbox(bbox)
            records = [
                r for r in records
                if w <= r.centroid.lon <= e and s <= r.centroid.lat <= n
            ]
        if state:
            records = [r for r in records if r.state == state]
        if kiln_class:
            try:
                cls = KilnClass(kiln_class)
            except ValueError:
                raise _ApiError("bad_request", f"unknown class {kiln_class!r}") from None
            records = [r for r in records if r.kiln_class is cls]
        if validation_state:
            try:
                vs = ValidationState(validation_state)
            except ValueError:
                raise _ApiError(
                    "bad_request", f"unknown validation_state {validation_state!r}"
                ) from None
            records = [r for r in records if r.validation_state is vs]
        total = len(records)
        if cursor:
            records = [r for r in records if r.id > cursor]
        page = records[:limit]
        next_cursor = page[-1].id if len(records) > limit else None
        return {
            "type": "FeatureCollection",
            "features": [kiln_to_feature(r) for r in page],
            "total_matched": total,
            "next_cursor": next_cursor,
        }

    @app.post("/api/kilns/{kiln_id}/action")
    def post_action(kiln_id: str, body: dict = Body(...)):
        for key in ("action_id", "kind"):
            if key not in body:
                raise _ApiError("bad_request", f"action body missing {key!r}")
        new_box = None
        if body.get("new_box") is not None:
            nb = body["new_box"]
            try:
                new_box = OrientedBox(
                    float(nb["cx"]), float(nb["cy"]), float(nb["w"]),
                    float(nb["h"]), float(nb["theta"]),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise _ApiError("bad_request", f"bad new_box: {e}") from None
        try:
            kind = ActionKind(body["kind"])
        except ValueError:
            raise _ApiError("bad_request", f"unknown action kind {body['kind']!r}") from None
        action = ValidationAction(
            action_id=str(body["action_id"]),
            kiln_id=kiln_id,
            kind=kind,
            new_box=new_box,
            new_class=body.get("new_class"),
            actor=str(body.get("actor", "")),
            timestamp=str(body.get("timestamp", "")),
        )
        feature, fresh = store.apply(action)
        return {"applied": fresh, "record": feature}

    @app.get("/api/progress")
    def progress():
        out = store.progress()
        out["cells_done"] = grid.done_count()
        return out

    # -- annotation grid ----------------------------------------------------

    @app.get("/api/grid")
    def get_grid():
        return tiling.grid_to_geojson([grid.cells[k] for k in sorted(grid.cells)])

    @app.post("/api/grid/{row}/{col}/status")
    def set_cell_status(row: int, col: int, body: dict = Body(...)):
        raw = body.get("status")
        try:
            status = tiling.CellStatus(raw)
        except ValueError:
            raise _ApiError("bad_request", f"unknown status {raw!r}") from None
        cell = grid.set_status(row, col, status)
        return {"row": cell.row, "col": cell.col, "status": cell.status.value}

    # -- reports ------------------------------------------------------------

    def _canonical(payload: dict) -> Response:
        return Response(
            content=reports.canonical_json(payload), media_type="application/json"
        )

    def _require(path: Path, what: str) -> Path:
        if not path.exists():
            raise _ApiError("missing_input", f"workspace has no {what} ({path.name})")
        return path

    @app.get("/api/reports/compliance")
    def report_compliance(state: str | None = None):
        rules = reports.read_rules_file(_require(workspace / "rules.csv", "rule table"))
        layers = reports.load_feature_dir(
            _require(workspace / "features", "feature directory")
        )
        kilns = list(store.records.values())
        return _canonical(reports.compliance_report(kilns, layers, rules, state))

    @app.get("/api/reports/emissions")
    def report_emissions():
        productions = reports.read_production_csv(
            _require(workspace / "production.csv", "production table").read_text()
        )
        rates_path = workspace / "rates.csv"
        rates = (
            reports.read_rates_csv(rates_path.read_text())
            if rates_path.exists()
            else impact.DEFAULT_EMISSION_RATES
        )
        counts: dict = {}
        for rec in store.records.values():
            if rec.discarded:
                continue
            per = counts.setdefault(rec.state or "unknown", {c: 0 for c in KilnClass})
            per[rec.kiln_class] += 1
        return _canonical(reports.emissions_report(counts, productions, rates))

    @app.get("/api/reports/exposure")
    def report_exposure(radius_km: str | None = None):
        grid_path = _require(workspace / "population.asc", "population grid")
        pop = reports.read_population_file(grid_path)
        if radius_km:
            try:
                radii = tuple(float(v) for v in radius_km.split(","))
            except ValueError:
                raise _ApiError("bad_request", f"bad radius_km {radius_km!r}") from None
        else:
            radii = impact.EXPOSURE_RADII_KM
        kilns = list(store.records.values())
        return _canonical(reports.exposure_report(kilns, pop, radii))

    # -- tile proxy -----------------------------------------------------------

    _MEDIA_BY_EXT = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}

    @app.get("/tiles/{z}/{x}/{y}")
    def tile(z: int, x: int, y: int):
        if not 0 <= z <= 23 or not 0 <= x < (1 << z) or not 0 <= y < (1 << z):
            raise _ApiError("bad_request", f"tile ({z},{x},{y}) out of range")
        if not config.upstream_tile_url:
            return JSONResponse(
                status_code=503,
                content={"code": "no_upstream", "message": "no tile source configured"},
            )
        ext = Path(config.upstream_tile_url.split("?")[0]).suffix.lower()
        media = _MEDIA_BY_EXT.get(ext, "application/octet-stream")
        cache = workspace / "tile_cache" / str(z) / str(x) / f"{y}{ext or '.bin'}"
        if cache.exists():
            return Response(content=cache.read_bytes(), media_type=media)
        url = config.upstream_tile_url.format(z=z, x=x, y=y)
        content, upstream_media = fetch_tile(url)
        cache.parent.mkdir(parents=True, exist_ok=True)
        cache.write_bytes(content)
        return Response(content=content, media_type=upstream_media or media)

    return app


def run(config: ServerConfig, tile_fetcher=None) -> None:
    import uvicorn

    uvicorn.run(create_app(config, tile_fetcher), host=config.host, port=config.port)
