// Browser entry point: slippy map canvas, kiln overlay, keyboard-driven
// validation workflow and the report dashboards. All behavior lives in the
// headless modules; this file only wires DOM events to them.

import { ApiError, KilnApi, KilnClassName } from "./api.js";
import {
  Viewport,
  lonLatToMercator,
  metersPerPixel,
  screenToMercator,
  tilesForViewport,
} from "./geo.js";
import { containsPoint, resizeByCorner, rotateToHandle } from "./obb.js";
import {
  drawCommands,
  renderToCanvas,
  screenCorners,
  screenRotationHandle,
} from "./render.js";
import { Console } from "./state.js";
import {
  complianceTable,
  emissionsTable,
  exposureTable,
  tableToHtml,
} from "./dashboards.js";

const params = new URLSearchParams(window.location.search);
const api = new KilnApi(params.get("api") ?? "");

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusBar = document.getElementById("status")!;
const sidePanel = document.getElementById("panel")!;

const viewport: Viewport = {
  center: lonLatToMercator({ lon: 77.3, lat: 28.2 }),
  zoom: 14,
  widthPx: canvas.width,
  heightPx: canvas.height,
};

const console_ = new Console(api, viewport);
const tileCache = new Map<string, HTMLImageElement>();
let gridCells: Array<{ row: number; col: number; status: string; center: { x: number; y: number } }> = [];

type DragState =
  | { kind: "pan"; lastX: number; lastY: number }
  | { kind: "corner"; index: number }
  | { kind: "rotate" }
  | null;
let drag: DragState = null;

function setStatus(text: string) {
  statusBar.textContent = text;
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#dde6dd";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  for (const t of tilesForViewport(viewport)) {
    const key = `${t.z}/${t.x}/${t.y}`;
    let img = tileCache.get(key);
    if (!img) {
      img = new Image();
      img.src = api.tileUrl(t.z, t.x, t.y);
      img.onload = () => requestAnimationFrame(draw);
      img.onerror = () => undefined; // keep the flat background
      tileCache.set(key, img);
    }
    if (img.complete && img.naturalWidth > 0) {
      const world = 2 * 20037508.342789244;
      const n = Math.pow(2, t.z);
      const tileMeters = world / n;
      const west = -20037508.342789244 + t.x * tileMeters;
      const north = 20037508.342789244 - t.y * tileMeters;
      const res = metersPerPixel(viewport.zoom);
      const px = viewport.widthPx / 2 + (west - viewport.center.x) / res;
      const py = viewport.heightPx / 2 - (north - viewport.center.y) / res;
      const sizePx = tileMeters / res;
      ctx.drawImage(img, px, py, sizePx, sizePx);
    }
  }
  const edit = console_.view.edit;
  const commands = drawCommands(
    console_.visibleKilns(),
    viewport,
    console_.view.selectedId,
    edit?.kilnId ?? null,
    edit?.box ?? null,
  );
  renderToCanvas(ctx, commands);
  if (edit) {
    const [hx, hy] = screenRotationHandle(edit.box, viewport);
    ctx.fillStyle = "#1f77b4";
    ctx.beginPath();
    ctx.arc(hx, hy, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
  const progressText =
    `kilns: ${console_.visibleKilns().length} shown, ` +
    `${console_.pendingKilns().length} pending` +
    (console_.view.activeCell
      ? ` | cell (${console_.view.activeCell.row}, ${console_.view.activeCell.col})`
      : "") +
    (edit ? " | EDITING (enter saves, esc cancels)" : "") +
    (console_.view.lastError ? ` | ${console_.view.lastError.code}` : "");
  setStatus(progressText);
}

function hitTest(px: number, py: number): string | null {
  const m = screenToMercator(px, py, viewport);
  for (const kiln of console_.visibleKilns()) {
    if (containsPoint(kiln.box, m)) return kiln.id;
  }
  return null;
}

function nearCorner(px: number, py: number): number | null {
  const edit = console_.view.edit;
  if (!edit) return null;
  const pts = screenCorners(edit.box, viewport);
  for (let i = 0; i < 4; i++) {
    if (Math.hypot(pts[i][0] - px, pts[i][1] - py) < 8) return i;
  }
  return null;
}

canvas.addEventListener("mousedown", (ev) => {
  const { offsetX: px, offsetY: py } = ev;
  const edit = console_.view.edit;
  if (edit) {
    const corner = nearCorner(px, py);
    if (corner !== null) {
      drag = { kind: "corner", index: corner };
      return;
    }
    const [hx, hy] = screenRotationHandle(edit.box, viewport);
    if (Math.hypot(hx - px, hy - py) < 10) {
      drag = { kind: "rotate" };
      return;
    }
  }
  const hit = hitTest(px, py);
  if (hit && !edit) {
    console_.select(hit);
    draw();
    return;
  }
  drag = { kind: "pan", lastX: px, lastY: py };
});

canvas.addEventListener("mousemove", (ev) => {
  if (!drag) return;
  const { offsetX: px, offsetY: py } = ev;
  if (drag.kind === "pan") {
    const res = metersPerPixel(viewport.zoom);
    viewport.center = {
      x: viewport.center.x - (px - drag.lastX) * res,
      y: viewport.center.y + (py - drag.lastY) * res,
    };
    drag = { kind: "pan", lastX: px, lastY: py };
  } else {
    const edit = console_.view.edit!;
    const m = screenToMercator(px, py, viewport);
    console_.updateEdit(
      drag.kind === "corner"
        ? resizeByCorner(edit.box, drag.index, m)
        : rotateToHandle(edit.box, m),
    );
  }
  draw();
});

canvas.addEventListener("mouseup", async () => {
  const wasPan = drag?.kind === "pan";
  drag = null;
  if (wasPan) {
    await console_.refresh();
    draw();
  }
});

canvas.addEventListener("wheel", async (ev) => {
  ev.preventDefault();
  viewport.zoom = Math.min(19, Math.max(3, viewport.zoom - Math.sign(ev.deltaY)));
  await console_.refresh();
  draw();
});

async function nextCell() {
  const grid = await api.grid();
  gridCells = grid.features.map((f) => {
    const ring = f.geometry.coordinates[0].slice(0, 4);
    const merc = ring.map(([lon, lat]) => lonLatToMercator({ lon, lat }));
    return {
      row: f.properties.row,
      col: f.properties.col,
      status: f.properties.status,
      center: {
        x: merc.reduce((a, p) => a + p.x, 0) / 4,
        y: merc.reduce((a, p) => a + p.y, 0) / 4,
      },
    };
  });
  const next = gridCells
    .filter((c) => c.status !== "done")
    .sort((a, b) => a.row - b.row || a.col - b.col)[0];
  if (!next) {
    setStatus("all grid cells done");
    return;
  }
  console_.view.activeCell = { row: next.row, col: next.col };
  viewport.center = next.center;
  await api.setCellStatus(next.row, next.col, "in-progress");
  await console_.refresh();
  draw();
}

async function showReport(kind: "compliance" | "emissions" | "exposure") {
  try {
    const { doc } = await api.report(kind);
    const model =
      kind === "compliance"
        ? complianceTable(doc)
        : kind === "emissions"
          ? emissionsTable(doc)
          : exposureTable(doc);
    sidePanel.innerHTML = tableToHtml(model);
  } catch (err) {
    sidePanel.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

const RECLASS_KEYS: Record<string, KilnClassName> = {
  "1": "CFCBK",
  "2": "FCBK",
  "3": "Zigzag",
};

window.addEventListener("keydown", async (ev) => {
  try {
    if (ev.key === "Escape") {
      console_.cancelEdit();
    } else if (ev.key === "Enter" && console_.view.edit) {
      await console_.commitEdit();
    } else if (ev.key === "e" && console_.selected()) {
      console_.beginEdit();
    } else if (ev.key === "a" && console_.selected()) {
      await console_.acceptSelected();
    } else if (ev.key === "d" && console_.selected()) {
      await console_.discardSelected();
    } else if (RECLASS_KEYS[ev.key] && console_.selected()) {
      await console_.reclassifySelected(RECLASS_KEYS[ev.key]);
    } else if (ev.key === "n") {
      await nextCell();
      return;
    } else if (ev.key === "c" && console_.view.activeCell) {
      await console_.completeActiveCell();
    } else {
      return;
    }
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // stale record: refetch rather than clobbering anything
      await console_.refresh();
    } else if (!(err instanceof ApiError)) {
      setStatus(String(err));
    }
  }
  draw();
});

for (const [id, kind] of [
  ["btn-compliance", "compliance"],
  ["btn-emissions", "emissions"],
  ["btn-exposure", "exposure"],
] as const) {
  document.getElementById(id)?.addEventListener("click", () => showReport(kind));
}
document.getElementById("btn-next-cell")?.addEventListener("click", nextCell);

console_.refresh().then(draw);
