// Screen-space geometry for the overlay: box -> pixel corners, plus the
// style tables keyed by technology and validation state. Pure functions so
// the corner math is testable without a canvas.

import { Viewport, lonLatToMercator, mercatorToScreen } from "./geo.js";
import { OrientedBox, corners, rotationHandle } from "./obb.js";
import { KilnView } from "./state.js";

export const CLASS_COLORS: Record<string, string> = {
  CFCBK: "#d62728",
  FCBK: "#ff7f0e",
  Zigzag: "#2ca02c",
};

export const STATE_STYLES: Record<string, { dash: number[]; width: number; alpha: number }> = {
  pending: { dash: [6, 4], width: 1.5, alpha: 0.9 },
  accepted: { dash: [], width: 2, alpha: 1.0 },
  adjusted: { dash: [], width: 2, alpha: 1.0 },
  reclassified: { dash: [], width: 2, alpha: 1.0 },
  discarded: { dash: [2, 4], width: 1, alpha: 0.4 },
};

export function screenCorners(box: OrientedBox, vp: Viewport): Array<[number, number]> {
  return corners(box).map(([x, y]) => mercatorToScreen({ x, y }, vp));
}

export function screenRotationHandle(box: OrientedBox, vp: Viewport): [number, number] {
  const h = rotationHandle(box, 0);
  return mercatorToScreen(h, vp);
}

/** The stored corner ring projected straight to the screen, bypassing the
 * box parameters; rendering and storage must agree within half a pixel. */
export function storedRingOnScreen(kiln: KilnView, vp: Viewport): Array<[number, number]> {
  return kiln.feature.geometry.coordinates[0]
    .slice(0, 4)
    .map(([lon, lat]) => mercatorToScreen(lonLatToMercator({ lon, lat }), vp));
}

export interface QuadDrawCommand {
  id: string;
  points: Array<[number, number]>;
  color: string;
  dash: number[];
  width: number;
  alpha: number;
  selected: boolean;
  editing: boolean;
}

export function drawCommands(
  kilns: KilnView[],
  vp: Viewport,
  selectedId: string | null,
  editingId: string | null,
  editBox: OrientedBox | null,
): QuadDrawCommand[] {
  return kilns.map((k) => {
    const editing = k.id === editingId && editBox !== null;
    const box = editing ? (editBox as OrientedBox) : k.box;
    const style = STATE_STYLES[k.validationState] ?? STATE_STYLES.pending;
    return {
      id: k.id,
      points: screenCorners(box, vp),
      color: CLASS_COLORS[k.kilnClass] ?? "#888",
      dash: style.dash,
      width: style.width,
      alpha: style.alpha,
      selected: k.id === selectedId,
      editing,
    };
  });
}

export function renderToCanvas(ctx: CanvasRenderingContext2D, commands: QuadDrawCommand[]): void {
  for (const cmd of commands) {
    ctx.save();
    ctx.globalAlpha = cmd.alpha;
    ctx.strokeStyle = cmd.color;
    ctx.lineWidth = cmd.selected ? cmd.width + 1.5 : cmd.width;
    ctx.setLineDash(cmd.editing ? [3, 3] : cmd.dash);
    ctx.beginPath();
    const [first, ...rest] = cmd.points;
    ctx.moveTo(first[0], first[1]);
    for (const [x, y] of rest) ctx.lineTo(x, y);
    ctx.closePath();
    ctx.stroke();
    if (cmd.selected) {
      ctx.fillStyle = cmd.color;
      for (const [x, y] of cmd.points) {
        ctx.beginPath();
        ctx.arc(x, y, 4, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
    ctx.restore();
  }
}
