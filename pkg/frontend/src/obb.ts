// Oriented-box math for the overlay and the edit handles. Boxes live in
// Mercator meters; theta is counterclockwise from +x to the w edge, matching
// the dataset schema.

import { MercatorXY } from "./geo.js";

export interface OrientedBox {
  cx: number;
  cy: number;
  w: number;
  h: number;
  theta: number;
}

export type Corner = [number, number];

/** Counterclockwise corners: (+w/2,+h/2), (-w/2,+h/2), (-w/2,-h/2), (+w/2,-h/2)
 * rotated by theta and translated to the center. */
export function corners(box: OrientedBox): [Corner, Corner, Corner, Corner] {
  const c = Math.cos(box.theta);
  const s = Math.sin(box.theta);
  const hw = box.w / 2;
  const hh = box.h / 2;
  const local: Corner[] = [
    [hw, hh],
    [-hw, hh],
    [-hw, -hh],
    [hw, -hh],
  ];
  return local.map(([x, y]) => [
    box.cx + x * c - y * s,
    box.cy + x * s + y * c,
  ]) as [Corner, Corner, Corner, Corner];
}

/** Rebuild a box from the stored corner ring (Mercator) plus the exact
 * w/h/theta carried in the record properties. */
export function boxFromRecord(
  ringMercator: MercatorXY[],
  w: number,
  h: number,
  theta: number,
): OrientedBox {
  const four = ringMercator.slice(0, 4);
  const cx = four.reduce((acc, p) => acc + p.x, 0) / 4;
  const cy = four.reduce((acc, p) => acc + p.y, 0) / 4;
  return { cx, cy, w, h, theta };
}

/** Drag corner k to a new position, keeping the opposite corner pinned and
 * the rotation unchanged. Degenerate drags clamp at a 1 m extent. */
export function resizeByCorner(box: OrientedBox, k: number, to: MercatorXY): OrientedBox {
  const all = corners(box);
  const opposite = all[(k + 2) % 4];
  const ux = Math.cos(box.theta);
  const uy = Math.sin(box.theta);
  const dx = to.x - opposite[0];
  const dy = to.y - opposite[1];
  const w = Math.max(1.0, Math.abs(dx * ux + dy * uy));
  const h = Math.max(1.0, Math.abs(-dx * uy + dy * ux));
  return {
    cx: (to.x + opposite[0]) / 2,
    cy: (to.y + opposite[1]) / 2,
    w,
    h,
    theta: box.theta,
  };
}

/** Where the rotation handle sits: off the midpoint of the +w edge. */
export function rotationHandle(box: OrientedBox, offsetM = 0): MercatorXY {
  const reach = box.w / 2 + offsetM;
  return {
    x: box.cx + reach * Math.cos(box.theta),
    y: box.cy + reach * Math.sin(box.theta),
  };
}

/** Rotate the box so its +w axis points at the dragged handle position. */
export function rotateToHandle(box: OrientedBox, to: MercatorXY): OrientedBox {
  const theta = Math.atan2(to.y - box.cy, to.x - box.cx);
  return { ...box, theta };
}

export function translate(box: OrientedBox, dx: number, dy: number): OrientedBox {
  return { ...box, cx: box.cx + dx, cy: box.cy + dy };
}

export function containsPoint(box: OrientedBox, p: MercatorXY): boolean {
  const dx = p.x - box.cx;
  const dy = p.y - box.cy;
  const c = Math.cos(-box.theta);
  const s = Math.sin(-box.theta);
  const qx = dx * c - dy * s;
  const qy = dx * s + dy * c;
  return Math.abs(qx) <= box.w / 2 && Math.abs(qy) <= box.h / 2;
}

export function boxesEqual(a: OrientedBox, b: OrientedBox, tol = 1e-6): boolean {
  return (
    Math.abs(a.cx - b.cx) <= tol &&
    Math.abs(a.cy - b.cy) <= tol &&
    Math.abs(a.w - b.w) <= tol &&
    Math.abs(a.h - b.h) <= tol &&
    Math.abs(a.theta - b.theta) <= tol
  );
}
