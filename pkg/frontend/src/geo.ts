// Web Mercator math shared by the map view and the OBB overlay. Matches the
// service's conventions: EPSG:3857 sphere radius, 256px tiles.

export const MERCATOR_RADIUS = 6378137.0;
export const MERCATOR_BOUND = Math.PI * MERCATOR_RADIUS;
export const TILE_SIZE = 256;

export interface LonLat {
  lon: number;
  lat: number;
}

export interface MercatorXY {
  x: number;
  y: number;
}

export function lonLatToMercator(p: LonLat): MercatorXY {
  const x = MERCATOR_RADIUS * (p.lon * Math.PI) / 180;
  const y = MERCATOR_RADIUS * Math.atanh(Math.sin((p.lat * Math.PI) / 180));
  return { x, y };
}

export function mercatorToLonLat(m: MercatorXY): LonLat {
  const lon = (m.x / MERCATOR_RADIUS) * (180 / Math.PI);
  const lat = (Math.asin(Math.tanh(m.y / MERCATOR_RADIUS)) * 180) / Math.PI;
  return { lon, lat };
}

/** Mercator-plane meters per CSS pixel at a zoom level (uniform across the
 * projected plane; the ground scale varies with latitude instead). */
export function metersPerPixel(zoom: number): number {
  return (2 * MERCATOR_BOUND) / (TILE_SIZE * Math.pow(2, zoom));
}

export interface Viewport {
  center: MercatorXY;
  zoom: number;
  widthPx: number;
  heightPx: number;
}

export function mercatorToScreen(m: MercatorXY, vp: Viewport): [number, number] {
  const res = metersPerPixel(vp.zoom);
  return [
    vp.widthPx / 2 + (m.x - vp.center.x) / res,
    vp.heightPx / 2 - (m.y - vp.center.y) / res,
  ];
}

export function screenToMercator(px: number, py: number, vp: Viewport): MercatorXY {
  const res = metersPerPixel(vp.zoom);
  return {
    x: vp.center.x + (px - vp.widthPx / 2) * res,
    y: vp.center.y - (py - vp.heightPx / 2) * res,
  };
}

export interface LonLatBBox {
  west: number;
  south: number;
  east: number;
  north: number;
}

export function viewportBBox(vp: Viewport): LonLatBBox {
  const tl = mercatorToLonLat(screenToMercator(0, 0, vp));
  const br = mercatorToLonLat(screenToMercator(vp.widthPx, vp.heightPx, vp));
  return { west: tl.lon, south: br.lat, east: br.lon, north: tl.lat };
}

/** Slippy tile indices covering a viewport at its integer zoom. */
export function tilesForViewport(vp: Viewport): Array<{ z: number; x: number; y: number }> {
  const z = Math.round(vp.zoom);
  const n = Math.pow(2, z);
  const world = 2 * MERCATOR_BOUND;
  const toTileX = (mx: number) => Math.floor(((mx + MERCATOR_BOUND) / world) * n);
  const toTileY = (my: number) => Math.floor(((MERCATOR_BOUND - my) / world) * n);
  const tl = screenToMercator(0, 0, vp);
  const br = screenToMercator(vp.widthPx, vp.heightPx, vp);
  const tiles: Array<{ z: number; x: number; y: number }> = [];
  for (let ty = Math.max(0, toTileY(tl.y)); ty <= Math.min(n - 1, toTileY(br.y)); ty++) {
    for (let tx = Math.max(0, toTileX(tl.x)); tx <= Math.min(n - 1, toTileX(br.x)); tx++) {
      tiles.push({ z, x: tx, y: ty });
    }
  }
  return tiles;
}
