// Typed client for the kilnaudit HTTP API. All reads return both the parsed
// document and the raw body so dashboards can show values byte-identical to
// the server's JSON.

import { LonLatBBox } from "./geo.js";

export type KilnClassName = "CFCBK" | "FCBK" | "Zigzag";
export type ValidationStateName =
  | "pending"
  | "accepted"
  | "adjusted"
  | "reclassified"
  | "discarded";

export interface KilnFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: number[][][] };
  properties: {
    id: string;
    class: KilnClassName;
    confidence: number;
    state: string;
    validation_state: ValidationStateName;
    theta: number;
    w_m: number;
    h_m: number;
    provenance?: Record<string, string>;
  };
}

export interface KilnPage {
  type: "FeatureCollection";
  features: KilnFeature[];
  total_matched: number;
  next_cursor: string | null;
}

export interface ActionBody {
  action_id: string;
  kind: "accept" | "adjust" | "reclassify" | "discard";
  new_box?: { cx: number; cy: number; w: number; h: number; theta: number };
  new_class?: KilnClassName;
  actor?: string;
}

export interface GridCellFeature {
  properties: { row: number; col: number; status: string };
  geometry: { type: "Polygon"; coordinates: number[][][] };
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "unknown";
  let message = resp.statusText;
  try {
    const body = await resp.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, code, message);
}

export class KilnApi {
  constructor(public baseUrl: string) {}

  private async getJson<T>(path: string): Promise<{ doc: T; raw: string }> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw await parseError(resp);
    const raw = await resp.text();
    return { doc: JSON.parse(raw) as T, raw };
  }

  async listKilns(opts: {
    bbox?: LonLatBBox;
    state?: string;
    kilnClass?: KilnClassName;
    validationState?: ValidationStateName;
    cursor?: string;
    limit?: number;
  } = {}): Promise<KilnPage> {
    const params = new URLSearchParams();
    if (opts.bbox) {
      const { west, south, east, north } = opts.bbox;
      params.set("bbox", `${west},${south},${east},${north}`);
    }
    if (opts.state) params.set("state", opts.state);
    if (opts.kilnClass) params.set("class", opts.kilnClass);
    if (opts.validationState) params.set("validation_state", opts.validationState);
    if (opts.cursor) params.set("cursor", opts.cursor);
    if (opts.limit) params.set("limit", String(opts.limit));
    const qs = params.toString();
    return (await this.getJson<KilnPage>(`/api/kilns${qs ? "?" + qs : ""}`)).doc;
  }

  async postAction(kilnId: string, action: ActionBody): Promise<{ applied: boolean; record: KilnFeature }> {
    const resp = await fetch(`${this.baseUrl}/api/kilns/${encodeURIComponent(kilnId)}/action`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(action),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as { applied: boolean; record: KilnFeature };
  }

  async grid(): Promise<{ features: GridCellFeature[] }> {
    return (await this.getJson<{ features: GridCellFeature[] }>("/api/grid")).doc;
  }

  async setCellStatus(row: number, col: number, status: string): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/api/grid/${row}/${col}/status`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ status }),
    });
    if (!resp.ok) throw await parseError(resp);
  }

  async progress(): Promise<Record<string, number>> {
    return (await this.getJson<Record<string, number>>("/api/progress")).doc;
  }

  async report(kind: "compliance" | "emissions" | "exposure", query = ""): Promise<{ doc: any; raw: string }> {
    return this.getJson<any>(`/api/reports/${kind}${query}`);
  }

  tileUrl(z: number, x: number, y: number): string {
    return `${this.baseUrl}/tiles/${z}/${x}/${y}`;
  }
}
