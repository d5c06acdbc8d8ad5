// Console state and the validation workflow controller. The DOM layer only
// renders what this module holds, so the whole loop is testable headless:
// visible state is a pure function of (server data, ViewState).

import {
  ActionBody,
  ApiError,
  KilnClassName,
  KilnFeature,
  KilnPage,
  ValidationStateName,
} from "./api.js";
import { LonLatBBox, Viewport, lonLatToMercator, viewportBBox } from "./geo.js";
import { OrientedBox, boxFromRecord } from "./obb.js";

/** The slice of the HTTP client the console needs; KilnApi satisfies it and
 * tests can substitute a stub. */
export interface ConsoleApi {
  listKilns(opts?: {
    bbox?: LonLatBBox;
    cursor?: string;
    limit?: number;
  }): Promise<KilnPage>;
  postAction(
    kilnId: string,
    action: ActionBody,
  ): Promise<{ applied: boolean; record: KilnFeature }>;
  setCellStatus(row: number, col: number, status: string): Promise<void>;
}

export interface KilnView {
  id: string;
  kilnClass: KilnClassName;
  confidence: number;
  state: string;
  validationState: ValidationStateName;
  box: OrientedBox;
  feature: KilnFeature;
}

export function kilnViewFromFeature(f: KilnFeature): KilnView {
  const ring = f.geometry.coordinates[0].map(([lon, lat]) =>
    lonLatToMercator({ lon, lat }),
  );
  return {
    id: f.properties.id,
    kilnClass: f.properties.class,
    confidence: f.properties.confidence,
    state: f.properties.state,
    validationState: f.properties.validation_state,
    box: boxFromRecord(ring, f.properties.w_m, f.properties.h_m, f.properties.theta),
    feature: f,
  };
}

export interface Filter {
  kilnClass: KilnClassName | null;
  validationState: ValidationStateName | null;
  showDiscarded: boolean;
}

export interface EditSession {
  kilnId: string;
  original: OrientedBox;
  box: OrientedBox;
}

export interface ViewState {
  viewport: Viewport;
  activeCell: { row: number; col: number } | null;
  selectedId: string | null;
  filter: Filter;
  edit: EditSession | null;
  lastError: { code: string; message: string } | null;
}

let actionCounter = 0;

/** Client-generated idempotency key; retries of the same logical action
 * reuse the same id. */
export function newActionId(prefix = "ui"): string {
  actionCounter += 1;
  return `${prefix}-${Date.now().toString(36)}-${actionCounter}`;
}

export class Console {
  kilns = new Map<string, KilnView>();
  view: ViewState;

  constructor(
    public api: ConsoleApi,
    viewport: Viewport,
  ) {
    this.view = {
      viewport,
      activeCell: null,
      selectedId: null,
      filter: { kilnClass: null, validationState: null, showDiscarded: false },
      edit: null,
      lastError: null,
    };
  }

  /** Fetch every kiln intersecting the current viewport (paged). */
  async refresh(): Promise<void> {
    const bbox = viewportBBox(this.view.viewport);
    this.kilns.clear();
    let cursor: string | undefined;
    do {
      const page = await this.api.listKilns({ bbox, cursor, limit: 500 });
      for (const f of page.features) {
        const view = kilnViewFromFeature(f);
        this.kilns.set(view.id, view);
      }
      cursor = page.next_cursor ?? undefined;
    } while (cursor);
  }

  /** Kilns the overlay draws, in id order, after filters. Discarded records
   * are hidden unless explicitly requested. */
  visibleKilns(): KilnView[] {
    const { filter } = this.view;
    return [...this.kilns.values()]
      .filter((k) => {
        if (!filter.showDiscarded && k.validationState === "discarded") return false;
        if (filter.kilnClass && k.kilnClass !== filter.kilnClass) return false;
        if (filter.validationState && k.validationState !== filter.validationState)
          return false;
        return true;
      })
      .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  }

  pendingKilns(): KilnView[] {
    return this.visibleKilns().filter((k) => k.validationState === "pending");
  }

  select(id: string | null): void {
    if (this.view.edit) return; // finish or cancel the edit first
    this.view.selectedId = id;
  }

  selected(): KilnView | null {
    return this.view.selectedId ? this.kilns.get(this.view.selectedId) ?? null : null;
  }

  // -- edit session ---------------------------------------------------------

  beginEdit(): EditSession {
    const kiln = this.selected();
    if (!kiln) throw new Error("no kiln selected");
    if (this.view.edit) throw new Error("another kiln is already in edit mode");
    this.view.edit = { kilnId: kiln.id, original: kiln.box, box: kiln.box };
    return this.view.edit;
  }

  updateEdit(box: OrientedBox): void {
    if (!this.view.edit) throw new Error("no edit in progress");
    this.view.edit = { ...this.view.edit, box };
  }

  cancelEdit(): void {
    this.view.edit = null;
  }

  /** Unsaved edits block completing the active grid cell. */
  canCompleteCell(): boolean {
    return this.view.edit === null;
  }

  // -- validation actions ---------------------------------------------------

  private async apply(kilnId: string, action: ActionBody): Promise<KilnView> {
    try {
      const { record } = await this.api.postAction(kilnId, action);
      const view = kilnViewFromFeature(record);
      this.kilns.set(view.id, view);
      this.view.lastError = null;
      return view;
    } catch (err) {
      if (err instanceof ApiError) {
        // surface conflicts without touching local state; the caller
        // refetches to resolve
        this.view.lastError = { code: err.code, message: err.message };
      }
      throw err;
    }
  }

  async acceptSelected(): Promise<KilnView> {
    const kiln = this.requireSelected();
    return this.apply(kiln.id, { action_id: newActionId(), kind: "accept" });
  }

  async discardSelected(): Promise<KilnView> {
    const kiln = this.requireSelected();
    const view = await this.apply(kiln.id, {
      action_id: newActionId(),
      kind: "discard",
    });
    this.view.selectedId = null;
    return view;
  }

  async reclassifySelected(newClass: KilnClassName): Promise<KilnView> {
    const kiln = this.requireSelected();
    return this.apply(kiln.id, {
      action_id: newActionId(),
      kind: "reclassify",
      new_class: newClass,
    });
  }

  /** Commit the staged geometry as an adjust action. */
  async commitEdit(): Promise<KilnView> {
    const edit = this.view.edit;
    if (!edit) throw new Error("no edit in progress");
    const b = edit.box;
    const view = await this.apply(edit.kilnId, {
      action_id: newActionId(),
      kind: "adjust",
      new_box: { cx: b.cx, cy: b.cy, w: b.w, h: b.h, theta: b.theta },
    });
    this.view.edit = null;
    return view;
  }

  private requireSelected(): KilnView {
    const kiln = this.selected();
    if (!kiln) throw new Error("no kiln selected");
    return kiln;
  }

  // -- grid sweep -----------------------------------------------------------

  async completeActiveCell(): Promise<void> {
    if (!this.view.activeCell) throw new Error("no active cell");
    if (!this.canCompleteCell())
      throw new Error("unsaved edit in progress; save or cancel it first");
    const { row, col } = this.view.activeCell;
    await this.api.setCellStatus(row, col, "done");
  }
}
