"""Hand-validation workflow: accept / adjust / reclassify / discard actions
over the kiln dataset, persisted as an append-only action log plus periodic
snapshots. Replaying the log from the initial dataset reproduces the current
state exactly."""

from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, WorkflowError
from .ingest import (
    KilnRecord,
    ValidationState,
    kiln_dataset_to_geojson,
    kiln_to_feature,
    read_kiln_dataset,
)
from .obb import FRAME_MERCATOR, KilnClass, OrientedBox


class ActionKind(str, enum.Enum):
    ACCEPT = "accept"
    ADJUST = "adjust"
    RECLASSIFY = "reclassify"
    DISCARD = "discard"


_STATE_AFTER = {
    ActionKind.ACCEPT: ValidationState.ACCEPTED,
    ActionKind.ADJUST: ValidationState.ADJUSTED,
    ActionKind.RECLASSIFY: ValidationState.RECLASSIFIED,
    ActionKind.DISCARD: ValidationState.DISCARDED,
}


@dataclass(frozen=True)
class ValidationAction:
    action_id: str
    kiln_id: str
    kind: ActionKind
    new_box: OrientedBox | None = None  # adjust only
    new_class: KilnClass | None = None  # reclassify only
    actor: str = ""
    timestamp: str = ""

    def __post_init__(self):
        kind = ActionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ActionKind.ADJUST:
            if self.new_box is None:
                raise WorkflowError("bad_action", "adjust needs a replacement box")
            if self.new_box.frame != FRAME_MERCATOR:
                raise WorkflowError("bad_action", "adjusted boxes live in Mercator meters")
        elif self.new_box is not None:
            raise WorkflowError("bad_action", f"{kind.value} does not take a box")
        if kind is ActionKind.RECLASSIFY:
            if self.new_class is None:
                raise WorkflowError("bad_action", "reclassify needs a class")
            object.__setattr__(self, "new_class", KilnClass(self.new_class))
        elif self.new_class is not None:
            raise WorkflowError("bad_action", f"{kind.value} does not take a class")

    def to_dict(self) -> dict:
        d = {
            "action_id": self.action_id,
            "kiln_id": self.kiln_id,
            "kind": self.kind.value,
        }
        if self.new_box is not None:
            b = self.new_box
            d["new_box"] = {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "theta": b.theta}
        if self.new_class is not None:
            d["new_class"] = self.new_class.value
        if self.actor:
            d["actor"] = self.actor
        if self.timestamp:
            d["timestamp"] = self.timestamp
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationAction":
        box = None
        if "new_box" in d:
            nb = d["new_box"]
            box = OrientedBox(nb["cx"], nb["cy"], nb["w"], nb["h"], nb["theta"])
        return cls(
            action_id=d["action_id"],
            kiln_id=d["kiln_id"],
            kind=ActionKind(d["kind"]),
            new_box=box,
            new_class=KilnClass(d["new_class"]) if "new_class" in d else None,
            actor=d.get("actor", ""),
            timestamp=d.get("timestamp", ""),
        )


def apply_validation(records: dict, action: ValidationAction) -> KilnRecord:
    """Apply one action to the id-keyed record map, in place. Raises
    WorkflowError (and changes nothing) for unknown kilns or any action on a
    discarded kiln."""
    rec = records.get(action.kiln_id)
    if rec is None:
        raise WorkflowError("unknown_kiln", f"no kiln with id {action.kiln_id!r}")
    if rec.discarded:
        raise WorkflowError(
            "invalid_transition", f"kiln {rec.id} is discarded; discard is terminal"
        )
    if action.kind is ActionKind.ADJUST:
        rec.box = action.new_box
    elif action.kind is ActionKind.RECLASSIFY:
        rec.kiln_class = action.new_class
    rec.validation_state = _STATE_AFTER[action.kind]
    if action.timestamp:
        rec.provenance.updated = action.timestamp
    return rec


SNAPSHOT_EVERY = 100


class KilnStore:
    """Durable kiln dataset.

    Layout inside the workspace directory:
      kilns.geojson  snapshot (atomic rename), carries `applied_actions`
      actions.log    JSON lines, one acknowledged action per line, fsynced
                     before the action is applied or acknowledged

    Recovery loads the snapshot and replays any log records past its
    `applied_actions` mark. A torn final log line (crash mid-append) is
    ignored; it was never acknowledged. Retried action ids return the
    original outcome without a second log entry.
    """

    def __init__(self, workspace, snapshot_every: int = SNAPSHOT_EVERY):
        self.workspace = Path(workspace)
        self.snapshot_path = self.workspace / "kilns.geojson"
        self.log_path = self.workspace / "actions.log"
        self.snapshot_every = snapshot_every
        self.records: dict[str, KilnRecord] = {}
        self._results: dict[str, dict] = {}  # action_id -> feature after apply
        self._log_count = 0
        self._applied_in_snapshot = 0
        self._lock = threading.Lock()
        self._load()

    # -- recovery ----------------------------------------------------------

    def _load(self) -> None:
        if self.snapshot_path.exists():
            doc = json.loads(self.snapshot_path.read_text())
            self._applied_in_snapshot = int(doc.get("applied_actions", 0))
            records = read_kiln_dataset(json.dumps(doc))
        else:
            self._applied_in_snapshot = 0
            records = []
        self.records = {r.id: r for r in records}
        actions = self._read_log()
        self._log_count = len(actions)
        for i, action in enumerate(actions):
            if i >= self._applied_in_snapshot:
                apply_validation(self.records, action)
            rec = self.records.get(action.kiln_id)
            # after recovery a retried id returns the kiln's current feature
            self._results[action.action_id] = (
                kiln_to_feature(rec) if rec is not None else None
            )

    def _read_log(self) -> list[ValidationAction]:
        if not self.log_path.exists():
            return []
        raw = self.log_path.read_text()
        if raw and not raw.endswith("\n"):
            # torn tail from a crash mid-append; the action was never
            # acknowledged. Physically truncate so later appends stay framed.
            keep = raw.rfind("\n") + 1
            with open(self.log_path, "r+", encoding="utf-8") as f:
                f.truncate(keep)
            raw = raw[:keep]
        actions = []
        for i, line in enumerate(raw.splitlines()):
            if not line.strip():
                continue
            try:
                actions.append(ValidationAction.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, WorkflowError):
                raise ParseError(f"corrupt action log at line {i + 1}") from None
        return actions

    # -- mutation ----------------------------------------------------------

    def seed(self, records) -> None:
        """Install the initial dataset (pre-validation model output) and
        write the first snapshot. Only valid on an empty store."""
        with self._lock:
            if self.records or self._log_count:
                raise WorkflowError("already_seeded", "store already holds data")
            self.records = {r.id: r for r in records}
            self._write_snapshot()

    def apply(self, action: ValidationAction) -> tuple[dict, bool]:
        """Apply an action; returns (feature-after, fresh). Retries of an
        already-logged action id return the original result with fresh=False
        and add no log entry."""
        with self._lock:
            if action.action_id in self._results:
                return self._results[action.action_id], False
            rec = self.records.get(action.kiln_id)
            if rec is None:
                raise WorkflowError("unknown_kiln", f"no kiln with id {action.kiln_id!r}")
            if rec.discarded:
                raise WorkflowError(
                    "invalid_transition",
                    f"kiln {rec.id} is discarded; discard is terminal",
                )
            self._append_log(action)  # write-ahead: log before mutating
            apply_validation(self.records, action)
            outcome = kiln_to_feature(self.records[action.kiln_id])
            self._results[action.action_id] = outcome
            self._log_count += 1
            if self._log_count - self._applied_in_snapshot >= self.snapshot_every:
                self._write_snapshot()
            return outcome, True

    def _append_log(self, action: ValidationAction) -> None:
        line = json.dumps(action.to_dict(), sort_keys=True)
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()
            os.fsync(f.fileno())

    def _write_snapshot(self) -> None:
        doc = kiln_dataset_to_geojson(self.records.values())
        doc["applied_actions"] = self._log_count
        tmp = self.snapshot_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.snapshot_path)
        self._applied_in_snapshot = self._log_count

    def checkpoint(self) -> None:
        with self._lock:
            self._write_snapshot()

    # -- queries -----------------------------------------------------------

    def progress(self) -> dict:
        counts = {state.value: 0 for state in ValidationState}
        for rec in self.records.values():
            counts[rec.validation_state.value] += 1
        counts["total"] = len(self.records)
        return counts
