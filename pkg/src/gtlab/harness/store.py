"""Stimulus manifests and durable session state.

Sessions persist as append-only JSONL files, one per session, one record per
event (``plan``, ``response``, ``evaluation``).  Every mutation is written
and flushed *before* the caller gets its acknowledgment, so a crash never
loses an acknowledged response; restarting a store on the same directory
replays the files back into identical state.  The log also embeds each
trial's ground-truth kind, so results can be recomputed from a log alone.

Log records (``"record_format": 1``):

    {"record": "plan", "at": ..., "session_id": ..., "n": ..., "seed": ...,
     "alpha": ..., "trials": [{"trial_index", "stimulus_id", "kind"}, ...]}
    {"record": "response", "at": ..., "session_id": ..., "trial_index": ...,
     "choice": ...}
    {"record": "evaluation", "at": ..., "session_id": ..., "n": ...,
     "k_correct": ..., "p_value": ..., "alpha": ..., "verdict": ...}
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..protocol import (
    DEFAULT_ALPHA,
    DEFAULT_TRIALS,
    PlannedTrial,
    SessionRecord,
    Stimulus,
    TestResult,
    TrialPlan,
    evaluate,
    plan_trials,
    record_response,
)
from ..render.imageio import read_image

MANIFEST_FORMAT_VERSION = 1
LOG_RECORD_FORMAT = 1


@dataclass(frozen=True)
class StimulusManifest:
    """The deck of stimuli a service can draw trials from."""

    root: Path
    entries: tuple[Stimulus, ...]
    format_version: int = MANIFEST_FORMAT_VERSION

    def by_id(self) -> dict[str, Stimulus]:
        return {s.id: s for s in self.entries}


def load_manifest(path: str | Path) -> StimulusManifest:
    """Load and validate a manifest: unique ids, files present and decodable."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if doc.get("format_version") != MANIFEST_FORMAT_VERSION:
        raise ValueError(
            f"unsupported manifest format_version {doc.get('format_version')!r}"
        )
    root = Path(doc.get("root", path.parent))
    if not root.is_absolute():
        root = path.parent / root
    seen = set()
    entries = []
    for item in doc["stimuli"]:
        stim_id = item["id"]
        if stim_id in seen:
            raise ValueError(f"duplicate stimulus id {stim_id!r}")
        seen.add(stim_id)
        image_path = root / item["path"]
        read_image(image_path)  # must exist and decode
        ref = item.get("reference")
        reference_path = root / ref if ref else None
        if reference_path is not None:
            read_image(reference_path)
        entries.append(
            Stimulus(
                id=stim_id,
                kind=item["kind"],
                image_path=image_path,
                provenance=item.get("provenance", ""),
                reference_path=reference_path,
            )
        )
    return StimulusManifest(root=root, entries=tuple(entries))


def save_manifest(manifest: StimulusManifest, path: str | Path) -> None:
    path = Path(path)
    doc = {
        "format_version": manifest.format_version,
        # Stored relative to the manifest file so the directory can move (and
        # so a manifest under a relative root reloads from any cwd).
        "root": os.path.relpath(manifest.root, path.parent),
        "stimuli": [
            {
                "id": s.id,
                "kind": s.kind,
                "path": os.path.relpath(s.image_path, manifest.root),
                "provenance": s.provenance,
                **(
                    {"reference": os.path.relpath(s.reference_path, manifest.root)}
                    if s.reference_path
                    else {}
                ),
            }
            for s in manifest.entries
        ],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")


@dataclass
class StoredSession:
    record: SessionRecord
    kinds: dict[str, str]  # stimulus id -> ground truth, as logged
    result: TestResult | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class SessionStore:
    """Sessions backed by per-session JSONL logs under ``log_dir``."""

    def __init__(
        self,
        log_dir: str | Path,
        manifest: StimulusManifest | None = None,
        alpha: float = DEFAULT_ALPHA,
        default_n: int = DEFAULT_TRIALS,
    ) -> None:
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self.alpha = alpha
        self.default_n = default_n
        self._sessions: dict[str, StoredSession] = {}
        self._store_lock = threading.Lock()
        self._replay()

    # -- persistence ------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.log_dir / f"session-{session_id}.jsonl"

    def _append(self, session_id: str, record: dict) -> None:
        record = {"record_format": LOG_RECORD_FORMAT, **record}
        line = json.dumps(record, sort_keys=True)
        with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _replay(self) -> None:
        for path in sorted(self.log_dir.glob("session-*.jsonl")):
            session = _session_from_log(path, default_alpha=self.alpha)
            if session is not None:
                self._sessions[session.record.plan.session_id] = session

    # -- session lifecycle --------------------------------------------------

    def create_session(self, n: int | None = None, seed: int | None = None) -> SessionRecord:
        if self.manifest is None or not self.manifest.entries:
            raise ValueError("store has no stimulus manifest to draw trials from")
        n = self.default_n if n is None else int(n)
        seed = secrets.randbits(63) if seed is None else int(seed)
        pool = list(self.manifest.entries)
        plan = plan_trials(pool, n, seed)
        kinds = {s.id: s.kind for s in pool}
        with self._store_lock:
            if plan.session_id in self._sessions:
                raise ValueError(f"session {plan.session_id} already exists")
            self._append(
                plan.session_id,
                {
                    "record": "plan",
                    "at": time.time(),
                    "session_id": plan.session_id,
                    "n": plan.n,
                    "seed": plan.seed,
                    "alpha": self.alpha,
                    "trials": [
                        {
                            "trial_index": t.trial_index,
                            "stimulus_id": t.stimulus_id,
                            "kind": kinds[t.stimulus_id],
                        }
                        for t in plan.trials
                    ],
                },
            )
            stored = StoredSession(record=SessionRecord(plan=plan), kinds=kinds)
            self._sessions[plan.session_id] = stored
        return stored.record

    def get(self, session_id: str) -> StoredSession:
        with self._store_lock:
            stored = self._sessions.get(session_id)
        if stored is None:
            raise KeyError(f"unknown session {session_id!r}")
        return stored

    def record_response(self, session_id: str, trial_index: int, choice: str) -> SessionRecord:
        stored = self.get(session_id)
        with stored.lock:
            # Validate against in-memory state first so bad requests never
            # reach the log; then log, then mutate (log-then-ack).
            _validate_response(stored.record, trial_index, choice)
            self._append(
                session_id,
                {
                    "record": "response",
                    "at": time.time(),
                    "session_id": session_id,
                    "trial_index": trial_index,
                    "choice": choice,
                },
            )
            record_response(stored.record, trial_index, choice)
        return stored.record

    def result(self, session_id: str) -> TestResult:
        stored = self.get(session_id)
        with stored.lock:
            if stored.result is not None:
                return stored.result
            pool = [
                Stimulus(id=sid, kind=kind, image_path=Path("<logged>"))
                for sid, kind in stored.kinds.items()
            ]
            result = evaluate(stored.record, pool, alpha=self.alpha)
            self._append(
                session_id,
                {
                    "record": "evaluation",
                    "at": time.time(),
                    "session_id": session_id,
                    **result.to_json_dict(),
                },
            )
            stored.result = result
            return result

    def sessions(self) -> list[dict]:
        """Summaries for listing; results only for completed sessions."""
        with self._store_lock:
            stored = list(self._sessions.values())
        out = []
        for s in sorted(stored, key=lambda s: s.record.plan.session_id):
            summary = {
                "session_id": s.record.plan.session_id,
                "n": s.record.plan.n,
                "answered": len(s.record.responses),
                "status": s.record.status,
            }
            if s.record.is_complete:
                result = self.result(s.record.plan.session_id)
                summary.update(result.to_json_dict())
            out.append(summary)
        return out


def _validate_response(record: SessionRecord, trial_index: int, choice: str) -> None:
    """Raise exactly what record_response would, without mutating."""
    probe = SessionRecord(plan=record.plan, responses=dict(record.responses))
    record_response(probe, trial_index, choice)


def _session_from_log(path: Path, default_alpha: float) -> StoredSession | None:
    plan = None
    kinds: dict[str, str] = {}
    responses: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["record"] == "plan":
                trials = tuple(
                    PlannedTrial(t["trial_index"], t["stimulus_id"])
                    for t in rec["trials"]
                )
                kinds = {t["stimulus_id"]: t["kind"] for t in rec["trials"]}
                plan = TrialPlan(
                    session_id=rec["session_id"],
                    trials=trials,
                    seed=rec["seed"],
                    n=rec["n"],
                )
            elif rec["record"] == "response":
                responses.append(rec)
            # evaluation records are derivable; recomputed below
    if plan is None:
        return None
    record = SessionRecord(plan=plan)
    for rec in responses:
        record_response(record, rec["trial_index"], rec["choice"], timestamp=rec["at"])
    return StoredSession(record=record, kinds=kinds)


def analyze_log_dir(log_dir: str | Path, alpha: float = DEFAULT_ALPHA) -> list[dict]:
    """Recompute every session's result straight from its log file.

    Ground truth comes from the plan records, so no manifest is needed.
    Incomplete sessions report status only.
    """
    log_dir = Path(log_dir)
    paths = sorted(log_dir.glob("session-*.jsonl"))
    results = []
    for path in paths:
        stored = _session_from_log(path, default_alpha=alpha)
        if stored is None:
            continue
        record = stored.record
        summary = {
            "session_id": record.plan.session_id,
            "n": record.plan.n,
            "answered": len(record.responses),
            "status": record.status,
            "log_file": str(path),
        }
        if record.is_complete:
            pool = [
                Stimulus(id=sid, kind=kind, image_path=Path("<logged>"))
                for sid, kind in stored.kinds.items()
            ]
            summary.update(evaluate(record, pool, alpha=alpha).to_json_dict())
        results.append(summary)
    return results
