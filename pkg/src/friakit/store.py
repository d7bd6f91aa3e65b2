"""Append-only assessment store with optimistic concurrency.

One file per assessment revision (``<root>/<id>/<revision>.json``), each a
complete canonical assessment document: auditable, diffable, and durable
across restarts without a database. Mutations go through compare-and-set on
the revision number; the loser of a race gets a conflict, never a lost
update.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path
from typing import Optional

from .errors import RevisionConflict
from .model import Assessment, Frozen
from .reporting import export_assessment, import_assessment


class Session(Frozen):
    """A client's handle on one assessment: the token it must present."""

    session_id: str
    assessment_id: str
    revision: int
    lock_owner: str = ""


class DocumentStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock_for(self, assessment_id: str) -> threading.Lock:
        with self._registry_lock:
            if assessment_id not in self._locks:
                self._locks[assessment_id] = threading.Lock()
            return self._locks[assessment_id]

    def _dir(self, assessment_id: str) -> Path:
        return self.root / assessment_id

    def _revision_files(self, assessment_id: str) -> list[Path]:
        directory = self._dir(assessment_id)
        if not directory.is_dir():
            return []
        return sorted(directory.glob("[0-9]*.json"))

    def _write_revision(self, assessment: Assessment, revision: int) -> None:
        directory = self._dir(assessment.id)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / f"{revision:06d}.json"
        temp = directory / f".{uuid.uuid4().hex}.tmp"
        temp.write_bytes(export_assessment(assessment))
        temp.replace(target)

    # -- public surface ------------------------------------------------------

    def list_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def exists(self, assessment_id: str) -> bool:
        return bool(self._revision_files(assessment_id))

    def create(self, assessment: Assessment) -> int:
        with self._lock_for(assessment.id):
            if self.exists(assessment.id):
                raise FileExistsError(f"assessment {assessment.id!r} already exists")
            self._write_revision(assessment, 1)
            return 1

    def latest_revision(self, assessment_id: str) -> int:
        files = self._revision_files(assessment_id)
        if not files:
            raise KeyError(assessment_id)
        return int(files[-1].stem)

    def get(self, assessment_id: str, revision: Optional[int] = None) -> tuple[Assessment, int]:
        files = self._revision_files(assessment_id)
        if not files:
            raise KeyError(assessment_id)
        if revision is None:
            path = files[-1]
        else:
            path = self._dir(assessment_id) / f"{revision:06d}.json"
            if not path.exists():
                raise KeyError(f"{assessment_id}@{revision}")
        return import_assessment(path.read_bytes()), int(path.stem)

    def compare_and_set(
        self, assessment_id: str, expected_revision: int, assessment: Assessment
    ) -> int:
        """Append the next revision iff the caller saw the latest one."""
        with self._lock_for(assessment_id):
            current = self.latest_revision(assessment_id)
            if current != expected_revision:
                raise RevisionConflict(current, expected_revision)
            next_revision = current + 1
            self._write_revision(assessment, next_revision)
            return next_revision

    def open_session(self, assessment_id: str, owner: str = "") -> Session:
        return Session(
            session_id=uuid.uuid4().hex,
            assessment_id=assessment_id,
            revision=self.latest_revision(assessment_id),
            lock_owner=owner,
        )

    def history(self, assessment_id: str) -> list[int]:
        return [int(p.stem) for p in self._revision_files(assessment_id)]
