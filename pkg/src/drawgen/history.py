"""Append-only versioned store of diagram snapshots.

Every chat round, import or restore appends a new entry; nothing is ever
rewritten. Stores can be bound to a directory, in which case every append
is written through: one XML file per snapshot plus a JSON manifest that
is swapped atomically, so an interrupted write leaves a loadable prefix.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .model import Diagram, diff
from .xml_codec import check_wellformed, parse, serialize

MANIFEST_NAME = "manifest.json"


class StorageError(Exception):
    pass


class UnknownVersion(LookupError):
    pass


class CorruptManifest(Exception):
    def __init__(self, message: str, missing: list[int] | None = None) -> None:
        super().__init__(message)
        self.missing = missing or []


class Origin(Enum):
    USER_PROMPT = "user_prompt"
    RESTORE = "restore"
    IMPORT = "import"


@dataclass(frozen=True)
class HistoryEntry:
    version: int
    parent_version: int | None
    timestamp: datetime
    xml_snapshot: str
    summary: str
    origin: Origin


def _snapshot_name(version: int) -> str:
    return f"v{version}.drawio.xml"


def _count(n: int, singular: str, plural: str) -> str:
    return f"{n} {singular if n == 1 else plural}"


def summarize_change(old: Diagram, new: Diagram) -> str:
    """Human-readable change summary, e.g. "+2 vertices, +1 edge, -1 vertex".

    Labels are named when at most five cells changed.
    """
    delta = diff(old, new)
    old_by_id = {c.id: c for c in old.cells}
    new_by_id = {c.id: c for c in new.cells}

    parts: list[str] = []
    added_v = [new_by_id[i] for i in delta.added if new_by_id[i].kind.value == "vertex"]
    added_e = [new_by_id[i] for i in delta.added if new_by_id[i].kind.value == "edge"]
    removed_v = [old_by_id[i] for i in delta.removed if old_by_id[i].kind.value == "vertex"]
    removed_e = [old_by_id[i] for i in delta.removed if old_by_id[i].kind.value == "edge"]
    if added_v:
        parts.append(f"+{_count(len(added_v), 'vertex', 'vertices')}")
    if added_e:
        parts.append(f"+{_count(len(added_e), 'edge', 'edges')}")
    if removed_v:
        parts.append(f"-{_count(len(removed_v), 'vertex', 'vertices')}")
    if removed_e:
        parts.append(f"-{_count(len(removed_e), 'edge', 'edges')}")
    if delta.relabeled:
        parts.append(f"{len(delta.relabeled)} relabeled")
    if delta.moved:
        parts.append(f"{len(delta.moved)} moved")
    if not parts:
        return "no changes"

    summary = ", ".join(parts)
    changed = len(delta.added) + len(delta.removed) + len(delta.relabeled) + len(delta.moved)
    if changed <= 5:
        clauses = []
        added_labels = [c.label for c in added_v if c.label]
        removed_labels = [c.label for c in removed_v if c.label]
        if added_labels:
            clauses.append("added: " + ", ".join(added_labels))
        if removed_labels:
            clauses.append("removed: " + ", ".join(removed_labels))
        if delta.relabeled:
            clauses.append(
                "relabeled: " + ", ".join(f"{a} to {b}" for _, a, b in delta.relabeled)
            )
        if clauses:
            summary += f" ({'; '.join(clauses)})"
    return summary


class HistoryStore:
    """Linear, append-only history. Writers are serialized; readers can run
    concurrently and always see a consistent prefix."""

    def __init__(self, directory: str | Path | None = None) -> None:
        self._entries: list[HistoryEntry] = []
        self._lock = threading.Lock()
        self._directory: Path | None = None
        if directory is not None:
            self._directory = Path(directory)
            try:
                self._directory.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StorageError(f"cannot create history directory: {exc}") from exc

    def __len__(self) -> int:
        return len(self._entries)

    def entry(self, version: int) -> HistoryEntry:
        with self._lock:
            if not 0 <= version < len(self._entries):
                raise UnknownVersion(version)
            return self._entries[version]

    def head(self) -> HistoryEntry | None:
        with self._lock:
            return self._entries[-1] if self._entries else None

    def log(self) -> list[tuple[int, datetime, str, Origin]]:
        with self._lock:
            return [(e.version, e.timestamp, e.summary, e.origin) for e in self._entries]

    def append(self, d: Diagram, summary: str = "", origin: Origin = Origin.USER_PROMPT) -> int:
        xml = serialize(d)
        with self._lock:
            version = len(self._entries)
            if not summary:
                if version == 0:
                    summary = "initial version"
                else:
                    summary = summarize_change(parse(self._entries[-1].xml_snapshot), d)
            entry = HistoryEntry(
                version=version,
                parent_version=version - 1 if version else None,
                timestamp=datetime.now(timezone.utc),
                xml_snapshot=xml,
                summary=summary,
                origin=origin,
            )
            self._commit(entry)
            return version

    def restore(self, version: int) -> int:
        """Append a new head whose snapshot equals the target's; history is
        never truncated."""
        with self._lock:
            if not 0 <= version < len(self._entries):
                raise UnknownVersion(version)
            target = self._entries[version]
            head = len(self._entries) - 1
            summary = f"restored version {version}"
            if target.xml_snapshot == self._entries[head].xml_snapshot:
                summary += " (no changes)"
            entry = HistoryEntry(
                version=len(self._entries),
                parent_version=version,
                timestamp=datetime.now(timezone.utc),
                xml_snapshot=target.xml_snapshot,
                summary=summary,
                origin=Origin.RESTORE,
            )
            self._commit(entry)
            return entry.version

    def _commit(self, entry: HistoryEntry) -> None:
        # Snapshot file first, manifest swap last: a crash in between leaves
        # the previous manifest pointing at a complete prefix.
        if self._directory is not None:
            try:
                path = self._directory / _snapshot_name(entry.version)
                path.write_text(entry.xml_snapshot, encoding="utf-8")
                self._write_manifest(self._entries + [entry])
            except OSError as exc:
                raise StorageError(f"failed to persist version {entry.version}: {exc}") from exc
        self._entries.append(entry)

    def _write_manifest(self, entries: list[HistoryEntry]) -> None:
        manifest = {
            "format_version": 1,
            "entries": [
                {
                    "version": e.version,
                    "parent_version": e.parent_version,
                    "timestamp": e.timestamp.isoformat(),
                    "summary": e.summary,
                    "origin": e.origin.value,
                    "file": _snapshot_name(e.version),
                }
                for e in entries
            ],
        }
        assert self._directory is not None
        tmp = self._directory / (MANIFEST_NAME + ".tmp")
        tmp.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        os.replace(tmp, self._directory / MANIFEST_NAME)

    def persist(self, directory: str | Path) -> None:
        """Bind the store to a directory and flush every entry to disk."""
        target = Path(directory)
        try:
            target.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create history directory: {exc}") from exc
        with self._lock:
            self._directory = target
            try:
                for entry in self._entries:
                    path = target / _snapshot_name(entry.version)
                    path.write_text(entry.xml_snapshot, encoding="utf-8")
                self._write_manifest(self._entries)
            except OSError as exc:
                raise StorageError(f"failed to persist store: {exc}") from exc

    @classmethod
    def load(cls, directory: str | Path) -> "HistoryStore":
        """Load a persisted store; refuses gapped or partial stores."""
        store = cls(directory)
        manifest_path = store._directory / MANIFEST_NAME  # type: ignore[operator]
        if not manifest_path.exists():
            return store  # empty directory -> empty store
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptManifest(f"unreadable manifest: {exc}") from exc
        raw_entries = manifest.get("entries")
        if not isinstance(raw_entries, list):
            raise CorruptManifest("manifest has no entries list")

        entries: list[HistoryEntry] = []
        missing: list[int] = []
        for expected, item in enumerate(raw_entries):
            try:
                version = int(item["version"])
                if version != expected:
                    raise CorruptManifest(
                        f"versions are not consecutive at position {expected}"
                    )
                snapshot_path = store._directory / item["file"]  # type: ignore[operator]
                if not snapshot_path.exists():
                    missing.append(version)
                    continue
                xml = snapshot_path.read_text(encoding="utf-8")
                if check_wellformed(xml):
                    missing.append(version)
                    continue
                parent = item["parent_version"]
                entries.append(
                    HistoryEntry(
                        version=version,
                        parent_version=None if parent is None else int(parent),
                        timestamp=datetime.fromisoformat(item["timestamp"]),
                        xml_snapshot=xml,
                        summary=str(item["summary"]),
                        origin=Origin(item["origin"]),
                    )
                )
            except CorruptManifest:
                raise
            except (KeyError, TypeError, ValueError, OSError) as exc:
                raise CorruptManifest(f"bad manifest entry {expected}: {exc}") from exc
        if missing:
            raise CorruptManifest(
                "missing or corrupt snapshots for versions: "
                + ", ".join(str(v) for v in missing),
                missing=missing,
            )
        store._entries = entries
        return store
