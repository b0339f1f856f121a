"""Application audit log: parsing, normalization, indexing, field-op expansion.

The log is JSONL, one operation per line, with exactly the fields
``{ts, op, key, user, old_value, new_value}``. It is the declared history of
the database; reconciliation treats it as the claim to be verified, never as
ground truth.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import IO, Any, Iterable, Iterator, Mapping

from .canon import CanonicalValue, canon, canon_document
from .errors import AuditLogError, CanonError

log = logging.getLogger(__name__)

OP_INSERT = "insert"
OP_DELETE = "delete"
OP_UPDATE = "update"
OP_UPDATE_FIELDS = "update_fields"
OP_DELETE_FIELDS = "delete_fields"
OPS = (OP_INSERT, OP_DELETE, OP_UPDATE, OP_UPDATE_FIELDS, OP_DELETE_FIELDS)

LOG_FIELDS = ("ts", "op", "key", "user", "old_value", "new_value")

# Field-level ops collapse into the update class once expanded.
_OP_CLASS = {
    OP_INSERT: "insert",
    OP_DELETE: "delete",
    OP_UPDATE: "update",
    OP_UPDATE_FIELDS: "update",
    OP_DELETE_FIELDS: "update",
}


def op_class(op: str) -> str:
    """Collapse the five op tokens into the three lookup classes."""
    return _OP_CLASS[op]


@dataclass(frozen=True)
class AuditEntry:
    """One normalized audit log line.

    ts is epoch seconds regardless of the wire encoding; seq is the 0-based
    line number in the source stream (provenance only). field_level marks
    entries synthesized by expand_field_ops from update_fields/delete_fields,
    so matches through them can be labeled "authorized (field-level)".
    """

    ts: int
    op: str
    key: str
    user: str
    old_value: CanonicalValue | None
    new_value: CanonicalValue | None
    seq: int
    field_level: bool = False

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "ts": self.ts,
            "op": self.op,
            "key": self.key,
            "user": self.user,
            "old_value": None if self.old_value is None else self.old_value.to_json_obj(),
            "new_value": None if self.new_value is None else self.new_value.to_json_obj(),
        }


def _normalize_ts(raw: Any, line_no: int) -> int:
    if isinstance(raw, bool):
        raise AuditLogError("ts must be epoch seconds or an RFC3339 string", line_no)
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float):
        return int(raw)
    if isinstance(raw, str):
        text = raw.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise AuditLogError(f"unparseable ts {raw!r}: {exc}", line_no) from exc
        if dt.tzinfo is None:
            raise AuditLogError(
                f"ts {raw!r} has no UTC offset; RFC3339 requires one", line_no
            )
        return int(dt.astimezone(timezone.utc).timestamp())
    raise AuditLogError(f"ts has unsupported type {type(raw).__name__}", line_no)


def _iter_lines(raw: bytes | str | IO[bytes] | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(raw, bytes):
        yield from raw.decode("utf-8").splitlines()
    elif isinstance(raw, str):
        yield from raw.splitlines()
    else:
        for line in raw:
            if isinstance(line, bytes):
                line = line.decode("utf-8")
            yield line.rstrip("\r\n")


def _require_absent(obj: dict, field: str, op: str, line_no: int) -> None:
    if obj.get(field) is not None:
        raise AuditLogError(f"{op} entry must not carry {field}", line_no)


def _require_present(obj: dict, field: str, op: str, line_no: int) -> Any:
    value = obj.get(field)
    if value is None:
        raise AuditLogError(f"{op} entry requires {field}", line_no)
    return value


def parse_audit_log(
    raw: bytes | str | IO[bytes] | IO[str] | Iterable[str],
    *,
    strict_ts: bool = False,
    fold_keys: bool = False,
) -> list[AuditEntry]:
    """Parse a JSONL audit log into normalized entries, in file order.

    Each non-empty line must be a standalone JSON object with exactly the six
    schema fields. Values pass through canon (serialized document strings are
    promoted to documents). Timestamps must be non-decreasing; violations warn
    by default and raise when strict_ts is set. seq is the 0-based line index.

    Raises AuditLogError with the offending 1-based line number on malformed
    lines, unknown op tokens, or shape violations.
    """
    entries: list[AuditEntry] = []
    prev_ts: int | None = None
    for idx, line in enumerate(_iter_lines(raw)):
        line_no = idx + 1
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AuditLogError(f"invalid JSON: {exc.msg} (col {exc.colno})", line_no) from exc
        if not isinstance(obj, dict):
            raise AuditLogError("line is not a JSON object", line_no)
        unknown = set(obj) - set(LOG_FIELDS)
        if unknown:
            raise AuditLogError(f"unknown fields {sorted(unknown)}", line_no)
        for field in ("ts", "op", "key", "user"):
            if field not in obj:
                raise AuditLogError(f"missing field {field!r}", line_no)

        op = obj["op"]
        if op not in OPS:
            raise AuditLogError(f"unknown op token {op!r}", line_no)
        if not isinstance(obj["key"], str):
            raise AuditLogError("key must be a string", line_no)
        if not isinstance(obj["user"], str):
            raise AuditLogError("user must be a string", line_no)

        ts = _normalize_ts(obj["ts"], line_no)
        if prev_ts is not None and ts < prev_ts:
            msg = f"line {line_no}: ts {ts} precedes previous entry ts {prev_ts}"
            if strict_ts:
                raise AuditLogError(
                    f"ts {ts} precedes previous entry ts {prev_ts}", line_no
                )
            log.warning("non-monotone audit log timestamp: %s", msg)
        prev_ts = max(ts, prev_ts) if prev_ts is not None else ts

        old_raw: Any = None
        new_raw: Any = None
        if op == OP_INSERT:
            new_raw = _require_present(obj, "new_value", op, line_no)
            _require_absent(obj, "old_value", op, line_no)
        elif op == OP_DELETE:
            old_raw = _require_present(obj, "old_value", op, line_no)
            _require_absent(obj, "new_value", op, line_no)
        elif op == OP_UPDATE:
            old_raw = _require_present(obj, "old_value", op, line_no)
            new_raw = _require_present(obj, "new_value", op, line_no)
        elif op == OP_UPDATE_FIELDS:
            new_raw = _require_present(obj, "new_value", op, line_no)
            _require_absent(obj, "old_value", op, line_no)
        else:  # delete_fields
            old_raw = _require_present(obj, "old_value", op, line_no)
            _require_absent(obj, "new_value", op, line_no)

        try:
            old_value = None if old_raw is None else canon(old_raw, fold_keys=fold_keys)
            new_value = None if new_raw is None else canon(new_raw, fold_keys=fold_keys)
        except CanonError as exc:
            raise AuditLogError(str(exc), line_no) from exc

        key = obj["key"].casefold() if fold_keys else obj["key"]
        entries.append(
            AuditEntry(
                ts=ts,
                op=op,
                key=key,
                user=obj["user"],
                old_value=old_value,
                new_value=new_value,
                seq=idx,
            )
        )
    return entries


def serialize_audit_log(entries: Iterable[AuditEntry]) -> str:
    """Dump normalized entries back to JSONL (canonical values, epoch ts)."""
    return "".join(
        json.dumps(e.to_json_obj(), separators=(",", ":"), ensure_ascii=False, sort_keys=True)
        + "\n"
        for e in entries
    )


def expand_field_ops(
    entries: list[AuditEntry],
    base_state: Mapping[str, CanonicalValue | str | dict],
) -> list[AuditEntry]:
    """Rewrite field-level entries as whole-document updates.

    base_state maps each key to its full document before the log begins (the
    workload testbench starts from an empty store, so an empty mapping is the
    common case). The log is replayed in order so that consecutive field-level
    operations on one key compose correctly. update_fields sets the fields in
    its partial document; delete_fields removes the field names listed in its
    old_value. The rewritten entries keep the original seq/ts and are tagged
    field_level=True; everything else passes through unchanged.

    Raises AuditLogError naming the key when a field-level entry touches a key
    whose current document is unknown (reconciliation cannot attribute it).
    """
    state: dict[str, CanonicalValue] = {k: canon(v) for k, v in base_state.items()}
    out: list[AuditEntry] = []
    for entry in entries:
        if entry.op in (OP_INSERT, OP_UPDATE):
            state[entry.key] = entry.new_value  # type: ignore[assignment]
            out.append(entry)
            continue
        if entry.op == OP_DELETE:
            state.pop(entry.key, None)
            out.append(entry)
            continue

        base = state.get(entry.key)
        if base is None:
            raise AuditLogError(
                f"field-level {entry.op} for key {entry.key!r} (seq {entry.seq}) has no "
                f"known base document; supply it via base_state"
            )
        if not base.is_document() or not isinstance(base.parsed(), dict):
            raise AuditLogError(
                f"field-level {entry.op} for key {entry.key!r} targets a non-document value"
            )
        doc = base.parsed()
        if entry.op == OP_UPDATE_FIELDS:
            try:
                patch_cv = canon_document(entry.new_value)
            except CanonError as exc:
                raise AuditLogError(
                    f"update_fields for key {entry.key!r}: {exc}"
                ) from exc
            patch = patch_cv.parsed()
            if not isinstance(patch, dict):
                raise AuditLogError(
                    f"update_fields for key {entry.key!r} requires an object patch"
                )
            doc.update(patch)
        else:  # delete_fields: old_value lists the removed field names
            names = entry.old_value.parsed() if entry.old_value is not None else None
            if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
                raise AuditLogError(
                    f"delete_fields for key {entry.key!r} requires a list of field names"
                )
            for name in names:
                doc.pop(name, None)
        new_cv = canon(doc)
        out.append(
            replace(
                entry,
                op=OP_UPDATE,
                old_value=base,
                new_value=new_cv,
                field_level=True,
            )
        )
        state[entry.key] = new_cv
    return out


class LogIndex:
    """Lookup structure over normalized entries.

    Buckets entries by (key, op-class) preserving seq order, and keeps
    value-level hash maps so attribution checks are O(1) in log size. Every
    entry lands in exactly one bucket; flattening the buckets reproduces the
    input list.
    """

    def __init__(self, entries: Iterable[AuditEntry]):
        self.entries: list[AuditEntry] = list(entries)
        self.by_key_op: dict[tuple[str, str], list[AuditEntry]] = {}
        # Maps a (role, key, value) signature to the matching entries in seq
        # order. Roles: delete_old, insert_new, update_old, update_new.
        self._by_value: dict[tuple[str, str, str, str], list[AuditEntry]] = {}
        self._pairs: dict[tuple[str, str, str, str, str], list[AuditEntry]] = {}
        for entry in self.entries:
            cls = op_class(entry.op)
            self.by_key_op.setdefault((entry.key, cls), []).append(entry)
            if cls == "delete" and entry.old_value is not None:
                self._add("delete_old", entry.key, entry.old_value, entry)
            elif cls == "insert" and entry.new_value is not None:
                self._add("insert_new", entry.key, entry.new_value, entry)
            elif cls == "update":
                if entry.old_value is not None:
                    self._add("update_old", entry.key, entry.old_value, entry)
                if entry.new_value is not None:
                    self._add("update_new", entry.key, entry.new_value, entry)
                if entry.old_value is not None and entry.new_value is not None:
                    sig = (
                        entry.key,
                        entry.old_value.kind,
                        entry.old_value.text,
                        entry.new_value.kind,
                        entry.new_value.text,
                    )
                    self._pairs.setdefault(sig, []).append(entry)

    def _add(self, role: str, key: str, value: CanonicalValue, entry: AuditEntry) -> None:
        self._by_value.setdefault((role, key, value.kind, value.text), []).append(entry)

    def lookup(self, key: str, cls: str) -> list[AuditEntry]:
        return self.by_key_op.get((key, cls), [])

    def match(self, role: str, key: str, value: CanonicalValue) -> list[AuditEntry]:
        """All entries whose given side equals value, in seq order."""
        return self._by_value.get((role, key, value.kind, value.text), [])

    def match_update_pair(
        self, key: str, old: CanonicalValue, new: CanonicalValue
    ) -> list[AuditEntry]:
        return self._pairs.get((key, old.kind, old.text, new.kind, new.text), [])

    def flatten(self) -> list[AuditEntry]:
        """All entries across buckets, restored to seq order."""
        out = [e for bucket in self.by_key_op.values() for e in bucket]
        out.sort(key=lambda e: e.seq)
        return out

    def __len__(self) -> int:
        return len(self.entries)


def build_log_index(entries: Iterable[AuditEntry]) -> LogIndex:
    """Index entries for reconciliation. Expand field ops first."""
    return LogIndex(entries)
