"""Carved-artifact interchange: the contract between any carver and reconciliation.

A carver, whatever engine format it understands, emits JSONL records of
``{key, value, status, page_id?, page_md5?, page_offset?, version_seq?}``.
Reconciliation never looks past this surface, which keeps it decoupled from
engine internals. Page metadata and version_seq are storage-layer facts; they
are deliberately excluded from record identity (see :func:`fingerprint`) so
routine physical rearrangement such as compaction never reads as a logical
data change.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import IO, Any, Iterable, Iterator

from .canon import CanonicalValue, canon
from .errors import CarvedFormatError

STATUS_ACTIVE = "Active"
STATUS_DELETED = "Deleted"
# Both spellings appear in carver output in the wild; normalize on parse.
_STATUS_ALIASES = {"Active": STATUS_ACTIVE, "Deleted": STATUS_DELETED, "Delete": STATUS_DELETED}

_HEX = set("0123456789abcdef")


@dataclass(frozen=True)
class CarvedRecord:
    """One record reconstructed from raw storage bytes."""

    key: str
    value: CanonicalValue
    status: str
    page_id: int | None = None
    page_md5: str | None = None
    page_offset: int | None = None
    version_seq: int | None = None

    def identity(self) -> tuple[str, str, str, str]:
        """Content identity: (key, value kind, value text, status)."""
        return (self.key, self.value.kind, self.value.text, self.status)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "key": self.key,
            "value": self.value.to_json_obj(),
            "status": self.status,
        }
        for name in ("page_id", "page_md5", "page_offset", "version_seq"):
            val = getattr(self, name)
            if val is not None:
                obj[name] = val
        return obj


def fingerprint(record: CarvedRecord) -> str:
    """Content-only digest of a record.

    Covers exactly (key, value kind, value text, status), length-prefixed so
    field boundaries cannot be confused. page_id / page_md5 / page_offset /
    version_seq never participate: records that merely moved on disk
    fingerprint identically.
    """
    h = hashlib.blake2b(digest_size=16)
    for part in record.identity():
        data = part.encode("utf-8")
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)
    return h.hexdigest()


@dataclass
class Page:
    """One carved physical page: its index, content hash, and records."""

    index: int
    md5: str | None
    records: list[CarvedRecord] = field(default_factory=list)


@dataclass
class CarvedSnapshot:
    """All records carved from one forensic snapshot.

    flat preserves carving order across the whole snapshot and is the master
    list; pages groups the paged subset, unpaged collects records without page
    metadata (append-only carvers emit no pages). Page indices are unique and
    every paged record's page_id equals its containing page's index.
    """

    flat: list[CarvedRecord] = field(default_factory=list)
    pages: list[Page] = field(default_factory=list)
    unpaged: list[CarvedRecord] = field(default_factory=list)

    def page_map(self) -> dict[int, Page]:
        return {p.index: p for p in self.pages}

    def require_page_hashes(self) -> None:
        """Comparative analysis needs an md5 for every page and no unpaged records."""
        from .errors import CompareModeError

        if self.unpaged:
            raise CompareModeError(
                f"{len(self.unpaged)} carved record(s) carry no page metadata; "
                "comparative analysis needs paged snapshots - use single-snapshot mode"
            )
        for page in self.pages:
            if page.md5 is None:
                raise CompareModeError(
                    f"page {page.index} has no md5; comparative analysis needs page "
                    "hashes - use single-snapshot mode"
                )


def snapshot_from_records(records: Iterable[CarvedRecord]) -> CarvedSnapshot:
    """Group records into a snapshot, validating page invariants."""
    snap = CarvedSnapshot()
    pages: dict[int, Page] = {}
    for rec in records:
        snap.flat.append(rec)
        if rec.page_id is None:
            snap.unpaged.append(rec)
            continue
        page = pages.get(rec.page_id)
        if page is None:
            page = Page(index=rec.page_id, md5=rec.page_md5)
            pages[rec.page_id] = page
            snap.pages.append(page)
        elif rec.page_md5 is not None:
            if page.md5 is None:
                page.md5 = rec.page_md5
            elif page.md5 != rec.page_md5:
                raise CarvedFormatError(
                    f"page {rec.page_id} carries conflicting md5 values "
                    f"{page.md5} / {rec.page_md5}"
                )
        page.records.append(rec)
    snap.pages.sort(key=lambda p: p.index)
    return snap


def _parse_page_field(obj: dict, name: str, line_no: int) -> int | None:
    val = obj.get(name)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, int) or val < 0:
        raise CarvedFormatError(f"{name} must be a non-negative integer", line_no)
    return val


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


_RECORD_FIELDS = {"key", "value", "status", "page_id", "page_md5", "page_offset", "version_seq"}


def parse_carved(
    raw: bytes | str | IO[bytes] | IO[str] | Iterable[str],
    *,
    fold_keys: bool = False,
) -> CarvedSnapshot:
    """Parse carved interchange JSONL into a snapshot.

    Values follow the audit log conventions and pass through canon. Status
    accepts Active/Deleted/Delete. Errors carry the 1-based line number.
    """
    records: list[CarvedRecord] = []
    page_hashes: dict[int, str] = {}
    for idx, line in enumerate(_iter_lines(raw)):
        line_no = idx + 1
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CarvedFormatError(f"invalid JSON: {exc.msg} (col {exc.colno})", line_no) from exc
        if not isinstance(obj, dict):
            raise CarvedFormatError("line is not a JSON object", line_no)
        unknown = set(obj) - _RECORD_FIELDS
        if unknown:
            raise CarvedFormatError(f"unknown fields {sorted(unknown)}", line_no)
        for name in ("key", "value", "status"):
            if name not in obj:
                raise CarvedFormatError(f"missing field {name!r}", line_no)
        if not isinstance(obj["key"], str):
            raise CarvedFormatError("key must be a string", line_no)
        status = obj["status"]
        if status not in _STATUS_ALIASES:
            raise CarvedFormatError(
                f"status must be one of Active/Deleted/Delete, got {status!r}", line_no
            )

        md5 = obj.get("page_md5")
        if md5 is not None:
            if not isinstance(md5, str):
                raise CarvedFormatError("page_md5 must be a string", line_no)
            md5 = md5.lower()
            if len(md5) != 32 or not set(md5) <= _HEX:
                raise CarvedFormatError(
                    f"page_md5 must be 32 hex characters, got {obj['page_md5']!r}", line_no
                )

        page_id = _parse_page_field(obj, "page_id", line_no)
        if page_id is not None and md5 is not None:
            seen = page_hashes.get(page_id)
            if seen is not None and seen != md5:
                raise CarvedFormatError(
                    f"page {page_id} md5 {md5} conflicts with earlier {seen}", line_no
                )
            page_hashes.setdefault(page_id, md5)

        key = obj["key"].casefold() if fold_keys else obj["key"]
        records.append(
            CarvedRecord(
                key=key,
                value=canon(obj["value"], fold_keys=fold_keys),
                status=_STATUS_ALIASES[status],
                page_id=page_id,
                page_md5=md5,
                page_offset=_parse_page_field(obj, "page_offset", line_no),
                version_seq=_parse_page_field(obj, "version_seq", line_no),
            )
        )
    return snapshot_from_records(records)


def serialize_carved(snapshot: CarvedSnapshot) -> str:
    """Dump a snapshot back to interchange JSONL, in carving order."""
    return "".join(
        json.dumps(rec.to_json_obj(), separators=(",", ":"), ensure_ascii=False) + "\n"
        for rec in snapshot.flat
    )


def relocate(record: CarvedRecord, **meta: Any) -> CarvedRecord:
    """Copy a record with different storage metadata (testing helper)."""
    return replace(record, **meta)
