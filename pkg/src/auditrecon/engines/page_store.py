"""Page-based in-place key-value store.

Fixed 4096-byte pages hold fixed 64-byte record slots. Updates overwrite the
record's slot bytes in place, destroying the prior value; deletes only clear
the slot's bit in the page's free-slot bitmap, leaving stale bytes behind that
the carver deliberately ignores. Freed slots are reused by later inserts
before any new page is allocated.

File format (fixed, versioned; see docs/FORMATS.md), all integers big-endian:

    file        := file_header page*
    file_header := magic "PKV1" | version u16 | page_size u32 | page_count u32
                   | zero padding to 4096 bytes
    page        := slot_count u16 | slot_size u16 | reserved u32
                   | bitmap 8 bytes | slot*63 | zero padding to 4096 bytes
    slot        := key_len u16 | value_len u16 | key bytes | value bytes
                   | stale/zero bytes to 64

Bitmap bit i (byte i // 8, bit i % 8, LSB first) marks slot i occupied.
"""

from __future__ import annotations

import hashlib
import struct

from ..canon import canon
from ..carved import STATUS_ACTIVE, CarvedRecord, CarvedSnapshot, Page
from ..errors import StoreError

MAGIC = b"PKV1"
FORMAT_VERSION = 1
PAGE_SIZE = 4096
SLOT_SIZE = 64
SLOT_COUNT = 63
BITMAP_SIZE = 8
PAGE_HEADER = struct.Struct(">HHI")  # slot_count, slot_size, reserved
SLOT_AREA_OFFSET = PAGE_HEADER.size + BITMAP_SIZE  # 16
SLOT_HEADER = struct.Struct(">HH")  # key_len, value_len
MAX_PAYLOAD = SLOT_SIZE - SLOT_HEADER.size  # 60 bytes of key+value

FILE_HEADER = struct.Struct(">4sHII")


def _blank_page() -> bytearray:
    page = bytearray(PAGE_SIZE)
    PAGE_HEADER.pack_into(page, 0, SLOT_COUNT, SLOT_SIZE, 0)
    return page


def _slot_offset(slot: int) -> int:
    return SLOT_AREA_OFFSET + slot * SLOT_SIZE


def _bit(page: bytearray | bytes, slot: int) -> bool:
    return bool(page[PAGE_HEADER.size + slot // 8] >> (slot % 8) & 1)


def _set_bit(page: bytearray, slot: int, value: bool) -> None:
    byte = PAGE_HEADER.size + slot // 8
    if value:
        page[byte] |= 1 << (slot % 8)
    else:
        page[byte] &= ~(1 << (slot % 8)) & 0xFF


class PageStore:
    """In-memory builder for the page store file."""

    def __init__(self, initial_pages: int = 0):
        self._pages: list[bytearray] = [_blank_page() for _ in range(initial_pages)]
        self._dir: dict[str, tuple[int, int]] = {}

    @property
    def bytes(self) -> bytes:
        header = bytearray(PAGE_SIZE)
        FILE_HEADER.pack_into(header, 0, MAGIC, FORMAT_VERSION, PAGE_SIZE, len(self._pages))
        return bytes(header) + b"".join(bytes(p) for p in self._pages)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.bytes)

    def get(self, key: str) -> str | None:
        loc = self._dir.get(key)
        if loc is None:
            return None
        _, value = _read_slot(self._pages[loc[0]], loc[1])
        return value

    def keys(self) -> list[str]:
        return list(self._dir)

    @staticmethod
    def _encode(key: str, value: str) -> bytes:
        kb = key.encode("utf-8")
        vb = value.encode("utf-8")
        if len(kb) + len(vb) > MAX_PAYLOAD:
            raise StoreError(
                f"record for key {key!r} needs {len(kb) + len(vb)} payload bytes; "
                f"slots hold {MAX_PAYLOAD}"
            )
        return SLOT_HEADER.pack(len(kb), len(vb)) + kb + vb

    def _write_slot(self, page_idx: int, slot: int, record: bytes) -> None:
        offset = _slot_offset(slot)
        page = self._pages[page_idx]
        page[offset : offset + SLOT_SIZE] = b"\x00" * SLOT_SIZE
        page[offset : offset + len(record)] = record

    def insert(self, key: str, value: str) -> None:
        if key in self._dir:
            raise StoreError(f"insert of existing key {key!r}")
        record = self._encode(key, value)
        # Freed slots are reused before any new page is allocated.
        for page_idx, page in enumerate(self._pages):
            for slot in range(SLOT_COUNT):
                if not _bit(page, slot):
                    self._write_slot(page_idx, slot, record)
                    _set_bit(page, slot, True)
                    self._dir[key] = (page_idx, slot)
                    return
        self._pages.append(_blank_page())
        page_idx = len(self._pages) - 1
        self._write_slot(page_idx, 0, record)
        _set_bit(self._pages[page_idx], 0, True)
        self._dir[key] = (page_idx, 0)

    def update(self, key: str, value: str) -> None:
        loc = self._dir.get(key)
        if loc is None:
            raise StoreError(f"update of missing key {key!r}")
        self._write_slot(loc[0], loc[1], self._encode(key, value))

    def delete(self, key: str) -> None:
        loc = self._dir.pop(key, None)
        if loc is None:
            raise StoreError(f"delete of missing key {key!r}")
        # Mark the slot free; the stale bytes stay until the slot is reused.
        _set_bit(self._pages[loc[0]], loc[1], False)

    @classmethod
    def load(cls, data: bytes) -> "PageStore":
        pages = _validate_and_split(data)
        store = cls()
        store._pages = [bytearray(p) for p in pages]
        for page_idx, page in enumerate(store._pages):
            for slot in range(SLOT_COUNT):
                if _bit(page, slot):
                    key, _ = _read_slot(page, slot)
                    store._dir[key] = (page_idx, slot)
        return store


def _read_slot(page: bytes | bytearray, slot: int) -> tuple[str, str]:
    offset = _slot_offset(slot)
    key_len, value_len = SLOT_HEADER.unpack_from(page, offset)
    if key_len + value_len > MAX_PAYLOAD:
        raise StoreError(f"slot {slot} carries implausible lengths {key_len}/{value_len}")
    start = offset + SLOT_HEADER.size
    key = bytes(page[start : start + key_len]).decode("utf-8")
    value = bytes(page[start + key_len : start + key_len + value_len]).decode("utf-8")
    return key, value


def _validate_and_split(data: bytes) -> list[bytes]:
    if len(data) < PAGE_SIZE:
        raise StoreError("file shorter than the header block")
    magic, version, page_size, page_count = FILE_HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StoreError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreError(f"unsupported format version {version}")
    if page_size != PAGE_SIZE:
        raise StoreError(f"unsupported page size {page_size}")
    expected = PAGE_SIZE * (1 + page_count)
    if len(data) != expected:
        raise StoreError(
            f"header declares {page_count} pages ({expected} bytes) but file has "
            f"{len(data)} bytes"
        )
    return [data[PAGE_SIZE * (1 + i) : PAGE_SIZE * (2 + i)] for i in range(page_count)]


def carve_pages(data: bytes) -> CarvedSnapshot:
    """Reconstruct a snapshot from raw store bytes.

    Every data page is carved: its md5 is taken over the raw page bytes, and
    occupied slots become Active records with page provenance. Freed slots are
    never emitted; their leftover bytes are unreferenced remanence that this
    pipeline does not treat as evidence.
    """
    snap = CarvedSnapshot()
    for index, raw in enumerate(_validate_and_split(data)):
        slot_count, slot_size, _reserved = PAGE_HEADER.unpack_from(raw, 0)
        if slot_count != SLOT_COUNT or slot_size != SLOT_SIZE:
            raise StoreError(
                f"page {index} geometry {slot_count}x{slot_size} does not match "
                f"format version {FORMAT_VERSION}"
            )
        md5 = hashlib.md5(raw).hexdigest()
        page = Page(index=index, md5=md5)
        for slot in range(SLOT_COUNT):
            if not _bit(raw, slot):
                continue
            key, value = _read_slot(raw, slot)
            record = CarvedRecord(
                key=key,
                value=canon(value),
                status=STATUS_ACTIVE,
                page_id=index,
                page_md5=md5,
                page_offset=_slot_offset(slot),
            )
            page.records.append(record)
            snap.flat.append(record)
        snap.pages.append(page)
    return snap
