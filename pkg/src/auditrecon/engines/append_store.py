"""Append-only key-value store with an optional copy-on-write emulation mode.

Every mutation writes a new frame; modifying a key never touches its earlier
frames, so the file accumulates full version history until ``pack`` rewrites
it. The file format is fixed and versioned (see docs/FORMATS.md):

    file   := header frame*
    header := magic "AKV1" | version u16 | flags u16 | reserved u64   (16 bytes)
    frame  := frame_len u32 | seq u64 | op u8 | key_len u32 | value_len u32
              | key bytes | value bytes | zero padding | crc32 u32

All integers are big-endian. frame_len counts the whole frame including itself
and the trailing CRC-32, which covers every frame byte before it. seq is the
store-wide transaction counter. op is 0 for put, 1 for tombstone (tombstones
carry no value).

Plain mode never reclaims space. CoW mode emulates freelist page reuse: a
frame superseded by a later write becomes reclaimable once no pinned reader
opened before the superseding write remains, and subsequent writes overwrite
reclaimable extents (first fit, padding absorbs sub-frame remainders) before
appending. That reproduces the observable carving behavior of MVCC engines:
history survives while a long-lived reader pins it and vanishes under write
pressure after the reader closes.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass
from typing import Iterator

from ..canon import canon
from ..carved import STATUS_ACTIVE, STATUS_DELETED, CarvedRecord
from ..errors import StoreError

log = logging.getLogger(__name__)

MAGIC = b"AKV1"
FORMAT_VERSION = 1
FLAG_COW = 0x0001
HEADER = struct.Struct(">4sHH8x")  # magic, version, flags, reserved
assert HEADER.size == 16

FRAME_FIXED = struct.Struct(">IQBII")  # frame_len, seq, op, key_len, value_len
CRC_SIZE = 4
FRAME_OVERHEAD = FRAME_FIXED.size + CRC_SIZE  # 25 bytes
# Smallest frame any future write could need (one-byte key, empty value);
# reclaimed extents smaller than this are dead space and get absorbed.
MIN_FRAME = FRAME_OVERHEAD + 1

OP_PUT = 0
OP_TOMBSTONE = 1


@dataclass
class _Frame:
    offset: int
    length: int
    seq: int
    op: int
    key: str
    value: str = ""


def _encode_frame(seq: int, op: int, key: str, value: str, frame_len: int | None = None) -> bytes:
    kb = key.encode("utf-8")
    vb = value.encode("utf-8")
    needed = FRAME_OVERHEAD + len(kb) + len(vb)
    if frame_len is None:
        frame_len = needed
    if frame_len < needed:
        raise StoreError(f"frame_len {frame_len} cannot hold {needed} bytes")
    body = FRAME_FIXED.pack(frame_len, seq, op, len(kb), len(vb)) + kb + vb
    body += b"\x00" * (frame_len - needed)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return body + struct.pack(">I", crc)


class AppendStore:
    """In-memory builder for the append-only store file."""

    def __init__(self, cow: bool = False):
        self.cow = cow
        flags = FLAG_COW if cow else 0
        self._buf = bytearray(HEADER.pack(MAGIC, FORMAT_VERSION, flags))
        self._next_seq = 0
        self._state: dict[str, _Frame] = {}
        # CoW bookkeeping: open readers pin the history they can still see.
        self._readers: dict[int, int] = {}  # reader id -> seq at open
        self._next_reader = 0
        self._pending: list[tuple[int, int, int]] = []  # (offset, length, death_seq)
        self._extents: list[tuple[int, int]] = []  # reclaimable (offset, length)

    @property
    def bytes(self) -> bytes:
        return bytes(self._buf)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self._buf)

    def get(self, key: str) -> str | None:
        frame = self._state.get(key)
        if frame is None or frame.op != OP_PUT:
            return None
        return frame.value

    def keys(self) -> list[str]:
        return [k for k, f in self._state.items() if f.op == OP_PUT]

    # -- write path ---------------------------------------------------------

    def _alloc(self, needed: int) -> tuple[int, int] | None:
        """First reclaimable extent that fits, split unless the tail is dead space."""
        for i, (offset, length) in enumerate(self._extents):
            if length < needed:
                continue
            if length - needed >= MIN_FRAME:
                self._extents[i] = (offset + needed, length - needed)
                return offset, needed
            del self._extents[i]
            return offset, length
        return None

    def _free(self, offset: int, length: int) -> None:
        """Return an extent to the pool, coalescing with neighbors."""
        extents = self._extents
        lo = 0
        while lo < len(extents) and extents[lo][0] < offset:
            lo += 1
        extents.insert(lo, (offset, length))
        merged: list[tuple[int, int]] = []
        for off, ln in extents:
            if merged and merged[-1][0] + merged[-1][1] == off:
                merged[-1] = (merged[-1][0], merged[-1][1] + ln)
            else:
                merged.append((off, ln))
        self._extents = merged

    def _kill(self, frame: _Frame, death_seq: int) -> None:
        if not self.cow:
            return
        # A reader opened at seq s still sees every frame alive at that point,
        # i.e. frames that die at seq >= s; those stay pinned until it closes.
        if any(open_seq <= death_seq for open_seq in self._readers.values()):
            self._pending.append((frame.offset, frame.length, death_seq))
        else:
            self._free(frame.offset, frame.length)

    def _write_frame(self, op: int, key: str, value: str) -> _Frame:
        seq = self._next_seq
        self._next_seq += 1
        kb = key.encode("utf-8")
        vb = value.encode("utf-8")
        needed = FRAME_OVERHEAD + len(kb) + len(vb)
        placement = self._alloc(needed) if self.cow else None
        if placement is None:
            offset, frame_len = len(self._buf), needed
            self._buf.extend(_encode_frame(seq, op, key, value))
        else:
            offset, frame_len = placement
            self._buf[offset : offset + frame_len] = _encode_frame(
                seq, op, key, value, frame_len
            )
        new = _Frame(offset, frame_len, seq, op, key, value)
        prev = self._state.get(key)
        if prev is not None:
            self._kill(prev, death_seq=seq)
        self._state[key] = new
        return new

    def put(self, key: str, value: str) -> None:
        self._write_frame(OP_PUT, key, value)

    def delete(self, key: str) -> None:
        frame = self._state.get(key)
        if frame is None or frame.op != OP_PUT:
            raise StoreError(f"delete of missing key {key!r}")
        self._write_frame(OP_TOMBSTONE, key, "")

    # -- pinned readers (CoW mode) ------------------------------------------

    def open_pin_reader(self) -> int:
        if not self.cow:
            raise StoreError("pinned readers exist only in CoW emulation mode")
        reader = self._next_reader
        self._next_reader += 1
        self._readers[reader] = self._next_seq
        return reader

    def close_pin_reader(self, reader: int | None = None) -> None:
        if not self.cow:
            raise StoreError("pinned readers exist only in CoW emulation mode")
        if not self._readers:
            raise StoreError("close_pin_reader without an open reader")
        if reader is None:
            reader = next(iter(self._readers))
        if reader not in self._readers:
            raise StoreError(f"unknown reader {reader}")
        del self._readers[reader]
        still_pending: list[tuple[int, int, int]] = []
        for offset, length, death_seq in self._pending:
            if any(open_seq <= death_seq for open_seq in self._readers.values()):
                still_pending.append((offset, length, death_seq))
            else:
                self._free(offset, length)
        self._pending = still_pending

    # -- maintenance ---------------------------------------------------------

    def pack(self) -> None:
        """Rewrite the file keeping only the latest frame of each live key.

        Tombstones and superseded frames are pruned; seq restarts at 0 in the
        surviving frames' original transaction order.
        """
        if self._readers:
            raise StoreError("cannot pack while pinned readers are open")
        live = sorted(
            (f for f in self._state.values() if f.op == OP_PUT), key=lambda f: f.seq
        )
        flags = FLAG_COW if self.cow else 0
        self._buf = bytearray(HEADER.pack(MAGIC, FORMAT_VERSION, flags))
        self._state = {}
        self._next_seq = 0
        self._pending = []
        self._extents = []
        for frame in live:
            self._write_frame(OP_PUT, frame.key, frame.value)


def pack_append_store(data: bytes) -> bytes:
    """Pack an existing store file: one frame per live key, history pruned."""
    store = AppendStore()
    latest: dict[str, _Frame] = {}
    for frame in _scan_frames(data, strict=True):
        prev = latest.get(frame.key)
        if prev is None or frame.seq > prev.seq:
            latest[frame.key] = frame
    for frame in sorted(latest.values(), key=lambda f: f.seq):
        if frame.op == OP_PUT:
            store.put(frame.key, frame.value)
    return store.bytes


def _scan_frames(data: bytes, *, strict: bool = False) -> Iterator[_Frame]:
    """Walk validated frames; stop at the first frame that fails validation.

    A torn or corrupted frame truncates the scan (with a warning, or an error
    when strict), so a single flipped byte can never surface as a valid record.
    """
    if len(data) < HEADER.size:
        raise StoreError("file shorter than header")
    magic, version, _flags = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StoreError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreError(f"unsupported format version {version}")

    pos = HEADER.size
    while pos < len(data):
        def torn(reason: str) -> None:
            if strict:
                raise StoreError(f"corrupt frame at offset {pos}: {reason}")
            log.warning(
                "truncating scan at offset %d (%d trailing bytes dropped): %s",
                pos, len(data) - pos, reason,
            )

        if len(data) - pos < FRAME_OVERHEAD:
            torn("short trailing bytes")
            return
        frame_len, seq, op, key_len, value_len = FRAME_FIXED.unpack_from(data, pos)
        if frame_len < FRAME_OVERHEAD or pos + frame_len > len(data):
            torn(f"implausible frame_len {frame_len}")
            return
        if FRAME_FIXED.size + key_len + value_len > frame_len - CRC_SIZE:
            torn("lengths exceed frame")
            return
        (crc_stored,) = struct.unpack_from(">I", data, pos + frame_len - CRC_SIZE)
        crc_actual = zlib.crc32(data[pos : pos + frame_len - CRC_SIZE]) & 0xFFFFFFFF
        if crc_stored != crc_actual:
            torn(f"checksum mismatch ({crc_stored:08x} != {crc_actual:08x})")
            return
        if op not in (OP_PUT, OP_TOMBSTONE):
            torn(f"unknown op flag {op}")
            return
        body = pos + FRAME_FIXED.size
        try:
            key = data[body : body + key_len].decode("utf-8")
            value = data[body + key_len : body + key_len + value_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            torn(f"undecodable payload: {exc}")
            return
        yield _Frame(pos, frame_len, seq, op, key, value)
        pos += frame_len


def carve_append(data: bytes) -> list[CarvedRecord]:
    """Reconstruct records from raw store bytes, bypassing engine state.

    The latest frame of each key decides its current state: that frame's value
    is Active when it is a put, and every other put frame of the key is a
    superseded revision carved as Deleted. Tombstones themselves carry no
    value and emit nothing. Output follows file order; version_seq carries the
    frame's transaction number, which is the carving-order authority in CoW
    mode where extent reuse breaks offset ordering.
    """
    frames = list(_scan_frames(data))
    latest: dict[str, _Frame] = {}
    for frame in frames:
        prev = latest.get(frame.key)
        if prev is None or frame.seq > prev.seq:
            latest[frame.key] = frame
    records: list[CarvedRecord] = []
    for frame in frames:
        if frame.op != OP_PUT:
            continue
        current = latest[frame.key]
        status = STATUS_ACTIVE if current.seq == frame.seq else STATUS_DELETED
        records.append(
            CarvedRecord(
                key=frame.key,
                value=canon(frame.value),
                status=status,
                version_seq=frame.seq,
            )
        )
    return records
