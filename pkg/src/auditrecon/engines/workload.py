"""Deterministic workload driver with per-operation log suppression.

Runs a script of steps against one of the two engines and produces four
artifacts: the database file, the application audit log (exactly the logged
steps, in order), the hidden ground-truth ledger (exactly the suppressed
steps), and a byte-copy snapshot of the database at every snapshot step.

Identical scripts produce byte-identical artifacts: timestamps derive from the
step index, the engines contain no entropy, and the driver is single-threaded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from ..canon import canonical_dumps
from ..errors import StoreError, WorkloadError
from .append_store import AppendStore
from .page_store import PageStore

AUDIT_OPS = ("insert", "update", "delete", "update_fields", "delete_fields")
CONTROL_OPS = ("pack", "compact", "snapshot", "open_pin_reader", "close_pin_reader")
BASE_TS = 1_700_000_000


@dataclass(frozen=True)
class WorkloadStep:
    """One scripted step.

    For the five audit ops, key names the record and value carries the payload
    (scalar string or document for insert/update, partial document object for
    update_fields, list of field names for delete_fields); logged=False
    performs the storage mutation but suppresses the audit line, recording it
    in the ledger instead. Control ops (pack/compact/snapshot/pin) never log;
    a snapshot step may use key as its label.
    """

    op: str
    key: str | None = None
    value: Any = None
    logged: bool = True

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"op": self.op}
        if self.key is not None:
            obj["key"] = self.key
        if self.value is not None:
            obj["value"] = self.value
        if self.op in AUDIT_OPS:
            obj["logged"] = self.logged
        return obj


@dataclass
class WorkloadResult:
    engine: str
    db: bytes
    audit_jsonl: str
    ledger_jsonl: str
    snapshots: list[tuple[str, bytes]] = field(default_factory=list)

    def snapshot(self, label: str) -> bytes:
        for name, data in self.snapshots:
            if name == label:
                return data
        raise KeyError(label)

    def write(self, outdir: str | Path) -> None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "store.db").write_bytes(self.db)
        (out / "audit.jsonl").write_text(self.audit_jsonl, encoding="utf-8")
        (out / "ledger.jsonl").write_text(self.ledger_jsonl, encoding="utf-8")
        if self.snapshots:
            snapdir = out / "snapshots"
            snapdir.mkdir(exist_ok=True)
            for label, data in self.snapshots:
                (snapdir / f"{label}.db").write_bytes(data)


def steps_to_jsonl(steps: Iterable[WorkloadStep]) -> str:
    return "".join(json.dumps(s.to_json_obj(), separators=(",", ":")) + "\n" for s in steps)


def steps_from_jsonl(text: str | bytes) -> list[WorkloadStep]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    steps = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WorkloadError(f"script line {line_no}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict) or "op" not in obj:
            raise WorkloadError(f"script line {line_no}: step needs an op field")
        steps.append(
            WorkloadStep(
                op=obj["op"],
                key=obj.get("key"),
                value=obj.get("value"),
                logged=bool(obj.get("logged", True)),
            )
        )
    return steps


def _store_text(value: Any) -> str:
    """Engines store byte strings; documents go in canonically serialized."""
    if isinstance(value, (dict, list)):
        return canonical_dumps(value)
    if isinstance(value, str):
        return value
    raise WorkloadError(f"unsupported value payload {value!r}")


def _audit_line(ts: int, op: str, key: str, user: str, old: Any, new: Any) -> str:
    return json.dumps(
        {"ts": ts, "op": op, "key": key, "user": user, "old_value": old, "new_value": new},
        separators=(",", ":"),
        ensure_ascii=False,
    )


def run_workload(
    steps: Sequence[WorkloadStep],
    engine: str = "append",
    *,
    cow: bool = False,
    base_ts: int = BASE_TS,
    user: str = "svc",
) -> WorkloadResult:
    """Execute a script and return all artifacts.

    Raises WorkloadError naming the step index when a step is illegal for the
    chosen engine (pack/compact and pinned readers exist only on the append
    engine; the page engine compacts implicitly through slot reuse).
    """
    if engine == "append":
        store: AppendStore | PageStore = AppendStore(cow=cow)
    elif engine == "page":
        if cow:
            raise WorkloadError("cow emulation applies to the append engine only")
        store = PageStore()
    else:
        raise WorkloadError(f"unknown engine {engine!r}")

    audit: list[str] = []
    ledger: list[str] = []
    snapshots: list[tuple[str, bytes]] = []
    readers: list[int] = []
    snap_count = 0

    for i, step in enumerate(steps):
        ts = base_ts + i
        op = step.op

        def fail(message: str) -> WorkloadError:
            return WorkloadError(f"step {i} ({op}): {message}")

        try:
            if op in AUDIT_OPS:
                if step.key is None:
                    raise fail("missing key")
                key = step.key
                line: str
                if op == "insert":
                    if store.get(key) is not None:
                        raise fail(f"key {key!r} already exists")
                    text = _store_text(step.value)
                    if isinstance(store, AppendStore):
                        store.put(key, text)
                    else:
                        store.insert(key, text)
                    line = _audit_line(ts, op, key, user, None, step.value)
                elif op == "update":
                    old = store.get(key)
                    if old is None:
                        raise fail(f"key {key!r} does not exist")
                    text = _store_text(step.value)
                    if isinstance(store, AppendStore):
                        store.put(key, text)
                    else:
                        store.update(key, text)
                    line = _audit_line(ts, op, key, user, old, step.value)
                elif op == "delete":
                    old = store.get(key)
                    if old is None:
                        raise fail(f"key {key!r} does not exist")
                    store.delete(key)
                    line = _audit_line(ts, op, key, user, old, None)
                elif op == "update_fields":
                    if not isinstance(step.value, dict):
                        raise fail("update_fields needs an object of fields to set")
                    doc = _current_document(store, key, fail)
                    doc.update(step.value)
                    text = canonical_dumps(doc)
                    if isinstance(store, AppendStore):
                        store.put(key, text)
                    else:
                        store.update(key, text)
                    line = _audit_line(ts, op, key, user, None, step.value)
                else:  # delete_fields
                    names = step.value
                    if not isinstance(names, list) or not all(
                        isinstance(n, str) for n in names
                    ):
                        raise fail("delete_fields needs a list of field names")
                    doc = _current_document(store, key, fail)
                    for name in names:
                        doc.pop(name, None)
                    text = canonical_dumps(doc)
                    if isinstance(store, AppendStore):
                        store.put(key, text)
                    else:
                        store.update(key, text)
                    line = _audit_line(ts, op, key, user, names, None)
                (audit if step.logged else ledger).append(line)
            elif op in ("pack", "compact"):
                if not isinstance(store, AppendStore):
                    raise fail("only the append engine packs; page slots recycle on insert")
                store.pack()
            elif op == "snapshot":
                label = step.key or f"t{snap_count}"
                snapshots.append((label, store.bytes))
                snap_count += 1
            elif op == "open_pin_reader":
                if not isinstance(store, AppendStore) or not store.cow:
                    raise fail("pinned readers need the append engine in cow mode")
                readers.append(store.open_pin_reader())
            elif op == "close_pin_reader":
                if not isinstance(store, AppendStore) or not store.cow:
                    raise fail("pinned readers need the append engine in cow mode")
                if not readers:
                    raise fail("no pinned reader is open")
                store.close_pin_reader(readers.pop())
            else:
                raise fail(f"unknown op {op!r}")
        except StoreError as exc:
            raise fail(str(exc)) from exc

    return WorkloadResult(
        engine=engine,
        db=store.bytes,
        audit_jsonl="".join(line + "\n" for line in audit),
        ledger_jsonl="".join(line + "\n" for line in ledger),
        snapshots=snapshots,
    )


def _current_document(store: AppendStore | PageStore, key: str, fail) -> dict:
    current = store.get(key)
    if current is None:
        raise fail(f"key {key!r} does not exist")
    try:
        doc = json.loads(current)
    except json.JSONDecodeError:
        doc = None
    if not isinstance(doc, dict):
        raise fail(f"key {key!r} does not hold a document")
    return doc
