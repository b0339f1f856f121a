"""Shared fixtures: golden key-value/document cases and independent oracles.

The oracles here deliberately re-implement behavior in the most literal way
possible (double loops over the raw quantifiers, full diffs without hash
screening, dict replay) so the indexed implementations are checked against
something that cannot share their shortcuts.
"""

from __future__ import annotations

import json
import random

import pytest

from auditrecon import CarvedRecord, canon
from auditrecon.audit_log import AuditEntry
from auditrecon.carved import STATUS_ACTIVE, STATUS_DELETED
from auditrecon.recon_single import ordered

# --- golden fixtures ---------------------------------------------------------


def fig4_log_lines() -> list[dict]:
    return [
        {"ts": 1700000000, "op": "insert", "key": "K001", "user": "u1",
         "old_value": None, "new_value": "Austin"},
        {"ts": 1700000001, "op": "delete", "key": "K001", "user": "u1",
         "old_value": "Austin", "new_value": None},
        {"ts": 1700000002, "op": "insert", "key": "K001", "user": "u1",
         "old_value": None, "new_value": "Dallas"},
        {"ts": 1700000003, "op": "insert", "key": "K002", "user": "u1",
         "old_value": None, "new_value": "Houston"},
        {"ts": 1700000004, "op": "delete", "key": "K002", "user": "u2",
         "old_value": "Houston", "new_value": None},
        {"ts": 1700000005, "op": "insert", "key": "K003", "user": "u1",
         "old_value": None, "new_value": "Tulsa"},
    ]


def fig4_carved_rows() -> list[dict]:
    return [
        {"key": "K001", "value": "Austin", "status": "Deleted"},
        {"key": "K001", "value": "Dallas", "status": "Active"},
        {"key": "K002", "value": "Houston", "status": "Deleted"},
        {"key": "K003", "value": "Tulsa", "status": "Active"},
        {"key": "K004", "value": "Plano", "status": "Deleted"},
        {"key": "K005", "value": "Frisco", "status": "Active"},
        {"key": "K006", "value": "Memphis", "status": "Deleted"},
        {"key": "K006", "value": "Raston", "status": "Active"},
    ]


FIG5_DOCS = {
    "alice_austin": {"Name": "Alice", "City": "Austin"},
    "alice_dallas": {"Name": "Alice", "City": "Dallas"},
    "bob_houston": {"Name": "Bob", "City": "Houston"},
    "carol_tulsa": {"Name": "Carol", "City": "Tulsa"},
    "diana_plano": {"Name": "Diana", "City": "Plano"},
    "ethan_frisco": {"Name": "Ethan", "City": "Frisco"},
    "mike_tulsa": {"Name": "Mike", "City": "Tulsa"},
    "michael_tulsa": {"Name": "Michael", "City": "Tulsa"},
}


def reencode_doc(doc: dict, rng: random.Random) -> object:
    """Re-encode a document: shuffled key order, random whitespace, and a coin
    flip between the native-object and serialized-string wire forms."""
    items = list(doc.items())
    rng.shuffle(items)
    sep = rng.choice([", ", " , ", ",  "])
    colon = rng.choice([": ", " : ", ":  "])
    text = "{" + sep.join(f'"{k}"{colon}{json.dumps(v)}' for k, v in items) + "}"
    if rng.random() < 0.5:
        return text  # serialized JSON string with escaped quotes, once embedded
    return json.loads(text)


def fig5_log_lines(rng: random.Random | None = None) -> list[dict]:
    enc = (lambda d: reencode_doc(d, rng)) if rng else (lambda d: d)
    return [
        {"ts": 1700000000, "op": "insert", "key": "K001", "user": "u1",
         "old_value": None, "new_value": enc(FIG5_DOCS["alice_austin"])},
        {"ts": 1700000001, "op": "delete", "key": "K001", "user": "u1",
         "old_value": enc(FIG5_DOCS["alice_austin"]), "new_value": None},
        {"ts": 1700000002, "op": "insert", "key": "K001", "user": "u1",
         "old_value": None, "new_value": enc(FIG5_DOCS["alice_dallas"])},
        {"ts": 1700000003, "op": "insert", "key": "K002", "user": "u1",
         "old_value": None, "new_value": enc(FIG5_DOCS["bob_houston"])},
        {"ts": 1700000004, "op": "delete", "key": "K002", "user": "u2",
         "old_value": enc(FIG5_DOCS["bob_houston"]), "new_value": None},
        {"ts": 1700000005, "op": "insert", "key": "K003", "user": "u1",
         "old_value": None, "new_value": enc(FIG5_DOCS["carol_tulsa"])},
    ]


def fig5_carved_rows(rng: random.Random | None = None) -> list[dict]:
    enc = (lambda d: reencode_doc(d, rng)) if rng else (lambda d: d)
    return [
        {"key": "K001", "value": enc(FIG5_DOCS["alice_austin"]), "status": "Deleted"},
        {"key": "K001", "value": enc(FIG5_DOCS["alice_dallas"]), "status": "Active"},
        {"key": "K002", "value": enc(FIG5_DOCS["bob_houston"]), "status": "Deleted"},
        {"key": "K003", "value": enc(FIG5_DOCS["carol_tulsa"]), "status": "Active"},
        {"key": "K004", "value": enc(FIG5_DOCS["diana_plano"]), "status": "Deleted"},
        {"key": "K005", "value": enc(FIG5_DOCS["ethan_frisco"]), "status": "Active"},
        {"key": "K006", "value": enc(FIG5_DOCS["mike_tulsa"]), "status": "Deleted"},
        {"key": "K006", "value": enc(FIG5_DOCS["michael_tulsa"]), "status": "Active"},
    ]


def jsonl(rows: list[dict]) -> str:
    return "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)


@pytest.fixture
def fig4_log_text() -> str:
    return jsonl(fig4_log_lines())


@pytest.fixture
def fig4_carved_text() -> str:
    return jsonl(fig4_carved_rows())


# --- naive reconciliation oracle ---------------------------------------------


def naive_delta_del(carved: list[CarvedRecord], entries: list[AuditEntry]) -> list[CarvedRecord]:
    """Literal transcription of the delete-detection quantifier: a double loop
    over carved records and log entries, with the seen-set for dedup."""
    out: list[CarvedRecord] = []
    seen: set[tuple] = set()
    for rec in ordered(carved):
        if rec.status != STATUS_DELETED:
            continue
        sig = (rec.key, rec.value.kind, rec.value.text)
        if sig in seen:
            continue
        explained = False
        for entry in entries:
            if entry.op == "delete" and entry.key == rec.key and entry.old_value == rec.value:
                explained = True
                break
            if entry.op == "update" and entry.key == rec.key and entry.old_value == rec.value:
                explained = True
                break
        if not explained:
            out.append(rec)
            seen.add(sig)
    return out


def naive_delta_ins(carved: list[CarvedRecord], entries: list[AuditEntry]) -> list[CarvedRecord]:
    out: list[CarvedRecord] = []
    seen: set[tuple] = set()
    for rec in ordered(carved):
        if rec.status != STATUS_ACTIVE:
            continue
        sig = (rec.key, rec.value.kind, rec.value.text)
        if sig in seen:
            continue
        explained = False
        for entry in entries:
            if entry.op == "insert" and entry.key == rec.key and entry.new_value == rec.value:
                explained = True
                break
            if entry.op == "update" and entry.key == rec.key and entry.new_value == rec.value:
                explained = True
                break
        if not explained:
            out.append(rec)
            seen.add(sig)
    return out


# --- random instance generators ----------------------------------------------


def random_entry(rng: random.Random, keys: list[str], values: list[str], seq: int) -> AuditEntry:
    op = rng.choice(["insert", "delete", "update"])
    key = rng.choice(keys)
    old = canon(rng.choice(values))
    new = canon(rng.choice(values))
    return AuditEntry(
        ts=1700000000 + seq,
        op=op,
        key=key,
        user="u",
        old_value=None if op == "insert" else old,
        new_value=None if op == "delete" else new,
        seq=seq,
    )


def random_instance(
    rng: random.Random, n_carved: int, n_log: int
) -> tuple[list[CarvedRecord], list[AuditEntry]]:
    """A random reconciliation instance over small alphabets so that carved
    records and log entries collide often enough to exercise attribution."""
    keys = [f"K{i:03d}" for i in range(max(2, n_carved // 4))]
    values = [f"v{i}" for i in range(max(2, n_carved // 3))]
    carved = []
    for i in range(n_carved):
        carved.append(
            CarvedRecord(
                key=rng.choice(keys),
                value=canon(rng.choice(values)),
                status=rng.choice([STATUS_ACTIVE, STATUS_DELETED]),
                version_seq=rng.choice([None, rng.randrange(1000)]),
                page_id=rng.choice([None, rng.randrange(8)]),
            )
        )
    entries = [random_entry(rng, keys, values, seq) for seq in range(n_log)]
    return carved, entries
