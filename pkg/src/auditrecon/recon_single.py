"""Single-snapshot reconciliation for history-preserving storage engines.

Append-only and copy-on-write engines keep superseded record versions
physically present, so one snapshot carries both the current state and its
history. Detection runs in three stages: flag carved Deleted records the log
cannot explain, flag carved Active records the log cannot explain, then
consolidate same-key delete/insert findings into update pairs.

Attribution is existential: one logged operation explains every identical
carved remnant, and a seen-set collapses duplicate (key, value) pairs on the
carved side. Records are processed in (version_seq, carving order) ascending,
which pins the otherwise order-dependent pairing stage to a reproducible
result.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from .audit_log import AuditEntry, LogIndex
from .carved import STATUS_ACTIVE, STATUS_DELETED, CarvedRecord
from .report import FIELD_LEVEL_LABEL, AttributionStats, ReconReport, UpdatePair


def ordered(records: Iterable[CarvedRecord]) -> list[CarvedRecord]:
    """Deterministic processing order: (version_seq, carving order) ascending.

    Records without version_seq sort ahead of versioned ones and keep their
    relative carving order.
    """
    return [
        rec
        for _, rec in sorted(
            enumerate(records),
            key=lambda item: (
                -1 if item[1].version_seq is None else item[1].version_seq,
                item[0],
            ),
        )
    ]


def _delete_explained(index: LogIndex, rec: CarvedRecord) -> AuditEntry | None:
    """First log entry explaining a Deleted record, or None.

    A deletion is attributed by a delete with the same key and value, or by an
    update whose old side matches (an update supersedes the prior version).
    """
    for entry in index.match("delete_old", rec.key, rec.value):
        return entry
    for entry in index.match("update_old", rec.key, rec.value):
        return entry
    return None


def _insert_explained(index: LogIndex, rec: CarvedRecord) -> AuditEntry | None:
    """First log entry explaining an Active record, or None."""
    for entry in index.match("insert_new", rec.key, rec.value):
        return entry
    for entry in index.match("update_new", rec.key, rec.value):
        return entry
    return None


def detect_unattributed_deletes(
    carved: Sequence[CarvedRecord], index: LogIndex
) -> list[CarvedRecord]:
    """Deleted records whose (key, value) no logged delete or update old-side explains."""
    found: list[CarvedRecord] = []
    seen: set[tuple[str, str, str]] = set()
    for rec in ordered(carved):
        if rec.status != STATUS_DELETED:
            continue
        sig = (rec.key, rec.value.kind, rec.value.text)
        if sig in seen:
            continue
        if _delete_explained(index, rec) is None:
            found.append(rec)
            seen.add(sig)
    return found


def detect_unattributed_inserts(
    carved: Sequence[CarvedRecord], index: LogIndex
) -> list[CarvedRecord]:
    """Active records whose (key, value) no logged insert or update new-side explains."""
    found: list[CarvedRecord] = []
    seen: set[tuple[str, str, str]] = set()
    for rec in ordered(carved):
        if rec.status != STATUS_ACTIVE:
            continue
        sig = (rec.key, rec.value.kind, rec.value.text)
        if sig in seen:
            continue
        if _insert_explained(index, rec) is None:
            found.append(rec)
            seen.add(sig)
    return found


def consolidate_updates(
    delta_del: Sequence[CarvedRecord], delta_ins: Sequence[CarvedRecord]
) -> tuple[list[CarvedRecord], list[CarvedRecord], list[UpdatePair]]:
    """Pair same-key deleted/active findings with differing values into updates.

    Each deleted record pairs with at most one active record and vice versa
    (the pair removes both from the residual sets, keeping the three outputs
    disjoint and conserving counts). Candidates are taken in the input order
    of delta_ins; the first unconsumed candidate with a different value wins,
    and the values of the remaining candidates are recorded as alternates.
    Equal-value pairs never form: a deletion and a re-insertion of the same
    value are two separate findings, not an update.
    """
    ins_map: dict[str, list[int]] = {}
    for pos, rec in enumerate(delta_ins):
        ins_map.setdefault(rec.key, []).append(pos)
    consumed: set[int] = set()

    r_del: list[CarvedRecord] = []
    r_upd: list[UpdatePair] = []
    for rec in delta_del:
        candidates = ins_map.get(rec.key, [])
        chosen: int | None = None
        for pos in candidates:
            if pos in consumed:
                continue
            if delta_ins[pos].value != rec.value:
                chosen = pos
                break
        if chosen is None:
            r_del.append(rec)
            continue
        consumed.add(chosen)
        alternates = [
            delta_ins[pos].value.text
            for pos in candidates
            if pos != chosen and pos not in consumed and delta_ins[pos].value != rec.value
        ]
        r_upd.append(UpdatePair(deleted=rec, active=delta_ins[chosen], alternates=alternates))

    r_ins = [rec for pos, rec in enumerate(delta_ins) if pos not in consumed]
    return r_del, r_ins, r_upd


def reconcile_single(carved: Sequence[CarvedRecord], index: LogIndex) -> ReconReport:
    """Run the three detection stages and assemble the report.

    index must be built from the expanded log (field-level operations rewritten
    as whole-document updates); matches that attribute through such entries are
    counted separately and labeled for the report.
    """
    delta_del = detect_unattributed_deletes(carved, index)
    delta_ins = detect_unattributed_inserts(carved, index)
    r_del, r_ins, r_upd = consolidate_updates(delta_del, delta_ins)

    report = ReconReport(mode="single", r_del=r_del, r_ins=r_ins, r_upd=r_upd)
    stats = report.attributed

    seen: set[tuple[str, str, str, str]] = set()
    active_values: Counter[str] = Counter()
    for rec in ordered(carved):
        sig = rec.identity()
        if sig in seen:
            continue
        seen.add(sig)
        if rec.status == STATUS_ACTIVE:
            active_values[rec.key] += 1
        if rec.status == STATUS_DELETED:
            entry = _delete_explained(index, rec)
            side = "deletes"
        else:
            entry = _insert_explained(index, rec)
            side = "inserts"
        if entry is None:
            continue
        if side == "deletes":
            stats.deletes_matched += 1
        else:
            stats.inserts_matched += 1
        if entry.field_level:
            stats.field_level_matched += 1
            report.field_level_attributions.append(
                {
                    "key": rec.key,
                    "status": rec.status,
                    "value": {"kind": rec.value.kind, "text": rec.value.text},
                    "label": FIELD_LEVEL_LABEL,
                    "log_seq": entry.seq,
                }
            )

    for key, count in sorted(active_values.items()):
        if count > 1:
            report.notes.append(
                f"key {key!r} carries {count} distinct active versions; each was "
                "reconciled independently"
            )
    return report
