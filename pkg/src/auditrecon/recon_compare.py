"""Comparative before/after reconciliation for in-place storage engines.

In-place engines overwrite record slots, so prior values do not survive in a
single snapshot. Detection instead diffs a trusted baseline snapshot against a
suspicious one: page hashes screen out untouched pages, record-level diffs on
the remaining pages yield removed / added / changed keys, and each physical
change is then checked against the audit log.

Hash screening is purely an optimization: results must equal an exhaustive
per-page diff. A record that merely moved between pages with the same value
produces no finding (both pages hash differently, but the removed/added sides
cancel), and a record whose value changed across a move is treated as a value
change of its key, not as a delete plus an insert.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .audit_log import LogIndex
from .canon import CanonicalValue
from .carved import STATUS_ACTIVE, STATUS_DELETED, CarvedRecord, CarvedSnapshot, Page
from .report import FIELD_LEVEL_LABEL, ReconReport, UpdatePair


@dataclass
class PageDelta:
    """Record-level differences on one page whose content hash changed.

    A key appears in at most one of removed/added/changed; keys present on
    both sides with equal values are omitted. A page delta with all three
    lists empty records a physical change with no logical difference (e.g.
    free-slot bookkeeping), which downstream attribution ignores.
    """

    page_index: int
    removed: list[tuple[str, CanonicalValue]] = field(default_factory=list)
    added: list[tuple[str, CanonicalValue]] = field(default_factory=list)
    changed: list[tuple[str, CanonicalValue, CanonicalValue]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not (self.removed or self.added or self.changed)


_EMPTY_PAGE = Page(index=-1, md5=None, records=[])


def _record_map(page: Page) -> dict[str, CarvedRecord]:
    # Active records only; a carver for an in-place engine emits no Deleted
    # records, but hand-built fixtures may. Later occurrences win.
    return {rec.key: rec for rec in page.records if rec.status == STATUS_ACTIVE}


def diff_pages(before: CarvedSnapshot, after: CarvedSnapshot) -> list[PageDelta]:
    """Diff two paged snapshots, screening unchanged pages by md5.

    Iterates the union of page indices (a page present on one side only is
    treated as empty on the other, so inserts that allocate brand-new pages
    are not missed). Produces one PageDelta per page whose hash differs or
    which exists on exactly one side; the delta list is therefore also the
    set of pages the record-level analysis visited.

    Raises CompareModeError when either snapshot lacks page hashes.
    """
    before.require_page_hashes()
    after.require_page_hashes()

    before_pages = before.page_map()
    after_pages = after.page_map()
    deltas: list[PageDelta] = []
    for index in sorted(set(before_pages) | set(after_pages)):
        page_b = before_pages.get(index)
        page_a = after_pages.get(index)
        if page_b is not None and page_a is not None and page_b.md5 == page_a.md5:
            continue
        recs_b = _record_map(page_b or _EMPTY_PAGE)
        recs_a = _record_map(page_a or _EMPTY_PAGE)
        delta = PageDelta(page_index=index)
        for key in sorted(set(recs_b) | set(recs_a)):
            rb = recs_b.get(key)
            ra = recs_a.get(key)
            if rb is not None and ra is not None:
                if rb.value != ra.value:
                    delta.changed.append((key, rb.value, ra.value))
            elif rb is not None:
                delta.removed.append((key, rb.value))
            else:
                assert ra is not None
                delta.added.append((key, ra.value))
        deltas.append(delta)
    return deltas


@dataclass
class CompareFindings:
    """Unattributed operations from a before/after comparison.

    Tuples carry page provenance: updates as (page_index, key, value_before,
    value_after) where page_index is the after-side page, deletes as
    (page_index, key, value_before), inserts as (page_index, key, value_after).
    All lists are sorted by (page_index, key).
    """

    u_upd: list[tuple[int, str, CanonicalValue, CanonicalValue]] = field(default_factory=list)
    u_ins: list[tuple[int, str, CanonicalValue]] = field(default_factory=list)
    u_del: list[tuple[int, str, CanonicalValue]] = field(default_factory=list)
    attributed_updates: int = 0
    attributed_inserts: int = 0
    attributed_deletes: int = 0
    field_level: list[dict] = field(default_factory=list)


def _merge_deltas(
    deltas: Sequence[PageDelta],
) -> tuple[
    list[tuple[int, str, CanonicalValue, CanonicalValue]],
    list[tuple[int, str, CanonicalValue]],
    list[tuple[int, str, CanonicalValue]],
]:
    """Reconcile per-page deltas across pages.

    A key removed from one page and added to another with an identical value
    is a relocation and cancels out; with a different value it becomes a
    cross-page value change. Remaining removed/added entries are genuine
    disappearances/appearances.
    """
    changed = [(page.page_index, k, vb, va) for page in deltas for (k, vb, va) in page.changed]
    removed_by_key: dict[str, list[tuple[int, CanonicalValue]]] = {}
    added_by_key: dict[str, list[tuple[int, CanonicalValue]]] = {}
    for page in deltas:
        for key, value in page.removed:
            removed_by_key.setdefault(key, []).append((page.page_index, value))
        for key, value in page.added:
            added_by_key.setdefault(key, []).append((page.page_index, value))

    removed: list[tuple[int, str, CanonicalValue]] = []
    added: list[tuple[int, str, CanonicalValue]] = []
    for key in sorted(set(removed_by_key) | set(added_by_key)):
        rem = removed_by_key.get(key, [])
        add = added_by_key.get(key, [])
        # Cancel exact relocations first.
        for page_a, value_a in list(add):
            for page_r, value_r in list(rem):
                if value_r == value_a:
                    rem.remove((page_r, value_r))
                    add.remove((page_a, value_a))
                    break
        # Pair what is left as cross-page value changes, in page order.
        while rem and add:
            page_r, value_r = rem.pop(0)
            page_a, value_a = add.pop(0)
            changed.append((page_a, key, value_r, value_a))
        removed.extend((page, key, value) for page, value in rem)
        added.extend((page, key, value) for page, value in add)

    changed.sort(key=lambda t: (t[0], t[1]))
    removed.sort(key=lambda t: (t[0], t[1]))
    added.sort(key=lambda t: (t[0], t[1]))
    return changed, removed, added


def compare_and_attribute(
    before: CarvedSnapshot,
    after: CarvedSnapshot,
    index: LogIndex,
    *,
    key_only: bool = False,
) -> CompareFindings:
    """Attribute each physical change between two snapshots to the log.

    Default attribution is value-checked: a changed key needs a logged update
    with matching before/after values, a removed key a logged delete with the
    matching old value, an added key a logged insert with the matching new
    value. One log entry attributes at most one physical change with the same
    (key, values) signature; surplus identical changes stay findings.

    key_only=True reproduces the looser published pseudocode, where a single
    log entry of the right op class for the key suffices (existence only, no
    value agreement and no consumption).
    """
    deltas = diff_pages(before, after)
    changed, removed, added = _merge_deltas(deltas)
    findings = CompareFindings()
    used: Counter[tuple] = Counter()

    def note_field_level(entry, key: str, op: str) -> None:
        if entry is not None and entry.field_level:
            findings.field_level.append(
                {"key": key, "op": op, "label": FIELD_LEVEL_LABEL, "log_seq": entry.seq}
            )

    for page, key, value_before, value_after in changed:
        if key_only:
            hit = bool(index.lookup(key, "update"))
            entry = index.lookup(key, "update")[0] if hit else None
        else:
            matches = index.match_update_pair(key, value_before, value_after)
            sig = ("upd", key, value_before.kind, value_before.text,
                   value_after.kind, value_after.text)
            hit = used[sig] < len(matches)
            entry = matches[used[sig]] if hit else None
            if hit:
                used[sig] += 1
        if hit:
            findings.attributed_updates += 1
            note_field_level(entry, key, "update")
        else:
            findings.u_upd.append((page, key, value_before, value_after))

    for page, key, value in removed:
        if key_only:
            hit = bool(index.lookup(key, "delete"))
            entry = index.lookup(key, "delete")[0] if hit else None
        else:
            matches = index.match("delete_old", key, value)
            sig = ("del", key, value.kind, value.text)
            hit = used[sig] < len(matches)
            entry = matches[used[sig]] if hit else None
            if hit:
                used[sig] += 1
        if hit:
            findings.attributed_deletes += 1
            note_field_level(entry, key, "delete")
        else:
            findings.u_del.append((page, key, value))

    for page, key, value in added:
        if key_only:
            hit = bool(index.lookup(key, "insert"))
            entry = index.lookup(key, "insert")[0] if hit else None
        else:
            matches = index.match("insert_new", key, value)
            sig = ("ins", key, value.kind, value.text)
            hit = used[sig] < len(matches)
            entry = matches[used[sig]] if hit else None
            if hit:
                used[sig] += 1
        if hit:
            findings.attributed_inserts += 1
            note_field_level(entry, key, "insert")
        else:
            findings.u_ins.append((page, key, value))

    return findings


def reconcile_compare(
    before: CarvedSnapshot,
    after: CarvedSnapshot,
    index: LogIndex,
    *,
    key_only: bool = False,
) -> ReconReport:
    """Assemble a compare-mode report with page provenance on every finding."""
    findings = compare_and_attribute(before, after, index, key_only=key_only)
    report = ReconReport(mode="compare")
    for page, key, value in findings.u_del:
        report.r_del.append(
            CarvedRecord(key=key, value=value, status=STATUS_DELETED, page_id=page)
        )
    for page, key, value in findings.u_ins:
        report.r_ins.append(
            CarvedRecord(key=key, value=value, status=STATUS_ACTIVE, page_id=page)
        )
    for page, key, value_before, value_after in findings.u_upd:
        report.r_upd.append(
            UpdatePair(
                deleted=CarvedRecord(
                    key=key, value=value_before, status=STATUS_DELETED, page_id=page
                ),
                active=CarvedRecord(
                    key=key, value=value_after, status=STATUS_ACTIVE, page_id=page
                ),
            )
        )
    report.attributed.deletes_matched = findings.attributed_deletes
    report.attributed.inserts_matched = findings.attributed_inserts
    report.attributed.updates_matched = findings.attributed_updates
    report.attributed.field_level_matched = len(findings.field_level)
    report.field_level_attributions = findings.field_level
    return report
