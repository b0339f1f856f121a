"""Reconciliation report: the three disjoint finding sets plus attribution stats.

The JSON schema is versioned (``recon-report/1``) and identical across single
and compare modes so downstream tooling can consume either. Reports carry no
wall-clock material; for fixed inputs the serialized report is byte-identical
across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .carved import CarvedRecord

SCHEMA = "recon-report/1"
FIELD_LEVEL_LABEL = "authorized (field-level)"


@dataclass
class UpdatePair:
    """A deleted before-image paired with an active after-image of one key."""

    deleted: CarvedRecord
    active: CarvedRecord
    # Canonical texts of other same-key candidates that were not chosen when
    # several active records could have completed this pair.
    alternates: list[str] = field(default_factory=list)


@dataclass
class AttributionStats:
    deletes_matched: int = 0
    inserts_matched: int = 0
    updates_matched: int = 0
    field_level_matched: int = 0

    def to_json_obj(self) -> dict[str, int]:
        return {
            "deletes_matched": self.deletes_matched,
            "inserts_matched": self.inserts_matched,
            "updates_matched": self.updates_matched,
            "field_level_matched": self.field_level_matched,
        }


def _record_obj(rec: CarvedRecord) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "key": rec.key,
        "value": {"kind": rec.value.kind, "text": rec.value.text},
        "status": rec.status,
    }
    if rec.page_id is not None:
        obj["page_id"] = rec.page_id
    if rec.version_seq is not None:
        obj["version_seq"] = rec.version_seq
    return obj


@dataclass
class ReconReport:
    """Final reconciliation output.

    r_del / r_ins / r_upd are pairwise disjoint by (key, value, status);
    attributed tallies the carved state changes the log explains. provenance
    holds input digests and tool identity when the caller supplies them.
    """

    mode: str
    r_del: list[CarvedRecord] = field(default_factory=list)
    r_ins: list[CarvedRecord] = field(default_factory=list)
    r_upd: list[UpdatePair] = field(default_factory=list)
    attributed: AttributionStats = field(default_factory=AttributionStats)
    field_level_attributions: list[dict[str, Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def finding_count(self) -> int:
        return len(self.r_del) + len(self.r_ins) + len(self.r_upd)

    def to_json_obj(self) -> dict[str, Any]:
        updates = []
        for pair in self.r_upd:
            obj: dict[str, Any] = {
                "key": pair.deleted.key,
                "before": _record_obj(pair.deleted),
                "after": _record_obj(pair.active),
            }
            if pair.alternates:
                obj["alternate_after_values"] = list(pair.alternates)
            updates.append(obj)
        return {
            "schema": SCHEMA,
            "mode": self.mode,
            "findings": {
                "unattributed_deletes": [_record_obj(r) for r in self.r_del],
                "unattributed_inserts": [_record_obj(r) for r in self.r_ins],
                "unattributed_updates": updates,
            },
            "attributed": self.attributed.to_json_obj(),
            "field_level_attributions": self.field_level_attributions,
            "notes": self.notes,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        """Human-readable summary table."""
        lines = [
            f"reconciliation report ({self.mode} mode)",
            f"  unattributed deletes: {len(self.r_del)}",
            f"  unattributed inserts: {len(self.r_ins)}",
            f"  unattributed updates: {len(self.r_upd)}",
            "  attributed: "
            + ", ".join(f"{k}={v}" for k, v in self.attributed.to_json_obj().items()),
        ]

        def fmt_page(rec: CarvedRecord) -> str:
            return f" [page {rec.page_id}]" if rec.page_id is not None else ""

        for rec in self.r_del:
            lines.append(f"  DELETE? {rec.key} = {rec.value.text}{fmt_page(rec)}")
        for rec in self.r_ins:
            lines.append(f"  INSERT? {rec.key} = {rec.value.text}{fmt_page(rec)}")
        for pair in self.r_upd:
            lines.append(
                f"  UPDATE? {pair.deleted.key}: {pair.deleted.value.text} -> "
                f"{pair.active.value.text}{fmt_page(pair.active)}"
            )
        for note in self.notes:
            lines.append(f"  note: {note}")
        return "\n".join(lines) + "\n"
