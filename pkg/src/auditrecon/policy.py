"""Host-level file-write event classification and snapshot actions.

A write to a database file, observed by host telemetry, lands in one of three
categories: Normal (log only), Maintenance (informational snapshot), or
Suspicious (immediate forensic snapshot). Any single suspicious condition
dominates everything else, and an event matching no profile fails closed to
Suspicious: an unnecessary snapshot is the cheaper mistake.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Any, Iterable, Iterator

from .errors import PolicyError

CATEGORY_NORMAL = "Normal"
CATEGORY_MAINTENANCE = "Maintenance"
CATEGORY_SUSPICIOUS = "Suspicious"

ACTION_LOG_ONLY = "LogOnly"
ACTION_INFO_SNAPSHOT = "InfoSnapshot"
ACTION_FORENSIC_SNAPSHOT = "ForensicSnapshot"

ACTION_FOR_CATEGORY = {
    CATEGORY_NORMAL: ACTION_LOG_ONLY,
    CATEGORY_MAINTENANCE: ACTION_INFO_SNAPSHOT,
    CATEGORY_SUSPICIOUS: ACTION_FORENSIC_SNAPSHOT,
}

_BOOL_FIELDS = (
    "writer_is_service",
    "binary_integrity_ok",
    "audit_enabled",
    "in_maintenance_window",
    "has_change_ticket",
    "drift_anomaly",
    "protected_namespace_write",
    "unexpected_restart_or_config_change",
    "workload_within_bounds",
)


@dataclass(frozen=True)
class FileWriteEvent:
    """One abstracted database-file write observed at the OS boundary.

    Every flag must be set explicitly by the telemetry layer; classification
    never defaults a missing signal.
    """

    writer_is_service: bool
    binary_integrity_ok: bool
    audit_enabled: bool
    in_maintenance_window: bool
    has_change_ticket: bool
    drift_anomaly: bool
    protected_namespace_write: bool
    unexpected_restart_or_config_change: bool
    workload_within_bounds: bool
    migration_id: str | None = None

    def to_json_obj(self) -> dict[str, Any]:
        obj = {name: getattr(self, name) for name in _BOOL_FIELDS}
        obj["migration_id"] = self.migration_id
        return obj


@dataclass(frozen=True)
class PolicyDecision:
    category: str
    action: str
    reasons: tuple[str, ...]

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "category": self.category,
            "action": self.action,
            "reasons": list(self.reasons),
        }


def classify_event(event: FileWriteEvent) -> PolicyDecision:
    """Classify one event; total over the whole flag lattice.

    Suspicious conditions are checked first and any one of them decides the
    outcome. Otherwise a ticketed migration with intact binary and audit is
    Maintenance; a service write with intact binary, audit on, workload in
    bounds, and no maintenance window is Normal; anything left fails closed
    to Suspicious.
    """
    suspicious: list[str] = []
    if not event.audit_enabled:
        suspicious.append("audit_disabled_or_toggled")
    if not event.binary_integrity_ok:
        suspicious.append("binary_integrity_mismatch")
    if not event.writer_is_service:
        suspicious.append("non_service_writer")
    if event.unexpected_restart_or_config_change and not event.in_maintenance_window:
        suspicious.append("unexpected_restart_or_config_change_outside_window")
    if event.drift_anomaly and not event.has_change_ticket:
        suspicious.append("drift_anomaly_without_ticket")
    if event.protected_namespace_write and not event.in_maintenance_window:
        suspicious.append("protected_namespace_write_outside_maintenance")
    if suspicious:
        return PolicyDecision(
            CATEGORY_SUSPICIOUS, ACTION_FORENSIC_SNAPSHOT, tuple(suspicious)
        )

    if (
        event.has_change_ticket
        and event.binary_integrity_ok
        and event.audit_enabled
        and event.migration_id is not None
    ):
        return PolicyDecision(
            CATEGORY_MAINTENANCE,
            ACTION_INFO_SNAPSHOT,
            ("approved_change_ticket_with_migration_id",),
        )

    if (
        event.writer_is_service
        and event.binary_integrity_ok
        and event.audit_enabled
        and event.workload_within_bounds
        and not event.in_maintenance_window
    ):
        return PolicyDecision(
            CATEGORY_NORMAL, ACTION_LOG_ONLY, ("service_writer_within_expected_bounds",)
        )

    return PolicyDecision(
        CATEGORY_SUSPICIOUS, ACTION_FORENSIC_SNAPSHOT, ("no_matching_profile",)
    )


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


def parse_events(raw: bytes | str | IO[bytes] | IO[str] | Iterable[str]) -> list[FileWriteEvent]:
    """Parse a JSONL stream of file-write events.

    Every boolean flag is required; migration_id may be absent or null.
    """
    events: list[FileWriteEvent] = []
    for idx, line in enumerate(_iter_lines(raw)):
        if not line.strip():
            continue
        line_no = idx + 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PolicyError(f"line {line_no}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise PolicyError(f"line {line_no}: event is not a JSON object")
        unknown = set(obj) - set(_BOOL_FIELDS) - {"migration_id"}
        if unknown:
            raise PolicyError(f"line {line_no}: unknown fields {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for name in _BOOL_FIELDS:
            if name not in obj:
                raise PolicyError(
                    f"line {line_no}: missing flag {name!r}; all flags must be explicit"
                )
            if not isinstance(obj[name], bool):
                raise PolicyError(f"line {line_no}: flag {name!r} must be a boolean")
            kwargs[name] = obj[name]
        migration_id = obj.get("migration_id")
        if migration_id is not None and not isinstance(migration_id, str):
            raise PolicyError(f"line {line_no}: migration_id must be a string or null")
        events.append(FileWriteEvent(migration_id=migration_id, **kwargs))
    return events


def classify_stream(
    raw: bytes | str | IO[bytes] | IO[str] | Iterable[str],
) -> list[tuple[FileWriteEvent, PolicyDecision]]:
    return [(event, classify_event(event)) for event in parse_events(raw)]
