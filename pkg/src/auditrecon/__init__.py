"""auditrecon: expose database operations present in storage but absent from the audit log.

The pipeline reconciles two independent evidence streams: records carved from
raw storage bytes (physical ground truth) and the application audit log
(declared history). Carved state changes the log cannot explain surface as
unattributed deletes, inserts, and updates.
"""

__version__ = "0.1.0"

from .audit_log import (
    AuditEntry,
    LogIndex,
    build_log_index,
    expand_field_ops,
    parse_audit_log,
    serialize_audit_log,
)
from .canon import CanonicalValue, canon, canonical_dumps
from .carved import (
    CarvedRecord,
    CarvedSnapshot,
    Page,
    fingerprint,
    parse_carved,
    serialize_carved,
    snapshot_from_records,
)
from .policy import FileWriteEvent, PolicyDecision, classify_event
from .recon_compare import PageDelta, compare_and_attribute, diff_pages, reconcile_compare
from .recon_single import (
    consolidate_updates,
    detect_unattributed_deletes,
    detect_unattributed_inserts,
    reconcile_single,
)
from .report import AttributionStats, ReconReport, UpdatePair

__all__ = [
    "AttributionStats",
    "AuditEntry",
    "CanonicalValue",
    "CarvedRecord",
    "CarvedSnapshot",
    "FileWriteEvent",
    "LogIndex",
    "Page",
    "PageDelta",
    "PolicyDecision",
    "ReconReport",
    "UpdatePair",
    "build_log_index",
    "canon",
    "canonical_dumps",
    "classify_event",
    "compare_and_attribute",
    "consolidate_updates",
    "detect_unattributed_deletes",
    "detect_unattributed_inserts",
    "diff_pages",
    "expand_field_ops",
    "fingerprint",
    "parse_audit_log",
    "parse_carved",
    "reconcile_compare",
    "reconcile_single",
    "serialize_audit_log",
    "serialize_carved",
    "snapshot_from_records",
]
