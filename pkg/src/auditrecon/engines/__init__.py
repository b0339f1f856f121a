"""Miniature storage engines and the workload driver.

These are the ground-truth factory for end-to-end testing: two toy engines
covering the storage dichotomy that matters for detection (history-preserving
append/CoW vs. in-place pages), reference carvers for both file formats, and a
deterministic workload driver that can suppress audit logging per operation
while recording the suppressed operations in a hidden ledger.

The reconciliation modules never read the ledger; it exists only so tests can
check findings against what was actually done.
"""

from .append_store import AppendStore, carve_append, pack_append_store
from .page_store import PageStore, carve_pages
from .workload import WorkloadResult, WorkloadStep, run_workload

__all__ = [
    "AppendStore",
    "PageStore",
    "WorkloadResult",
    "WorkloadStep",
    "carve_append",
    "carve_pages",
    "pack_append_store",
    "run_workload",
]
