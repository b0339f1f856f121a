"""Scripted tamper scenarios used by the acceptance suite and the CLI.

Each builder returns a complete workload script plus the engine selection.
The scripts shrink the population to desk scale while keeping the exact
operation ranges that determine the finding counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import dataset
from .workload import WorkloadStep


@dataclass
class Scenario:
    name: str
    engine: str
    cow: bool
    steps: list[WorkloadStep] = field(default_factory=list)
    description: str = ""


def unlogged_deletes_append(n_customers: int = 3000) -> Scenario:
    """Append engine, history preserved: 21 logged deletes then 10 unlogged."""
    steps = [
        WorkloadStep("insert", key, value)
        for key, value in dataset.customer_rows(n_customers)
    ]
    steps += [
        WorkloadStep("delete", dataset.customer_key(i)) for i in range(100, 121)
    ]
    steps += [
        WorkloadStep("delete", dataset.customer_key(i), logged=False)
        for i in range(121, 131)
    ]
    steps.append(WorkloadStep("snapshot", "after"))
    return Scenario(
        name="exp2a",
        engine="append",
        cow=False,
        steps=steps,
        description="unlogged deletions with history preserved (no maintenance)",
    )


def post_pack_tampering(n_customers: int = 3000) -> Scenario:
    """Append engine: unlogged update + insert concealed by a pack."""
    steps = [
        WorkloadStep("insert", key, value)
        for key, value in dataset.customer_rows(n_customers)
    ]
    steps.append(
        WorkloadStep("update", dataset.customer_key(200), "MALICIOUS_UPDATE", logged=False)
    )
    steps.append(WorkloadStep("insert", "Customer#999999", "ROGUE_AGENT", logged=False))
    steps.append(WorkloadStep("pack"))
    steps.append(WorkloadStep("snapshot", "after"))
    return Scenario(
        name="exp2b",
        engine="append",
        cow=False,
        steps=steps,
        description="unlogged update and insert followed by pack (history erased)",
    )


def updated_city(i: int) -> str:
    return dataset.supplier_city(i) + "_v2"


def cow_update_reuse(n_suppliers: int = 2000, burst: int = 500) -> Scenario:
    """CoW emulation: pinned reader preserves pre-update frames at t1; a
    post-unpin insert burst forces extent reuse before t2."""
    steps = [
        WorkloadStep("insert", key, value)
        for key, value in dataset.supplier_rows(n_suppliers)
    ]
    steps.append(WorkloadStep("open_pin_reader"))
    steps += [
        WorkloadStep("update", dataset.supplier_key(i), updated_city(i))
        for i in range(200, 221)
    ]
    steps += [
        WorkloadStep("update", dataset.supplier_key(i), updated_city(i), logged=False)
        for i in range(221, 231)
    ]
    steps.append(WorkloadStep("snapshot", "t1"))
    steps.append(WorkloadStep("close_pin_reader"))
    steps += [
        WorkloadStep("insert", dataset.supplier_key(20000 + j), dataset.supplier_city(20000 + j))
        for j in range(1, burst + 1)
    ]
    steps.append(WorkloadStep("snapshot", "t2"))
    return Scenario(
        name="exp3",
        engine="append",
        cow=True,
        steps=steps,
        description="unlogged updates under a pinned reader, then freelist-style reuse",
    )


def inplace_edit(n_parts: int = 2000) -> Scenario:
    """Page engine: unlogged in-place edit hidden behind logged same-page deletes."""
    steps = [
        WorkloadStep("insert", key, value) for key, value in dataset.part_rows(n_parts)
    ]
    steps.append(WorkloadStep("snapshot", "before"))
    steps.append(WorkloadStep("update", dataset.part_key(500), "SM PKG", logged=False))
    steps.append(WorkloadStep("delete", dataset.part_key(501)))
    steps.append(WorkloadStep("delete", dataset.part_key(502)))
    steps.append(WorkloadStep("snapshot", "after"))
    return Scenario(
        name="exp4",
        engine="page",
        cow=False,
        steps=steps,
        description="unlogged in-place edit plus logged same-page deletions",
    )


SCENARIOS = {
    "exp2a": unlogged_deletes_append,
    "exp2b": post_pack_tampering,
    "exp3": cow_update_reuse,
    "exp4": inplace_edit,
}
