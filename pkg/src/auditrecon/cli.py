"""Command-line interface.

Subcommands cover the whole pipeline: ``reconcile`` (single or comparative
analysis, chosen by the number of carved inputs), ``classify`` (snapshot
policy over file-write events), ``workload`` (generate testbench fixtures),
``carve`` (run a reference carver over an engine file), and ``normalize-log``
(debugging dump of the normalized audit log).

Exit codes: 0 success with no findings, 3 findings present, 1 parse or
configuration error, 2 I/O error.

Reports embed SHA-256 digests of every input file so a run can be tied to the
exact evidence it examined.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .audit_log import build_log_index, expand_field_ops, parse_audit_log, serialize_audit_log
from .canon import canon
from .carved import parse_carved, serialize_carved, snapshot_from_records
from .engines.append_store import carve_append
from .engines.page_store import carve_pages
from .engines.scenarios import SCENARIOS
from .engines.workload import run_workload, steps_from_jsonl
from .errors import AuditReconError
from .policy import classify_stream
from .recon_compare import reconcile_compare
from .recon_single import reconcile_single

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_FINDINGS = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); config errors are exit 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="auditrecon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser(
        "reconcile",
        help="cross-check carved storage artifacts against an audit log",
    )
    rec.add_argument("log", help="audit log (JSONL)")
    rec.add_argument("carved", nargs="+", help="one carved interchange file, or two for compare mode")
    rec.add_argument("--mode", choices=["single", "compare"], help="force or validate the analysis mode")
    rec.add_argument("--base-state", help="JSON object mapping keys to full documents, needed when the log carries field-level ops on keys it never inserted")
    rec.add_argument("--fold-keys", action="store_true", help="casefold record and document keys before matching")
    rec.add_argument("--strict-ts", action="store_true", help="reject non-monotone audit timestamps instead of warning")
    rec.add_argument("--key-only-attribution", action="store_true", help="compare mode: attribute by key and op class only, without value agreement")
    rec.add_argument("--report-format", choices=["json", "text"], default="json")
    rec.add_argument("-o", "--output", help="write the report here instead of stdout")

    norm = sub.add_parser("normalize-log", help="dump the normalized audit log (debugging)")
    norm.add_argument("log")
    norm.add_argument("--fold-keys", action="store_true")
    norm.add_argument("--strict-ts", action="store_true")
    norm.add_argument("-o", "--output")

    cls = sub.add_parser("classify", help="classify file-write events and emit snapshot decisions")
    cls.add_argument("events", help="file-write events (JSONL)")
    cls.add_argument("-o", "--output")

    wl = sub.add_parser("workload", help="run a workload script or named scenario against a testbench engine")
    src = wl.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=sorted(SCENARIOS), help="named tamper scenario")
    src.add_argument("--script", help="workload script (JSONL of steps)")
    wl.add_argument("--engine", choices=["append", "page"], default="append")
    wl.add_argument("--cow", action="store_true", help="append engine: copy-on-write emulation")
    wl.add_argument("-o", "--output", required=True, help="fixture directory to create")

    carve = sub.add_parser("carve", help="carve an engine file into interchange records")
    carve.add_argument("store", help="engine database file")
    carve.add_argument("--engine", choices=["append", "page"], required=True)
    carve.add_argument("-o", "--output")

    return parser


def _read_bytes(path: str) -> bytes:
    return Path(path).read_bytes()


def _write_text(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _cmd_reconcile(args) -> int:
    if args.mode == "single" and len(args.carved) != 1:
        raise _UsageError("single mode takes exactly one carved input")
    if args.mode == "compare" and len(args.carved) != 2:
        raise _UsageError("compare mode takes exactly two carved inputs")
    if len(args.carved) not in (1, 2):
        raise _UsageError("reconcile takes one carved input (single) or two (compare)")
    mode = args.mode or ("single" if len(args.carved) == 1 else "compare")

    log_bytes = _read_bytes(args.log)
    carved_bytes = [_read_bytes(p) for p in args.carved]

    entries = parse_audit_log(log_bytes, strict_ts=args.strict_ts, fold_keys=args.fold_keys)
    base_state = {}
    if args.base_state:
        raw = json.loads(_read_bytes(args.base_state))
        if not isinstance(raw, dict):
            raise _UsageError("--base-state must contain a JSON object")
        base_state = {
            (k.casefold() if args.fold_keys else k): canon(v, fold_keys=args.fold_keys)
            for k, v in raw.items()
        }
    index = build_log_index(expand_field_ops(entries, base_state))

    snapshots = [
        parse_carved(data, fold_keys=args.fold_keys) for data in carved_bytes
    ]
    if mode == "single":
        report = reconcile_single(snapshots[0].flat, index)
    else:
        report = reconcile_compare(
            snapshots[0], snapshots[1], index, key_only=args.key_only_attribution
        )

    report.provenance = {
        "tool": "auditrecon",
        "version": __version__,
        "mode": mode,
        "log_sha256": hashlib.sha256(log_bytes).hexdigest(),
        "carved_sha256": [hashlib.sha256(data).hexdigest() for data in carved_bytes],
        "flags": {
            "fold_keys": args.fold_keys,
            "strict_ts": args.strict_ts,
            "key_only_attribution": args.key_only_attribution,
        },
    }
    _write_text(
        report.to_json() if args.report_format == "json" else report.to_text(),
        args.output,
    )
    return EXIT_FINDINGS if report.finding_count else EXIT_OK


def _cmd_normalize_log(args) -> int:
    entries = parse_audit_log(
        _read_bytes(args.log), strict_ts=args.strict_ts, fold_keys=args.fold_keys
    )
    _write_text(serialize_audit_log(entries), args.output)
    return EXIT_OK


def _cmd_classify(args) -> int:
    decisions = classify_stream(_read_bytes(args.events))
    lines = "".join(
        json.dumps(decision.to_json_obj(), separators=(",", ":")) + "\n"
        for _, decision in decisions
    )
    _write_text(lines, args.output)
    return EXIT_OK


def _cmd_workload(args) -> int:
    if args.scenario:
        scenario = SCENARIOS[args.scenario]()
        steps, engine, cow = scenario.steps, scenario.engine, scenario.cow
    else:
        steps = steps_from_jsonl(_read_bytes(args.script))
        engine, cow = args.engine, args.cow
    result = run_workload(steps, engine, cow=cow)
    result.write(args.output)
    return EXIT_OK


def _cmd_carve(args) -> int:
    data = _read_bytes(args.store)
    if args.engine == "append":
        snapshot = snapshot_from_records(carve_append(data))
    else:
        snapshot = carve_pages(data)
    _write_text(serialize_carved(snapshot), args.output)
    return EXIT_OK


_COMMANDS = {
    "reconcile": _cmd_reconcile,
    "normalize-log": _cmd_normalize_log,
    "classify": _cmd_classify,
    "workload": _cmd_workload,
    "carve": _cmd_carve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"auditrecon: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AuditReconError as exc:
        print(f"auditrecon: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"auditrecon: invalid JSON input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"auditrecon: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
