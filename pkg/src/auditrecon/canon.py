"""Value canonicalization.

Every value that flows through reconciliation, whether it came from an audit
log line or from a carved storage record, is normalized into a
:class:`CanonicalValue` first. Two values match if and only if their canonical
forms are byte-equal, which makes comparison immune to JSON key order,
insignificant whitespace, and the two accepted wire encodings of documents
(native objects vs. serialized strings with escaped quotes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .errors import CanonError

SCALAR = "scalar"
DOCUMENT = "document"


@dataclass(frozen=True)
class CanonicalValue:
    """Comparison-safe representation of a scalar or document value.

    kind is "scalar" (text is the raw bytes, verbatim) or "document" (text is
    the canonical serialization: keys sorted ascending by byte value at every
    nesting level, no insignificant whitespace). Equality is plain field
    equality, i.e. byte equality of (kind, text).
    """

    kind: str
    text: str

    def is_document(self) -> bool:
        return self.kind == DOCUMENT

    def parsed(self) -> Any:
        """Parse a document back into Python objects. Scalars return text."""
        if self.kind == DOCUMENT:
            return json.loads(self.text)
        return self.text

    def to_json_obj(self) -> Any:
        """Value as it is embedded in JSONL output (native object or string)."""
        return self.parsed()


def _fold_doc_keys(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k).casefold(): _fold_doc_keys(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_fold_doc_keys(v) for v in obj]
    return obj


def canonical_dumps(obj: Any) -> str:
    """Serialize parsed JSON deterministically: sorted keys, no whitespace.

    Numbers normalize through the parse/dump cycle: integers lose redundant
    signs (-0 becomes 0), floats take Python's shortest round-trip form.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canon(value: Any, *, fold_keys: bool = False) -> CanonicalValue:
    """Normalize a raw value into its canonical form.

    Accepts the encodings both evidence streams produce:

    * dict / list — a native document, re-serialized canonically;
    * str — promoted to a document only if the whole string parses as a JSON
      object or array (the serialized-with-escaped-quotes encoding); any other
      string is a scalar and is kept byte-for-byte;
    * bool / int / float — scalar, rendered as its canonical JSON token;
    * an existing CanonicalValue passes through unchanged (idempotence).

    fold_keys additionally casefolds document keys at every nesting level.
    """
    if isinstance(value, CanonicalValue):
        return value
    if isinstance(value, (dict, list)):
        doc = _fold_doc_keys(value) if fold_keys else value
        try:
            return CanonicalValue(DOCUMENT, canonical_dumps(doc))
        except (TypeError, ValueError) as exc:
            raise CanonError(f"document is not JSON-serializable: {exc}") from exc
    if isinstance(value, bool):
        return CanonicalValue(SCALAR, "true" if value else "false")
    if isinstance(value, (int, float)):
        return CanonicalValue(SCALAR, canonical_dumps(value))
    if isinstance(value, str):
        stripped = value.strip()
        if stripped[:1] in ("{", "["):
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                # Does not parse completely as a document, so it is a scalar.
                return CanonicalValue(SCALAR, value)
            if isinstance(parsed, (dict, list)):
                return canon(parsed, fold_keys=fold_keys)
        return CanonicalValue(SCALAR, value)
    raise CanonError(f"unsupported value type: {type(value).__name__}")


def canon_document(value: Any, *, fold_keys: bool = False) -> CanonicalValue:
    """Like :func:`canon`, but the caller asserts the value is a document.

    Raises CanonError identifying the offending prefix when the value does not
    canonicalize to kind "document".
    """
    if isinstance(value, str):
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError as exc:
            raise CanonError(
                f"expected a document but parsing failed near offset {exc.pos}: "
                f"{value[: exc.pos + 10]!r}"
            ) from exc
        if not isinstance(parsed, (dict, list)):
            raise CanonError(f"expected a document, got {value[:40]!r}")
        return canon(parsed, fold_keys=fold_keys)
    cv = canon(value, fold_keys=fold_keys)
    if cv.kind != DOCUMENT:
        raise CanonError(f"expected a document, got {cv.text[:40]!r}")
    return cv
