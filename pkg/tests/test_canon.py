"""Canonicalization: golden cases, idempotence, key-order invariance."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auditrecon.canon import CanonicalValue, canon, canon_document
from auditrecon.errors import CanonError

json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(2**53), max_value=2**53),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=20),
)
json_docs = st.recursive(
    json_scalars,
    lambda children: st.one_of(
        st.lists(children, max_size=5),
        st.dictionaries(st.text(max_size=8), children, max_size=5),
    ),
    max_leaves=20,
).filter(lambda v: isinstance(v, (dict, list)))


def test_sorted_keys_and_minimal_whitespace():
    a = canon('{"City":"Plano","Name":"Diana"}')
    b = canon('{ "Name":"Diana", "City":"Plano" }')
    assert a == b
    assert a.text == '{"City":"Plano","Name":"Diana"}'
    assert a.kind == "document"


def test_scalar_kept_verbatim():
    cv = canon("CANADA_00001")
    assert cv.kind == "scalar"
    assert cv.text == "CANADA_00001"


def test_native_and_serialized_encodings_agree():
    native = canon({"Name": "Diana", "City": "Plano"})
    serialized = canon('{"Name": "Diana", "City": "Plano"}')
    assert native == serialized


def test_nested_keys_sorted_at_every_level():
    cv = canon({"b": {"z": 1, "a": {"y": 2, "x": 3}}, "a": [{"k2": 1, "k1": 2}]})
    assert cv.text == '{"a":[{"k1":2,"k2":1}],"b":{"a":{"x":3,"y":2},"z":1}}'


def test_number_normalization():
    assert canon("[1e3, -0, 2.50]").text == "[1000.0,0,2.5]"
    assert canon(42).text == "42"
    assert canon(True).text == "true"


def test_string_that_is_not_fully_a_document_stays_scalar():
    cv = canon('{"a": 1} trailing')
    assert cv.kind == "scalar"
    assert cv.text == '{"a": 1} trailing'


def test_string_encoding_a_bare_scalar_stays_scalar():
    assert canon("42").kind == "scalar"
    assert canon("null").kind == "scalar"


def test_canonicalvalue_passthrough():
    cv = canon({"a": 1})
    assert canon(cv) is cv


def test_canon_document_rejects_scalars():
    with pytest.raises(CanonError):
        canon_document("plain text")
    with pytest.raises(CanonError, match="offset"):
        canon_document('{"a": ')


def test_fold_keys():
    folded = canon({"Name": "Diana", "CITY": {"Sub": 1}}, fold_keys=True)
    # Only keys fold, never values.
    assert folded.text == '{"city":{"sub":1},"name":"Diana"}'
    assert json.loads(folded.text) == {"city": {"sub": 1}, "name": "Diana"}


def test_unsupported_type_errors():
    with pytest.raises(CanonError):
        canon(object())


@settings(max_examples=200)
@given(json_docs)
def test_idempotence(doc):
    once = canon(doc)
    assert canon(once.text) == once
    assert canon(once) == once


def _shuffle_keys(obj, rng: random.Random):
    if isinstance(obj, dict):
        items = [(k, _shuffle_keys(v, rng)) for k, v in obj.items()]
        rng.shuffle(items)
        return dict(items)
    if isinstance(obj, list):
        return [_shuffle_keys(v, rng) for v in obj]
    return obj


@settings(max_examples=200)
@given(json_docs, st.integers(min_value=0, max_value=2**31))
def test_key_order_invariance(doc, seed):
    rng = random.Random(seed)
    assert canon(_shuffle_keys(doc, rng)) == canon(doc)


def test_thousand_random_documents_idempotent_and_order_invariant():
    rng = random.Random(20260810)
    for _ in range(1000):
        depth = rng.randrange(1, 4)

        def build(d):
            if d == 0 or rng.random() < 0.3:
                return rng.choice([rng.randrange(100), f"s{rng.randrange(50)}", None, True])
            if rng.random() < 0.3:
                return [build(d - 1) for _ in range(rng.randrange(4))]
            return {f"k{rng.randrange(10)}": build(d - 1) for _ in range(rng.randrange(1, 5))}

        doc = {f"k{j}": build(depth) for j in range(rng.randrange(1, 6))}
        cv = canon(doc)
        assert canon(cv.text) == cv
        assert canon(_shuffle_keys(doc, rng)) == cv


def test_equality_is_byte_equality_of_kind_and_text():
    assert CanonicalValue("scalar", "{}") != CanonicalValue("document", "{}")
    assert CanonicalValue("scalar", "a") != CanonicalValue("scalar", "a ")
