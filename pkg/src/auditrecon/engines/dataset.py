"""Synthetic Customer / Supplier / Part rows in star-schema-benchmark style.

Keys follow the ``Table#zero-padded-integer`` convention so desk-scale runs
keep recognizable identifiers, and value assignment is a fixed function of the
row number so scripted scenarios can predict any row's initial value.
"""

from __future__ import annotations

from typing import Iterator

NATIONS = (
    "GERMANY",
    "ALGERIA",
    "ARGENTINA",
    "BRAZIL",
    "CANADA",
    "EGYPT",
    "ETHIOPIA",
    "FRANCE",
    "INDIA",
    "INDONESIA",
    "IRAN",
    "IRAQ",
    "JAPAN",
    "JORDAN",
    "KENYA",
    "MOROCCO",
    "MOZAMBIQUE",
    "PERU",
    "CHINA",
    "ROMANIA",
    "SAUDI ARABIA",
    "VIETNAM",
    "RUSSIA",
    "UNITED KINGDOM",
    "UNITED STATES",
)

PART_COLORS = (
    "azure",
    "blanched",
    "burlywood",
    "chartreuse",
    "cornflower",
    "dark",
    "deep",
    "dim",
    "dodger",
    "firebrick",
    "forest",
    "ghost",
    "goldenrod",
    "hot",
    "indian",
    "lavender",
    "lawn",
    "lemon",
    "light",
    "medium",
)

PART_NOUNS = (
    "almond",
    "antique",
    "aquamarine",
    "bisque",
    "chiffon",
    "spring",
    "coral",
    "cornsilk",
    "cream",
    "cyan",
    "frosted",
    "gainsboro",
    "honeydew",
    "ivory",
    "khaki",
    "linen",
    "magenta",
    "maroon",
    "metallic",
    "midnight",
)


def customer_key(i: int) -> str:
    return f"Customer#{i:09d}"


def customer_nation(i: int) -> str:
    return NATIONS[i % len(NATIONS)]


def supplier_key(i: int) -> str:
    return f"Supplier#{i:09d}"


def supplier_city(i: int) -> str:
    return f"{NATIONS[i % len(NATIONS)]}_{i % 100000:05d}"


def part_key(i: int) -> str:
    return f"part#{i:09d}"


def part_name(i: int) -> str:
    return f"{PART_COLORS[i % len(PART_COLORS)]} {PART_NOUNS[(i // len(PART_COLORS)) % len(PART_NOUNS)]}"


def customer_rows(n: int, start: int = 1) -> Iterator[tuple[str, str]]:
    for i in range(start, start + n):
        yield customer_key(i), customer_nation(i)


def supplier_rows(n: int, start: int = 1) -> Iterator[tuple[str, str]]:
    for i in range(start, start + n):
        yield supplier_key(i), supplier_city(i)


def part_rows(n: int, start: int = 1) -> Iterator[tuple[str, str]]:
    for i in range(start, start + n):
        yield part_key(i), part_name(i)
