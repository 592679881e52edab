"""Stratified 2x2 count data: tables, datasets, parsing, and filtering.

Each stratum is a 2x2 contingency table crossing group membership (in the
group G / not in G) with mention status (mentioned / not mentioned):

             mentioned   not mentioned
    in G         a             b
    not in G     c             d

Counts are non-negative integers; a dataset is an ordered collection of
labelled strata plus diagnostics for strata excluded from estimation.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, replace

EXCLUDED_NO_MENTIONED = "no mentioned articles"
EXCLUDED_NO_NOT_MENTIONED = "no unmentioned articles"

_CSV_HEADER = ("stratum", "a", "b", "c", "d")


class ParseError(ValueError):
    """A CSV or JSON payload does not match the expected schema."""


class NoInformativeStrataError(ValueError):
    """Every stratum has an empty mentioned or not-mentioned column."""


def _check_count(owner: str, name: str, value: object) -> int:
    # numpy integer scalars are welcome; bools and floats are not
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{owner}: count {name!r} must be an integer, got {value!r}")
    if value < 0:
        raise ValueError(f"{owner}: count {name!r} must be non-negative, got {value}")
    return int(value)


@dataclass(frozen=True)
class StratumTable:
    """One labelled 2x2 contingency table."""

    label: str
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        if not isinstance(self.label, str) or not self.label:
            raise ValueError(f"stratum label must be a non-empty string, got {self.label!r}")
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, _check_count(f"stratum {self.label!r}", name, getattr(self, name)))
        if self.n == 0:
            raise ValueError(f"stratum {self.label!r} is empty (all four counts are zero)")

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def n_mentioned(self) -> int:
        return self.a + self.c

    @property
    def n_not_mentioned(self) -> int:
        return self.b + self.d

    def cells(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def transposed(self) -> "StratumTable":
        """Swap the group axis with the mention axis (b and c trade places)."""
        return replace(self, b=self.c, c=self.b)


@dataclass(frozen=True)
class StratifiedDataset:
    """Ordered strata plus (table, reason) diagnostics for excluded strata."""

    strata: tuple[StratumTable, ...]
    excluded: tuple[tuple[StratumTable, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "strata", tuple(self.strata))
        object.__setattr__(self, "excluded", tuple(self.excluded))
        if not self.strata:
            raise ValueError("a dataset needs at least one stratum")
        seen: set[str] = set()
        for table in list(self.strata) + [t for t, _ in self.excluded]:
            if table.label in seen:
                raise ValueError(f"duplicate stratum label {table.label!r}")
            seen.add(table.label)

    @property
    def k(self) -> int:
        return len(self.strata)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.strata)

    def __iter__(self):
        return iter(self.strata)

    def __len__(self) -> int:
        return len(self.strata)


@dataclass(frozen=True)
class CrossTableRow:
    """One stratum in group-vs-world layout.

    The second row of the source table holds whole-population (world) totals
    rather than the complement group, so the world cells must dominate the
    group cells.
    """

    label: str
    g_mentioned: int
    g_not_mentioned: int
    world_mentioned: int
    world_not_mentioned: int

    def __post_init__(self) -> None:
        for name in ("g_mentioned", "g_not_mentioned", "world_mentioned", "world_not_mentioned"):
            object.__setattr__(
                self, name, _check_count(f"cross-table row {self.label!r}", name, getattr(self, name))
            )
        if self.world_mentioned < self.g_mentioned:
            raise ValueError(
                f"cross-table row {self.label!r}: world_mentioned ({self.world_mentioned}) "
                f"is smaller than g_mentioned ({self.g_mentioned})"
            )
        if self.world_not_mentioned < self.g_not_mentioned:
            raise ValueError(
                f"cross-table row {self.label!r}: world_not_mentioned ({self.world_not_mentioned}) "
                f"is smaller than g_not_mentioned ({self.g_not_mentioned})"
            )


def from_cross_table(row: CrossTableRow) -> StratumTable:
    """Convert a group-vs-world row to a contingency table by differencing."""
    return StratumTable(
        label=row.label,
        a=row.g_mentioned,
        b=row.g_not_mentioned,
        c=row.world_mentioned - row.g_mentioned,
        d=row.world_not_mentioned - row.g_not_mentioned,
    )


def to_cross_table(table: StratumTable) -> CrossTableRow:
    """Rebuild the group-vs-world row whose difference form is ``table``."""
    return CrossTableRow(
        label=table.label,
        g_mentioned=table.a,
        g_not_mentioned=table.b,
        world_mentioned=table.n_mentioned,
        world_not_mentioned=table.n_not_mentioned,
    )


def parse_csv(text: str | bytes) -> StratifiedDataset:
    """Parse ``stratum,a,b,c,d`` CSV text into a dataset, in file order.

    No filtering is applied. Raises :class:`ParseError` naming the line (and
    field, where applicable) for malformed rows, duplicate labels, or an
    empty body.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    rows: list[tuple[int, str]] = [(i, line) for i, line in enumerate(lines, start=1) if line.strip()]
    if not rows:
        raise ParseError("empty input: expected a 'stratum,a,b,c,d' header")

    header_no, header = rows[0]
    if tuple(p.strip() for p in header.split(",")) != _CSV_HEADER:
        raise ParseError(f"line {header_no}: expected header 'stratum,a,b,c,d', got {header.strip()!r}")
    if len(rows) == 1:
        raise ParseError("empty body: no data rows after the header")

    strata: list[StratumTable] = []
    seen: set[str] = set()
    for lineno, line in rows[1:]:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 5:
            raise ParseError(f"line {lineno}: expected 5 comma-separated fields, got {len(parts)}")
        label = parts[0]
        if not label:
            raise ParseError(f"line {lineno}: empty stratum label")
        if label in seen:
            raise ParseError(f"line {lineno}: duplicate stratum label {label!r}")
        seen.add(label)
        counts = {}
        for name, field in zip(("a", "b", "c", "d"), parts[1:]):
            try:
                value = int(field, 10)
            except ValueError:
                raise ParseError(
                    f"line {lineno}: field {name!r} must be a non-negative integer, got {field!r}"
                ) from None
            if value < 0:
                raise ParseError(f"line {lineno}: field {name!r} must be non-negative, got {value}")
            counts[name] = value
        try:
            strata.append(StratumTable(label=label, **counts))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return StratifiedDataset(tuple(strata))


def parse_json(text: str | bytes) -> StratifiedDataset:
    """Parse a JSON array of ``{"stratum", "a", "b", "c", "d"}`` objects.

    Yields the same dataset as the equivalent CSV. Raises
    :class:`ParseError` naming the entry and offending key on schema
    violations.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ParseError(f"expected a JSON array of stratum objects, got {type(data).__name__}")
    if not data:
        raise ParseError("empty body: the JSON array has no entries")

    strata: list[StratumTable] = []
    seen: set[str] = set()
    for i, item in enumerate(data, start=1):
        if not isinstance(item, dict):
            raise ParseError(f"entry {i}: expected an object, got {type(item).__name__}")
        for key in ("stratum", "a", "b", "c", "d"):
            if key not in item:
                raise ParseError(f"entry {i}: missing key {key!r}")
        label = item["stratum"]
        if not isinstance(label, str) or not label:
            raise ParseError(f"entry {i}: key 'stratum' must be a non-empty string, got {label!r}")
        if label in seen:
            raise ParseError(f"entry {i}: duplicate stratum label {label!r}")
        seen.add(label)
        counts = {}
        for name in ("a", "b", "c", "d"):
            value = item[name]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParseError(f"entry {i}: key {name!r} must be an integer count, got {value!r}")
            if value < 0:
                raise ParseError(f"entry {i}: key {name!r} must be non-negative, got {value}")
            counts[name] = value
        try:
            strata.append(StratumTable(label=label, **counts))
        except ValueError as exc:
            raise ParseError(f"entry {i}: {exc}") from None
    return StratifiedDataset(tuple(strata))


def serialize_csv(ds: StratifiedDataset) -> str:
    """Render the retained strata as canonical CSV (exclusions are not kept)."""
    lines = [",".join(_CSV_HEADER)]
    for t in ds.strata:
        if "," in t.label or "\n" in t.label:
            raise ValueError(f"label {t.label!r} cannot be serialized to unquoted CSV")
        lines.append(f"{t.label},{t.a},{t.b},{t.c},{t.d}")
    return "\n".join(lines) + "\n"


def serialize_json(ds: StratifiedDataset) -> str:
    """Render the retained strata as a JSON array."""
    return json.dumps(
        [{"stratum": t.label, "a": t.a, "b": t.b, "c": t.c, "d": t.d} for t in ds.strata],
        indent=2,
    )


def filter_informative(ds: StratifiedDataset) -> StratifiedDataset:
    """Move strata with an empty mentioned or not-mentioned column to ``excluded``.

    Such strata carry no information about the association and would put 0/0
    terms into the variance components, so they are excluded before any
    estimation; the point estimators are insensitive to the removal. Strata
    with an empty *row* (a+b = 0 or c+d = 0) are retained: they simply
    contribute zero weight. Idempotent.
    """
    kept: list[StratumTable] = []
    dropped: list[tuple[StratumTable, str]] = []
    for t in ds.strata:
        if t.n_mentioned == 0:
            dropped.append((t, EXCLUDED_NO_MENTIONED))
        elif t.n_not_mentioned == 0:
            dropped.append((t, EXCLUDED_NO_NOT_MENTIONED))
        else:
            kept.append(t)
    if not kept:
        raise NoInformativeStrataError(
            "no informative strata: every stratum has an empty mentioned or not-mentioned column"
        )
    return StratifiedDataset(tuple(kept), ds.excluded + tuple(dropped))
