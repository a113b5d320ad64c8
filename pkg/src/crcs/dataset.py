"""Binary record storage and support queries.

Every item is stored as a column bitset packed into a Python ``int`` (bit ``i``
set when record ``i`` has the item), so the support of a pattern is the
popcount of the AND of its item columns.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InputError, ParseError, UndefinedStatisticError

MISSING_TOKENS = frozenset({"", "?", "NA", "N/A", "nan", "NaN"})
BINARY_TOKENS = frozenset({"0", "1"})

Pattern = tuple  # strictly ascending tuple of item ids


@dataclass(frozen=True)
class Item:
    index: int
    name: str
    attribute_group: str | None = None


@dataclass
class LoadSummary:
    n_records: int
    n_items: int
    response: str
    groups: dict = field(default_factory=dict)
    missing_cells: int = 0
    binned_columns: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_records": self.n_records,
                "item_count": self.n_items,
                "response": self.response,
                "groups": self.groups,
                "missing_cells": self.missing_cells,
                "binned_columns": self.binned_columns,
            },
            sort_keys=True,
        )


def bits_from_bool(column) -> int:
    packed = np.packbits(np.asarray(column, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def bits_to_indices(bits: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.flatnonzero(np.unpackbits(raw, bitorder="little")[:n])


def bits_to_bool(bits: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def make_pattern(items: Iterable[int]) -> Pattern:
    p = tuple(sorted(set(int(i) for i in items)))
    if not p:
        raise ValueError("a pattern needs at least one item")
    return p


class Dataset:
    """Immutable binary dataset with one designated response item.

    ``matrix`` is an ``n x m`` read-only boolean array; ``columns`` holds the
    same data as per-item bitsets.
    """

    def __init__(self, matrix, items: Sequence[Item], response: int):
        matrix = np.array(matrix, dtype=bool, copy=True)
        if matrix.ndim != 2:
            raise InputError("record matrix must be two-dimensional")
        n, m = matrix.shape
        if n < 1:
            raise InputError("dataset has no records")
        if len(items) != m:
            raise ValueError(f"{len(items)} items for {m} columns")
        names = [it.name for it in items]
        if len(set(names)) != m:
            raise ValueError("item names must be unique")
        if any(it.index != j for j, it in enumerate(items)):
            raise ValueError("item indices must be dense 0..m-1 in column order")
        if not 0 <= response < m:
            raise ValueError(f"response id {response} out of range")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.items = tuple(items)
        self.response = int(response)
        self.n_records = n
        self.columns = tuple(bits_from_bool(matrix[:, j]) for j in range(m))
        self.all_bits = (1 << n) - 1
        self.z_bits = self.columns[response]
        self.notz_bits = self.all_bits & ~self.z_bits
        self.n_z = self.z_bits.bit_count()
        self.n_notz = n - self.n_z
        self.predictors = tuple(j for j in range(m) if j != response)
        self._by_name = {it.name: it.index for it in items}
        self.summary: LoadSummary | None = None

    @classmethod
    def from_matrix(cls, matrix, names: Sequence[str], response: str | int, groups=None):
        groups = groups or {}
        items = [Item(j, name, groups.get(name)) for j, name in enumerate(names)]
        resp = response if isinstance(response, int) else list(names).index(response)
        return cls(matrix, items, resp)

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def response_support(self) -> tuple[int, int]:
        return self.n_z, self.n_notz

    def item_id(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"no item named {name!r}") from None

    def names(self, pattern: Iterable[int]) -> list[str]:
        return [self.items[i].name for i in pattern]

    def pattern(self, *names: str) -> Pattern:
        return make_pattern(self.item_id(nm) for nm in names)

    def check_pattern(self, p: Pattern) -> None:
        if not p:
            raise ValueError("empty pattern")
        if any(b <= a for a, b in zip(p, p[1:])):
            raise ValueError(f"pattern {p} is not strictly ascending")
        if p[0] < 0 or p[-1] >= self.n_items:
            raise ValueError(f"pattern {p} has out-of-range ids")
        if self.response in p:
            raise ValueError("pattern contains the response item")

    def cover_bits(self, p: Pattern) -> int:
        bits = self.all_bits
        for i in p:
            bits &= self.columns[i]
        return bits

    def support(self, p: Pattern, with_response: str = "any") -> int:
        """Count records containing every item of ``p``.

        ``with_response`` is ``"z"``, ``"not_z"`` or ``"any"``.
        """
        bits = self.cover_bits(p)
        if with_response == "z":
            bits &= self.z_bits
        elif with_response == "not_z":
            bits &= self.notz_bits
        elif with_response != "any":
            raise ValueError(f"unknown response restriction {with_response!r}")
        return bits.bit_count()

    def covering_set(self, p: Pattern) -> frozenset:
        return frozenset(int(i) for i in bits_to_indices(self.cover_bits(p), self.n_records))

    def exposure_mask(self, p: Pattern) -> np.ndarray:
        return bits_to_bool(self.cover_bits(p), self.n_records)

    def local_support(self, p: Pattern, target: str = "z") -> float:
        total = {"z": self.n_z, "not_z": self.n_notz}.get(target)
        if total is None:
            raise ValueError(f"target must be 'z' or 'not_z', got {target!r}")
        if total == 0:
            raise UndefinedStatisticError(f"local support undefined: no records with {target}")
        return self.support(p, target) / total

    def group_siblings(self, item: int) -> list[int]:
        group = self.items[item].attribute_group
        if group is None:
            return []
        return [it.index for it in self.items if it.attribute_group == group and it.index != item]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([it.name for it in self.items])
            for row in self.matrix.astype(np.uint8):
                w.writerow(row.tolist())

    def __repr__(self):
        return (
            f"Dataset(n_records={self.n_records}, n_items={self.n_items}, "
            f"response={self.items[self.response].name!r}, supp_z={self.n_z})"
        )


def _is_number(s: str) -> bool:
    try:
        v = float(s)
    except ValueError:
        return False
    return math.isfinite(v)


def _bin_edges(values: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)


def load_csv(
    path,
    response_column: str,
    positive_value: str,
    binary_columns: Iterable[str] | None = None,
    bins: int | None = None,
    max_levels: int = 20,
) -> Dataset:
    """Read a categorical CSV and expand it to binary items.

    Columns whose values are all ``0``/``1`` become one item; other columns are
    one-hot expanded into ``column=value`` items sharing an attribute group.
    Numeric columns with more than ``max_levels`` distinct values are treated
    as continuous and rejected unless ``bins`` asks for equi-width binning.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not valid UTF-8") from exc

    if not rows or not any(cell.strip() for cell in rows[0]):
        raise InputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise InputError(f"{path} has a header but no records")
    if len(set(header)) != len(header):
        raise ConfigurationError("duplicate column names in header")
    if response_column not in header:
        raise ConfigurationError(f"response column {response_column!r} not in header {header}")
    declared = set(binary_columns or ())
    unknown = declared - set(header)
    if unknown:
        raise ConfigurationError(f"declared binary columns not in header: {sorted(unknown)}")

    width = len(header)
    for lineno, r in enumerate(body, start=2):
        if len(r) != width:
            raise ParseError(f"expected {width} fields, found {len(r)}", row=lineno)
    cells = [[c.strip() for c in r] for r in body]
    n = len(cells)

    columns: list[np.ndarray] = []
    names: list[str] = []
    groups: dict[str, str] = {}
    group_map: dict[str, list[str]] = {}
    missing = 0
    binned = []
    response_id = None

    for j, col in enumerate(header):
        values = [r[j] for r in cells]
        if col == response_column:
            for lineno, v in enumerate(values, start=2):
                if v in MISSING_TOKENS:
                    raise ParseError("missing response value", row=lineno, column=col)
            response_id = len(names)
            columns.append(np.array([v == positive_value for v in values]))
            names.append(col)
            continue

        present = [v for v in values if v not in MISSING_TOKENS]
        missing += n - len(present)
        distinct = sorted(set(present))

        if col in declared:
            for lineno, v in enumerate(values, start=2):
                if v not in BINARY_TOKENS and v not in MISSING_TOKENS:
                    raise ParseError(f"non-binary value {v!r}", row=lineno, column=col)
        if col in declared or (distinct and set(distinct) <= BINARY_TOKENS):
            columns.append(np.array([v == "1" for v in values]))
            names.append(col)
            continue

        if len(distinct) > max_levels and all(_is_number(v) for v in distinct):
            if not bins:
                raise ConfigurationError(
                    f"column {col!r} looks continuous ({len(distinct)} numeric levels); "
                    "discretise it first or pass bins"
                )
            nums = np.array([float(v) if v not in MISSING_TOKENS else np.nan for v in values])
            edges = _bin_edges(nums[~np.isnan(nums)], bins)
            idx = np.clip(np.digitize(nums, edges[1:-1]), 0, bins - 1)
            labels = [f"{col}=[{edges[b]:.6g},{edges[b + 1]:.6g})" for b in range(bins)]
            for b, label in enumerate(labels):
                columns.append((idx == b) & ~np.isnan(nums))
                names.append(label)
                groups[label] = col
            group_map[col] = labels
            binned.append(col)
            continue

        labels = []
        for v in distinct:
            label = f"{col}={v}"
            columns.append(np.array([x == v for x in values]))
            names.append(label)
            groups[label] = col
            labels.append(label)
        group_map[col] = labels

    if len(set(names)) != len(names):
        raise ConfigurationError("expanded item names collide; rename columns")
    matrix = np.column_stack(columns)
    d = Dataset.from_matrix(matrix, names, response_id, groups)
    d.summary = LoadSummary(
        n_records=n,
        n_items=len(names),
        response=response_column,
        groups=group_map,
        missing_cells=missing,
        binned_columns=binned,
    )
    return d
