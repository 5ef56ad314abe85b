"""Dataset ingestion, categorical encoding, splits, and the synthetic benchmark."""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Pattern, RuleSet, ruleset_covers
from .errors import DataFormatError, SchemaMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schema:
    """Column layout: ordered attributes with their category vocabularies.

    label_values maps the encoded label to its original string:
    label_values[1] is the positive label.
    """

    attributes: tuple[tuple[str, tuple[str, ...]], ...]
    label_column: str
    label_values: tuple[str, str]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.attributes]
        if len(set(names)) != len(names):
            raise DataFormatError("attribute names must be unique")
        for name, categories in self.attributes:
            if not categories:
                raise DataFormatError(f"attribute {name!r} has no categories")
        if len(self.label_values) != 2 or self.label_values[0] == self.label_values[1]:
            raise DataFormatError("label must have exactly two distinct values")

    @property
    def attribute_names(self) -> list[str]:
        return [name for name, _ in self.attributes]

    def attribute_index(self, name: str) -> int:
        for i, (attr_name, _) in enumerate(self.attributes):
            if attr_name == name:
                return i
        raise SchemaMismatchError(f"unknown attribute {name!r}")

    def encode_value(self, attribute: int, value: str) -> int:
        categories = self.attributes[attribute][1]
        try:
            return categories.index(value)
        except ValueError:
            raise SchemaMismatchError(
                f"value {value!r} is not a category of attribute "
                f"{self.attributes[attribute][0]!r}"
            ) from None

    def decode_row(self, row: Sequence[int]) -> list[str]:
        return [self.attributes[j][1][v] for j, v in enumerate(row)]

    def literal_string(self, attribute: int, value: int) -> str:
        name, categories = self.attributes[attribute]
        return f"{name}={categories[value]}"


@dataclass(frozen=True)
class Dataset:
    """Encoded observation matrix plus binary labels.

    Immutable after construction. Per-literal coverage bitmaps and the
    label bitmap are precomputed once; per-pattern bitmaps accumulate in
    a cache filled on first use and read-only thereafter.
    """

    schema: Schema
    rows: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]
    literal_bitmaps: dict[tuple[int, int], int] = field(
        init=False, repr=False, compare=False
    )
    pattern_bitmap_cache: dict[Pattern, int] = field(
        init=False, repr=False, compare=False
    )
    label_bitmap: int = field(init=False, repr=False, compare=False)
    all_rows_bitmap: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.rows:
            raise DataFormatError("dataset needs at least one row")
        if len(self.labels) != len(self.rows):
            raise DataFormatError("labels length must equal row count")
        p = len(self.schema.attributes)
        buffers: dict[tuple[int, int], bytearray] = {}
        nbytes = (len(self.rows) + 7) // 8
        label_buf = bytearray(nbytes)
        for i, row in enumerate(self.rows):
            if len(row) != p:
                raise SchemaMismatchError(f"row {i} has {len(row)} cells, schema has {p}")
            byte, bit = i >> 3, i & 7
            for j, v in enumerate(row):
                if not 0 <= v < len(self.schema.attributes[j][1]):
                    raise SchemaMismatchError(
                        f"row {i}: category id {v} invalid for attribute "
                        f"{self.schema.attributes[j][0]!r}"
                    )
                buf = buffers.get((j, v))
                if buf is None:
                    buf = buffers[(j, v)] = bytearray(nbytes)
                buf[byte] |= 1 << bit
            if self.labels[i] not in (0, 1):
                raise DataFormatError(f"label of row {i} is not binary")
            if self.labels[i]:
                label_buf[byte] |= 1 << bit
        object.__setattr__(
            self,
            "literal_bitmaps",
            {key: int.from_bytes(buf, "little") for key, buf in buffers.items()},
        )
        object.__setattr__(self, "pattern_bitmap_cache", {})
        object.__setattr__(self, "label_bitmap", int.from_bytes(label_buf, "little"))
        object.__setattr__(self, "all_rows_bitmap", (1 << len(self.rows)) - 1)

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def p(self) -> int:
        return len(self.schema.attributes)

    @property
    def positive_count(self) -> int:
        return self.label_bitmap.bit_count()

    def literal_bitmap(self, attribute: int, value: int) -> int:
        if not 0 <= attribute < self.p:
            raise SchemaMismatchError(f"attribute index {attribute} out of range")
        if not 0 <= value < len(self.schema.attributes[attribute][1]):
            raise SchemaMismatchError(
                f"value {value} out of range for attribute "
                f"{self.schema.attributes[attribute][0]!r}"
            )
        return self.literal_bitmaps.get((attribute, value), 0)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(
            schema=self.schema,
            rows=tuple(self.rows[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices),
        )


def _read_csv_rows(path: str, delimiter: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    return [h.strip() for h in header], rows


def load_csv(
    path: str,
    label_column: str,
    positive_label: str,
    missing: str = "?",
    delimiter: str = ",",
) -> Dataset:
    """Load a headered CSV, inferring the schema from observed values.

    Categories are assigned ids in order of first appearance. Rows with a
    missing value (the `missing` marker or an empty cell) in any column
    are dropped; the drop count is logged.
    """
    header, raw_rows = _read_csv_rows(path, delimiter)
    if label_column not in header:
        raise DataFormatError(f"label column {label_column!r} not in header {header}")
    label_idx = header.index(label_column)
    attr_indices = [i for i in range(len(header)) if i != label_idx]

    kept: list[list[str]] = []
    dropped = 0
    for row in raw_rows:
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}: row with {len(row)} cells, header has {len(header)}"
            )
        cells = [c.strip() for c in row]
        if any(c == missing or c == "" for c in cells):
            dropped += 1
            continue
        kept.append(cells)
    if dropped:
        logger.warning("%s: dropped %d rows with missing values", path, dropped)
    if not kept:
        raise DataFormatError(f"{path}: no rows left after dropping missing values")

    label_seen = sorted({row[label_idx] for row in kept})
    if len(label_seen) > 2:
        raise DataFormatError(
            f"label column {label_column!r} has {len(label_seen)} distinct values "
            f"({label_seen[:5]}...), expected at most 2"
        )
    if len(label_seen) == 2:
        if positive_label not in label_seen:
            raise DataFormatError(
                f"positive label {positive_label!r} not among observed labels {label_seen}"
            )
        negative_label = label_seen[0] if label_seen[1] == positive_label else label_seen[1]
    elif label_seen == [positive_label]:
        negative_label = f"not-{positive_label}"
    else:
        negative_label = label_seen[0]

    categories: list[list[str]] = [[] for _ in attr_indices]
    seen: list[set[str]] = [set() for _ in attr_indices]
    for row in kept:
        for k, i in enumerate(attr_indices):
            v = row[i]
            if v not in seen[k]:
                seen[k].add(v)
                categories[k].append(v)

    schema = Schema(
        attributes=tuple(
            (header[i], tuple(categories[k])) for k, i in enumerate(attr_indices)
        ),
        label_column=label_column,
        label_values=(negative_label, positive_label),
    )
    encoded_rows = []
    labels = []
    for row in kept:
        encoded_rows.append(
            tuple(categories[k].index(row[i]) for k, i in enumerate(attr_indices))
        )
        labels.append(1 if row[label_idx] == positive_label else 0)
    return Dataset(schema=schema, rows=tuple(encoded_rows), labels=tuple(labels))


def encode_with_schema(
    path: str, schema: Schema, missing: str = "?", delimiter: str = ","
) -> Dataset:
    """Encode a CSV against an existing schema (e.g. a trained model's).

    Unknown categories or absent attribute columns raise SchemaMismatchError.
    """
    header, raw_rows = _read_csv_rows(path, delimiter)
    if schema.label_column not in header:
        raise SchemaMismatchError(f"label column {schema.label_column!r} not in {path}")
    label_idx = header.index(schema.label_column)
    try:
        col_of = {name: header.index(name) for name in schema.attribute_names}
    except ValueError as exc:
        raise SchemaMismatchError(f"{path}: missing attribute column ({exc})") from None

    rows = []
    labels = []
    dropped = 0
    for row in raw_rows:
        cells = [c.strip() for c in row]
        used = [cells[col_of[name]] for name in schema.attribute_names]
        label = cells[label_idx]
        if any(c == missing or c == "" for c in used) or label in (missing, ""):
            dropped += 1
            continue
        rows.append(tuple(schema.encode_value(j, v) for j, v in enumerate(used)))
        if label not in schema.label_values:
            raise SchemaMismatchError(
                f"{path}: label {label!r} not in {schema.label_values}"
            )
        labels.append(schema.label_values.index(label))
    if dropped:
        logger.warning("%s: dropped %d rows with missing values", path, dropped)
    if not rows:
        raise DataFormatError(f"{path}: no usable rows")
    return Dataset(schema=schema, rows=tuple(rows), labels=tuple(labels))


def write_csv(dataset: Dataset, path: str) -> None:
    """Write a dataset back to CSV with decoded category strings."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(dataset.schema.attribute_names + [dataset.schema.label_column])
        for row, label in zip(dataset.rows, dataset.labels):
            writer.writerow(
                dataset.schema.decode_row(row) + [dataset.schema.label_values[label]]
            )


def split(
    dataset: Dataset,
    train_fraction: float,
    seed: int,
    stratify: bool = False,
) -> tuple[Dataset, Dataset]:
    """Seeded train/test split; the two parts partition the row indices.

    Unstratified by default; with stratify=True the fraction is applied
    within each label group.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = random.Random(seed)
    if stratify:
        train_idx: list[int] = []
        test_idx: list[int] = []
        for label in (0, 1):
            group = [i for i in range(dataset.n) if dataset.labels[i] == label]
            rng.shuffle(group)
            k = round(train_fraction * len(group))
            train_idx.extend(group[:k])
            test_idx.extend(group[k:])
    else:
        indices = list(range(dataset.n))
        rng.shuffle(indices)
        k = round(train_fraction * dataset.n)
        train_idx, test_idx = indices[:k], indices[k:]
    if not train_idx or not test_idx:
        raise ValueError(
            f"degenerate split: fraction {train_fraction} on {dataset.n} rows "
            "leaves an empty part"
        )
    return dataset.subset(sorted(train_idx)), dataset.subset(sorted(test_idx))


def binary_schema(attribute_names: Sequence[str], label_column: str = "y") -> Schema:
    """All-binary schema with categories "0"/"1" and labels "0"/"1"."""
    return Schema(
        attributes=tuple((name, ("0", "1")) for name in attribute_names),
        label_column=label_column,
        label_values=("0", "1"),
    )


def parse_rule(schema: Schema, conjunction: Sequence[str]) -> Pattern:
    """Parse a rule given as a list of "attribute=value" strings."""
    literals = []
    for term in conjunction:
        name, sep, value = term.partition("=")
        if not sep:
            raise DataFormatError(f"bad literal {term!r}, expected 'attribute=value'")
        attr = schema.attribute_index(name.strip())
        literals.append((attr, schema.encode_value(attr, value.strip())))
    return Pattern.of(literals)


def parse_ruleset(schema: Schema, rules: Iterable[Sequence[str]]) -> RuleSet:
    return RuleSet.of(parse_rule(schema, rule) for rule in rules)


def format_rule(schema: Schema, pattern: Pattern) -> list[str]:
    return [schema.literal_string(lit.attribute, lit.value) for lit in pattern]


# Built-in synthetic benchmark: five binary attributes with three
# generating rules per class.
SYNTHETIC_ATTRIBUTES = ("x1", "x2", "x3", "x4", "x5")
SYNTHETIC_POSITIVE_RULES = (("x1=0", "x2=1"), ("x1=1", "x2=1", "x3=0"), ("x2=0", "x3=0", "x5=1"))
SYNTHETIC_NEGATIVE_RULES = (("x1=1", "x3=1"), ("x1=0", "x2=0", "x4=0"), ("x1=1", "x2=0", "x3=0"))


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator config: true rule pair plus label-noise probabilities.

    Rows covered by both true rule sets are labeled positive with
    probability p_both_positive; rows covered by neither, with
    probability p_neither_positive.
    """

    true_positive_rules: RuleSet
    true_negative_rules: RuleSet
    n: int
    p_both_positive: float
    p_neither_positive: float
    seed: int
    schema: Schema = field(default_factory=lambda: binary_schema(SYNTHETIC_ATTRIBUTES))

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for prob in (self.p_both_positive, self.p_neither_positive):
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"probability {prob} outside [0, 1]")


def default_synthetic_spec(
    n: int = 1000,
    seed: int = 0,
    p_both_positive: float = 0.05,
    p_neither_positive: float = 0.5,
) -> SyntheticSpec:
    schema = binary_schema(SYNTHETIC_ATTRIBUTES)
    return SyntheticSpec(
        true_positive_rules=parse_ruleset(schema, SYNTHETIC_POSITIVE_RULES),
        true_negative_rules=parse_ruleset(schema, SYNTHETIC_NEGATIVE_RULES),
        n=n,
        p_both_positive=p_both_positive,
        p_neither_positive=p_neither_positive,
        seed=seed,
        schema=schema,
    )


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample n rows uniformly (with replacement) and label them by the
    true rule pair, with noisy labels on the overlap and the gap."""
    rng = random.Random(spec.seed)
    sizes = [len(categories) for _, categories in spec.schema.attributes]
    rows = []
    labels = []
    for _ in range(spec.n):
        row = tuple(rng.randrange(size) for size in sizes)
        pos = ruleset_covers(spec.true_positive_rules, row)
        neg = ruleset_covers(spec.true_negative_rules, row)
        if pos and not neg:
            label = 1
        elif neg and not pos:
            label = 0
        elif pos and neg:
            label = 1 if rng.random() < spec.p_both_positive else 0
        else:
            label = 1 if rng.random() < spec.p_neither_positive else 0
        rows.append(row)
        labels.append(label)
    return Dataset(schema=spec.schema, rows=tuple(rows), labels=tuple(labels))


def synthetic_group_counts(spec: SyntheticSpec, dataset: Dataset) -> dict[str, int]:
    """Realized sizes of the four coverage groups under the true rule pair."""
    counts = {"positive_only": 0, "negative_only": 0, "both": 0, "neither": 0}
    for row in dataset.rows:
        pos = ruleset_covers(spec.true_positive_rules, row)
        neg = ruleset_covers(spec.true_negative_rules, row)
        if pos and not neg:
            counts["positive_only"] += 1
        elif neg and not pos:
            counts["negative_only"] += 1
        elif pos and neg:
            counts["both"] += 1
        else:
            counts["neither"] += 1
    return counts
