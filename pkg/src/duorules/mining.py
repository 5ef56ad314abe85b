"""Frequent-pattern mining and impurity screening into per-class pools.

Mining is class-agnostic: a single FP-growth pass over the rows yields
every conjunction (over distinct attributes, up to the length cap) whose
support clears the threshold. Screening then assigns each pattern to the
class it is positively associated with and keeps the least-impure ones.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .core import Literal, Pattern, pattern_bitmap
from .data import Dataset, Schema, format_rule, parse_rule
from .errors import ConfigError

logger = logging.getLogger(__name__)

CONDITIONAL_ENTROPY = "conditional_entropy"
GINI = "gini"


@dataclass(frozen=True)
class MiningConfig:
    """Knobs for mining and screening.

    min_support below 1 is a fraction of the row count, 1 or above an
    absolute count.
    """

    min_support: float = 0.05
    max_length: int = 4
    pool_cap: int = 150
    impurity: str = CONDITIONAL_ENTROPY

    def __post_init__(self) -> None:
        if self.min_support <= 0:
            raise ConfigError(f"min_support must be > 0, got {self.min_support}")
        if self.max_length < 1:
            raise ConfigError(f"max_length must be >= 1, got {self.max_length}")
        if self.pool_cap < 1:
            raise ConfigError(f"pool_cap must be >= 1, got {self.pool_cap}")
        if self.impurity not in (CONDITIONAL_ENTROPY, GINI):
            raise ConfigError(f"unknown impurity measure {self.impurity!r}")

    def support_count(self, n: int) -> int:
        if self.min_support < 1:
            return max(1, math.ceil(self.min_support * n))
        return int(self.min_support)


@dataclass(frozen=True)
class PatternPool:
    """Screened candidate patterns for one class, ranked by impurity."""

    class_sign: str
    patterns: tuple[Pattern, ...]
    supports: tuple[int, ...]
    impurities: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.class_sign not in ("positive", "negative"):
            raise ConfigError(f"class_sign must be positive/negative, got {self.class_sign!r}")
        if not (len(self.patterns) == len(self.supports) == len(self.impurities)):
            raise ConfigError("patterns, supports and impurities must align")

    def __len__(self) -> int:
        return len(self.patterns)

    def __contains__(self, pattern: Pattern) -> bool:
        return pattern in self.pattern_set

    @cached_property
    def pattern_set(self) -> frozenset[Pattern]:
        return frozenset(self.patterns)

    @cached_property
    def length_counts(self) -> dict[int, int]:
        """Pool size per pattern length."""
        counts: dict[int, int] = {}
        for pattern in self.patterns:
            counts[len(pattern)] = counts.get(len(pattern), 0) + 1
        return counts

    @cached_property
    def max_length(self) -> int:
        return max((len(p) for p in self.patterns), default=0)


class _FPNode:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item: Literal | None, parent: "_FPNode | None"):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict[Literal, _FPNode] = {}


def _build_tree(
    transactions: Iterable[tuple[Sequence[Literal], int]],
    rank: dict[Literal, int],
) -> dict[Literal, list[_FPNode]]:
    """Insert transactions (pre-filtered to frequent items) into an FP-tree;
    returns the header table of per-item node lists."""
    root = _FPNode(None, None)
    header: dict[Literal, list[_FPNode]] = {}
    for items, count in transactions:
        ordered = sorted((it for it in items if it in rank), key=rank.__getitem__)
        node = root
        for item in ordered:
            child = node.children.get(item)
            if child is None:
                child = _FPNode(item, node)
                node.children[item] = child
                header.setdefault(item, []).append(child)
            child.count += count
            node = child
    return header


def _mine_tree(
    header: dict[Literal, list[_FPNode]],
    suffix: tuple[Literal, ...],
    min_support: int,
    budget: int,
    out: dict[frozenset[Literal], int],
) -> None:
    # Items in ascending-support order so each conditional base is small.
    items = sorted(header, key=lambda it: (sum(n.count for n in header[it]), it))
    for item in items:
        nodes = header[item]
        support = sum(n.count for n in nodes)
        itemset = frozenset(suffix + (item,))
        out[itemset] = support
        if budget <= 1:
            continue
        base: list[tuple[list[Literal], int]] = []
        counts: dict[Literal, int] = {}
        for node in nodes:
            path = []
            parent = node.parent
            while parent is not None and parent.item is not None:
                path.append(parent.item)
                parent = parent.parent
            if path:
                path.reverse()
                base.append((path, node.count))
                for it in path:
                    counts[it] = counts.get(it, 0) + node.count
        frequent = [it for it, c in counts.items() if c >= min_support]
        if not frequent:
            continue
        order = sorted(frequent, key=lambda it: (-counts[it], it))
        rank = {it: i for i, it in enumerate(order)}
        sub_header = _build_tree(base, rank)
        _mine_tree(sub_header, suffix + (item,), min_support, budget - 1, out)


def mine_frequent(
    dataset: Dataset, min_support: float, max_length: int
) -> list[Pattern]:
    """All conjunctions of up to max_length literals with support >= the
    threshold, in canonical order.

    Each row carries exactly one literal per attribute, so itemsets that
    repeat an attribute never co-occur and are excluded for free.
    """
    config = MiningConfig(min_support=min_support, max_length=max_length)
    threshold = config.support_count(dataset.n)
    if threshold > dataset.n:
        raise ValueError(f"min_support {threshold} exceeds n={dataset.n}")

    counts: dict[Literal, int] = {}
    for row in dataset.rows:
        for j, v in enumerate(row):
            lit = Literal(j, v)
            counts[lit] = counts.get(lit, 0) + 1
    frequent = [it for it, c in counts.items() if c >= threshold]
    if not frequent:
        return []
    order = sorted(frequent, key=lambda it: (-counts[it], it))
    rank = {it: i for i, it in enumerate(order)}

    transactions = [([Literal(j, v) for j, v in enumerate(row)], 1) for row in dataset.rows]
    header = _build_tree(transactions, rank)
    itemsets: dict[frozenset[Literal], int] = {}
    _mine_tree(header, (), threshold, max_length, itemsets)

    patterns = [Pattern.of(items) for items in itemsets]
    patterns.sort(key=Pattern.sort_key)
    return patterns


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log(1.0 - p))


def impurity(pattern: Pattern, dataset: Dataset, measure: str = CONDITIONAL_ENTROPY) -> float:
    """Label impurity conditioned on the pattern's indicator.

    Both measures weight the two branches (pattern matches / does not)
    by their mass; empty branches contribute nothing.
    """
    if measure not in (CONDITIONAL_ENTROPY, GINI):
        raise ConfigError(f"unknown impurity measure {measure!r}")
    bits = pattern_bitmap(pattern, dataset)
    n = dataset.n
    inside = bits.bit_count()
    pos_inside = (bits & dataset.label_bitmap).bit_count()
    branches = (
        (inside, pos_inside),
        (n - inside, dataset.positive_count - pos_inside),
    )
    total = 0.0
    for size, pos in branches:
        if size == 0:
            continue
        p = pos / size
        if measure == CONDITIONAL_ENTROPY:
            total += (size / n) * _binary_entropy(p)
        else:
            total += (size / n) * 2.0 * p * (1.0 - p)
    return total


def screen(
    patterns: Sequence[Pattern], dataset: Dataset, config: MiningConfig
) -> tuple[PatternPool, PatternPool]:
    """Assign each pattern to the class it is positively associated with,
    rank by impurity, and cap each pool.

    A pattern is a positive candidate iff the positive rate among the rows
    it covers strictly exceeds the base rate; the mirror condition on the
    negative rate routes to the negative pool. Ties in impurity break by
    shorter length, then by literal order.
    """
    base_rate = dataset.positive_count / dataset.n
    candidates: dict[str, list[tuple[float, int, tuple, Pattern, int]]] = {
        "positive": [],
        "negative": [],
    }
    for pattern in patterns:
        bits = pattern_bitmap(pattern, dataset)
        support = bits.bit_count()
        if support == 0:
            continue
        inside_rate = (bits & dataset.label_bitmap).bit_count() / support
        if inside_rate > base_rate:
            sign = "positive"
        elif (1.0 - inside_rate) > (1.0 - base_rate):
            sign = "negative"
        else:
            continue
        score = impurity(pattern, dataset, config.impurity)
        candidates[sign].append((score, len(pattern), pattern.literals, pattern, support))

    pools = []
    for sign in ("positive", "negative"):
        ranked = sorted(candidates[sign])[: config.pool_cap]
        if not ranked:
            logger.warning("screening produced an empty %s pool", sign)
        pools.append(
            PatternPool(
                class_sign=sign,
                patterns=tuple(entry[3] for entry in ranked),
                supports=tuple(entry[4] for entry in ranked),
                impurities=tuple(entry[0] for entry in ranked),
            )
        )
    return pools[0], pools[1]


def pools_to_dict(
    pools: tuple[PatternPool, PatternPool], schema: Schema
) -> dict:
    out = {}
    for pool in pools:
        out[pool.class_sign] = [
            {
                "literals": format_rule(schema, pattern),
                "support": support,
                "impurity": imp,
            }
            for pattern, support, imp in zip(pool.patterns, pool.supports, pool.impurities)
        ]
    return out


def dump_pools(
    pools: tuple[PatternPool, PatternPool], schema: Schema, path: str
) -> None:
    """Write both pools as JSON for pipeline caching."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(pools_to_dict(pools, schema), f, indent=2)


def load_pools(path: str, schema: Schema) -> tuple[PatternPool, PatternPool]:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    pools = []
    for sign in ("positive", "negative"):
        entries = raw.get(sign, [])
        pools.append(
            PatternPool(
                class_sign=sign,
                patterns=tuple(parse_rule(schema, e["literals"]) for e in entries),
                supports=tuple(int(e["support"]) for e in entries),
                impurities=tuple(float(e["impurity"]) for e in entries),
            )
        )
    return pools[0], pools[1]
