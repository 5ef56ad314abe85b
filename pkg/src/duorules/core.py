"""Literals, patterns, rule sets, and their coverage semantics.

A literal is an (attribute, value) pair over integer-encoded categorical
data; a pattern is a conjunction of literals on distinct attributes; a
rule set is a disjunction of patterns. Coverage over a dataset is kept as
a bitmap (a Python int, bit i = row i), so that rule-set coverage is an
OR-reduction over cached per-pattern bitmaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import SchemaMismatchError


class Literal(NamedTuple):
    """Atomic condition row[attribute] == value on encoded data."""

    attribute: int
    value: int


@dataclass(frozen=True)
class Pattern:
    """Conjunction of literals, canonically ordered by attribute index.

    Two literals on the same attribute are rejected at construction:
    with distinct values the conjunction is unsatisfiable, with equal
    values it is redundant. Canonical ordering makes structural equality
    coincide with semantic equality.
    """

    literals: tuple[Literal, ...]

    def __post_init__(self) -> None:
        if not self.literals:
            raise ValueError("a pattern needs at least one literal")
        attrs = [lit.attribute for lit in self.literals]
        if len(set(attrs)) != len(attrs):
            raise ValueError(f"pattern repeats an attribute: {self.literals}")
        if attrs != sorted(attrs):
            raise ValueError("literals must be in ascending attribute order; use Pattern.of()")

    @classmethod
    def of(cls, literals: Iterable[tuple[int, int]]) -> "Pattern":
        """Build a pattern from (attribute, value) pairs in any order."""
        lits = tuple(sorted(Literal(a, v) for a, v in literals))
        return cls(lits)

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def sort_key(self) -> tuple[int, tuple[Literal, ...]]:
        """Canonical ordering: by length, then by literal tuple."""
        return (len(self.literals), self.literals)

    def __str__(self) -> str:
        return " & ".join(f"a{lit.attribute}={lit.value}" for lit in self.literals)


@dataclass(frozen=True)
class RuleSet:
    """Deduplicated set of patterns; covers a row iff any pattern matches."""

    patterns: frozenset[Pattern] = frozenset()

    @classmethod
    def of(cls, patterns: Iterable[Pattern]) -> "RuleSet":
        return cls(frozenset(patterns))

    def ordered(self) -> list[Pattern]:
        """Patterns in canonical order (deterministic across runs)."""
        return sorted(self.patterns, key=Pattern.sort_key)

    def with_pattern(self, pattern: Pattern) -> "RuleSet":
        return RuleSet(self.patterns | {pattern})

    def without_pattern(self, pattern: Pattern) -> "RuleSet":
        return RuleSet(self.patterns - {pattern})

    def __len__(self) -> int:
        return len(self.patterns)

    def __contains__(self, pattern: Pattern) -> bool:
        return pattern in self.patterns

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self.ordered())


@dataclass(frozen=True)
class RuleSetPair:
    """The model: one rule set describing each class."""

    positive: RuleSet = field(default_factory=RuleSet)
    negative: RuleSet = field(default_factory=RuleSet)


def pattern_matches(pattern: Pattern, row: Sequence[int]) -> bool:
    """True iff every literal of the pattern holds on the encoded row."""
    for attribute, value in pattern.literals:
        if attribute >= len(row):
            raise SchemaMismatchError(
                f"literal references attribute {attribute} but row has {len(row)} attributes"
            )
        if row[attribute] != value:
            return False
    return True


def ruleset_covers(ruleset: RuleSet, row: Sequence[int]) -> bool:
    """True iff at least one pattern matches; the empty rule set covers nothing."""
    return any(pattern_matches(p, row) for p in ruleset.patterns)


def pattern_bitmap(pattern: Pattern, dataset) -> int:
    """Coverage bitmap of one pattern, cached on the dataset.

    The pattern bitmap is the AND of the per-literal bitmaps that the
    dataset precomputes at construction.
    """
    cache = dataset.pattern_bitmap_cache
    bits = cache.get(pattern)
    if bits is None:
        bits = dataset.all_rows_bitmap
        for attribute, value in pattern.literals:
            bits &= dataset.literal_bitmap(attribute, value)
            if not bits:
                break
        cache[pattern] = bits
    return bits


def coverage_bitmap(ruleset: RuleSet, dataset) -> int:
    """Coverage bitmap of a rule set: OR over member-pattern bitmaps."""
    bits = 0
    for pattern in ruleset.patterns:
        bits |= pattern_bitmap(pattern, dataset)
    return bits


def select_bit(mask: int, k: int) -> int:
    """Index of the k-th (0-based) set bit of mask, scanning from bit 0."""
    if k < 0:
        raise ValueError("k must be non-negative")
    pos = 0
    while mask:
        limb = mask & 0xFFFFFFFFFFFFFFFF
        c = limb.bit_count()
        if k < c:
            while True:
                if limb & 1:
                    if k == 0:
                        return pos
                    k -= 1
                limb >>= 1
                pos += 1
        k -= c
        mask >>= 64
        pos += 64
    raise ValueError("k exceeds the number of set bits")


def bitmap_indices(mask: int) -> list[int]:
    """Row indices of all set bits, ascending."""
    out = []
    pos = 0
    while mask:
        limb = mask & 0xFFFFFFFFFFFFFFFF
        while limb:
            low = limb & -limb
            out.append(pos + low.bit_length() - 1)
            limb ^= low
        mask >>= 64
        pos += 64
    return out
