"""Posterior scoring of a rule-set pair: taxonomy counts, marginal
likelihood, subset prior, and the annealing objective.

Every observation lands in exactly one of eight cells keyed by its label
and by which of the two rule sets cover it. The marginal likelihood
integrates four Beta-distributed cell-truth rates out of the cell-count
likelihood, leaving a product of Beta-function ratios evaluated in log
space. The prior marginalizes per-length Bernoulli inclusion rates the
same way. The score is the negative log of (likelihood x prior); lower
is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .core import RuleSet, RuleSetPair, coverage_bitmap
from .data import Dataset
from .mining import PatternPool


def log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@dataclass(frozen=True)
class BetaShape:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"Beta shapes must be strictly positive, got {self}")


@dataclass(frozen=True)
class LikelihoodParams:
    """Beta shapes over the four cell-truth rates.

    consensus_pos / consensus_neg govern how often a consensus call is
    right; active and passive govern the label rate inside the two
    ambiguous regions. The defaults strongly favor pure consensus
    regions and stay uninformative about ambiguity.
    """

    consensus_pos: BetaShape = BetaShape(100.0, 1.0)
    consensus_neg: BetaShape = BetaShape(100.0, 1.0)
    active: BetaShape = BetaShape(1.0, 1.0)
    passive: BetaShape = BetaShape(1.0, 1.0)


@dataclass(frozen=True)
class PriorParams:
    """Per-class, per-length Beta shapes over pattern inclusion rates.

    Entry l-1 of each tuple governs patterns of length l; the two tuples
    may differ in length when the classes use different length caps.
    """

    positive: tuple[BetaShape, ...]
    negative: tuple[BetaShape, ...]

    def __post_init__(self) -> None:
        if not self.positive or not self.negative:
            raise ValueError("prior needs shapes for at least length 1")

    @classmethod
    def uniform(cls, max_length: int, alpha: float = 1.0, beta: float = 1.0) -> "PriorParams":
        shapes = tuple(BetaShape(alpha, beta) for _ in range(max_length))
        return cls(positive=shapes, negative=shapes)

    @classmethod
    def default_for(
        cls,
        positive_pool: PatternPool,
        negative_pool: PatternPool,
        alpha: float = 1.0,
    ) -> "PriorParams":
        """Shapes (alpha, m_l) per length: the larger the pool at a length,
        the smaller the prior inclusion rate, discouraging large rule sets."""

        def shapes_for(pool: PatternPool) -> tuple[BetaShape, ...]:
            top = max(pool.max_length, 1)
            return tuple(
                BetaShape(alpha, float(max(pool.length_counts.get(l, 0), 1)))
                for l in range(1, top + 1)
            )

        return cls(positive=shapes_for(positive_pool), negative=shapes_for(negative_pool))


@dataclass(frozen=True)
class TaxonomyCounts:
    """The eight cell counts; sums to the number of observations."""

    ctp: int
    cfp: int
    ctn: int
    cfn: int
    aap: int
    aan: int
    pap: int
    pan: int

    @property
    def total(self) -> int:
        return self.ctp + self.cfp + self.ctn + self.cfn + self.aap + self.aan + self.pap + self.pan

    @property
    def positive_total(self) -> int:
        return self.ctp + self.cfn + self.aap + self.pap

    @property
    def negative_total(self) -> int:
        return self.cfp + self.ctn + self.aan + self.pan

    def as_dict(self) -> dict[str, int]:
        return {
            "CTP": self.ctp,
            "CFP": self.cfp,
            "CTN": self.ctn,
            "CFN": self.cfn,
            "AAP": self.aap,
            "AAN": self.aan,
            "PAP": self.pap,
            "PAN": self.pan,
        }


def counts_from_bitmaps(
    pos_bits: int, neg_bits: int, label_bits: int, all_bits: int
) -> TaxonomyCounts:
    y0 = all_bits & ~label_bits
    only_pos = pos_bits & ~neg_bits
    only_neg = neg_bits & ~pos_bits
    both = pos_bits & neg_bits
    neither = all_bits & ~(pos_bits | neg_bits)
    return TaxonomyCounts(
        ctp=(only_pos & label_bits).bit_count(),
        cfp=(only_pos & y0).bit_count(),
        ctn=(only_neg & y0).bit_count(),
        cfn=(only_neg & label_bits).bit_count(),
        aap=(both & label_bits).bit_count(),
        aan=(both & y0).bit_count(),
        pap=(neither & label_bits).bit_count(),
        pan=(neither & y0).bit_count(),
    )


def taxonomy_counts(pair: RuleSetPair, dataset: Dataset) -> TaxonomyCounts:
    """Classify every observation into its taxonomy cell and count."""
    return counts_from_bitmaps(
        coverage_bitmap(pair.positive, dataset),
        coverage_bitmap(pair.negative, dataset),
        dataset.label_bitmap,
        dataset.all_rows_bitmap,
    )


def log_marginal_likelihood(counts: TaxonomyCounts, params: LikelihoodParams) -> float:
    """Log of the four-factor product of Beta-function ratios.

    Each factor integrates one cell-truth rate against its Beta prior:
    the count playing the "success" role pairs with alpha. For the
    passive region the success event is a negative label on a row
    covered by neither rule set, so pan pairs with passive.alpha.
    """
    cp, cn, a, p = params.consensus_pos, params.consensus_neg, params.active, params.passive
    return (
        log_beta(counts.ctp + cp.alpha, counts.cfp + cp.beta)
        - log_beta(cp.alpha, cp.beta)
        + log_beta(counts.ctn + cn.alpha, counts.cfn + cn.beta)
        - log_beta(cn.alpha, cn.beta)
        + log_beta(counts.aap + a.alpha, counts.aan + a.beta)
        - log_beta(a.alpha, a.beta)
        + log_beta(counts.pan + p.alpha, counts.pap + p.beta)
        - log_beta(p.alpha, p.beta)
    )


def ruleset_length_counts(ruleset: RuleSet) -> dict[int, int]:
    counts: dict[int, int] = {}
    for pattern in ruleset.patterns:
        counts[len(pattern)] = counts.get(len(pattern), 0) + 1
    return counts


def log_subset_prior(
    selected: Mapping[int, int],
    pool_sizes: Mapping[int, int],
    shapes: tuple[BetaShape, ...],
) -> float:
    """Log-probability of selecting exactly this subset from one pool.

    With k_l of the m_l length-l patterns selected, the inclusion-rate
    marginalization gives B(k_l + alpha_l, m_l - k_l + beta_l) / B(alpha_l, beta_l)
    per length; subsets are specific, so no binomial coefficient appears.
    """
    top = max(pool_sizes, default=0)
    if top > len(shapes):
        raise ValueError(
            f"pool contains length-{top} patterns but prior covers lengths 1..{len(shapes)}"
        )
    total = 0.0
    for l, shape in enumerate(shapes, start=1):
        m = pool_sizes.get(l, 0)
        k = selected.get(l, 0)
        if k > m:
            raise ValueError(f"{k} patterns of length {l} selected from a pool of {m}")
        if m == 0:
            continue
        total += log_beta(k + shape.alpha, m - k + shape.beta) - log_beta(shape.alpha, shape.beta)
    return total


def log_prior(
    pair: RuleSetPair,
    pools: tuple[PatternPool, PatternPool],
    params: PriorParams,
) -> float:
    """Joint log prior of the pair; patterns must come from their pools."""
    positive_pool, negative_pool = pools
    for pattern in pair.positive.patterns:
        if pattern not in positive_pool:
            raise ValueError(f"positive rule {pattern} is not in the positive pool")
    for pattern in pair.negative.patterns:
        if pattern not in negative_pool:
            raise ValueError(f"negative rule {pattern} is not in the negative pool")
    return log_subset_prior(
        ruleset_length_counts(pair.positive), positive_pool.length_counts, params.positive
    ) + log_subset_prior(
        ruleset_length_counts(pair.negative), negative_pool.length_counts, params.negative
    )


def score(
    pair: RuleSetPair,
    dataset: Dataset,
    pools: tuple[PatternPool, PatternPool],
    prior_params: PriorParams,
    likelihood_params: LikelihoodParams,
) -> float:
    """Annealing objective: negative log posterior, up to a constant."""
    return -(
        log_marginal_likelihood(taxonomy_counts(pair, dataset), likelihood_params)
        + log_prior(pair, pools, prior_params)
    )


class ScoreContext:
    """Precomputed scorer for the thousands of pair evaluations a search
    performs: caches pattern bitmaps, the constant Beta denominators, and
    the per-length prior terms (which only depend on the selected count).
    """

    def __init__(
        self,
        dataset: Dataset,
        pools: tuple[PatternPool, PatternPool],
        prior_params: PriorParams,
        likelihood_params: LikelihoodParams,
    ):
        self.dataset = dataset
        self.pools = pools
        self.prior_params = prior_params
        self.likelihood_params = likelihood_params
        self._label_bits = dataset.label_bitmap
        self._all_bits = dataset.all_rows_bitmap
        lp = likelihood_params
        self._lik_denominator = (
            log_beta(lp.consensus_pos.alpha, lp.consensus_pos.beta)
            + log_beta(lp.consensus_neg.alpha, lp.consensus_neg.beta)
            + log_beta(lp.active.alpha, lp.active.beta)
            + log_beta(lp.passive.alpha, lp.passive.beta)
        )
        # prior term tables: _prior_terms[sign][l][k] = log term for k selected
        self._prior_terms: dict[str, dict[int, list[float]]] = {}
        for pool, shapes in (
            (pools[0], prior_params.positive),
            (pools[1], prior_params.negative),
        ):
            if pool.max_length > len(shapes):
                raise ValueError(
                    f"{pool.class_sign} pool has length-{pool.max_length} patterns "
                    f"but prior covers lengths 1..{len(shapes)}"
                )
            tables: dict[int, list[float]] = {}
            for l, shape in enumerate(shapes, start=1):
                m = pool.length_counts.get(l, 0)
                base = log_beta(shape.alpha, shape.beta)
                tables[l] = [
                    log_beta(k + shape.alpha, m - k + shape.beta) - base
                    for k in range(m + 1)
                ]
            self._prior_terms[pool.class_sign] = tables

    def ruleset_bits(self, ruleset: RuleSet) -> int:
        return coverage_bitmap(ruleset, self.dataset)

    def counts(self, pos_bits: int, neg_bits: int) -> TaxonomyCounts:
        return counts_from_bitmaps(pos_bits, neg_bits, self._label_bits, self._all_bits)

    def _prior_side(self, sign: str, length_counts: Mapping[int, int]) -> float:
        tables = self._prior_terms[sign]
        total = 0.0
        for l, table in tables.items():
            total += table[length_counts.get(l, 0)]
        return total

    def score_parts(
        self,
        pos_bits: int,
        pos_lengths: Mapping[int, int],
        neg_bits: int,
        neg_lengths: Mapping[int, int],
    ) -> float:
        c = self.counts(pos_bits, neg_bits)
        lp = self.likelihood_params
        log_lik = (
            log_beta(c.ctp + lp.consensus_pos.alpha, c.cfp + lp.consensus_pos.beta)
            + log_beta(c.ctn + lp.consensus_neg.alpha, c.cfn + lp.consensus_neg.beta)
            + log_beta(c.aap + lp.active.alpha, c.aan + lp.active.beta)
            + log_beta(c.pan + lp.passive.alpha, c.pap + lp.passive.beta)
            - self._lik_denominator
        )
        log_pri = self._prior_side("positive", pos_lengths) + self._prior_side(
            "negative", neg_lengths
        )
        return -(log_lik + log_pri)

    def score_rulesets(self, positive: RuleSet, negative: RuleSet) -> float:
        return self.score_parts(
            self.ruleset_bits(positive),
            ruleset_length_counts(positive),
            self.ruleset_bits(negative),
            ruleset_length_counts(negative),
        )

    def score_pair(self, pair: RuleSetPair) -> float:
        return self.score_rulesets(pair.positive, pair.negative)
