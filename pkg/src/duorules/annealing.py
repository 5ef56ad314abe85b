"""Simulated annealing over rule-set pairs.

Each iteration targets one observation the current best pair gets wrong,
then grows or shrinks one of the two rule sets depending on the
observation's taxonomy cell: label-1 rows covered by both sets shrink
the negative set, rows covered by neither grow the matching set, and
consensus-wrong rows flip a fair coin between the two repairs (mirrored
for label-0 rows). Only the targeted set changes; proposals are accepted
by the Metropolis rule under a logarithmic cooling schedule, and the
best-scoring pair ever proposed is tracked separately from the current
state.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable

from .core import RuleSet, RuleSetPair, coverage_bitmap, select_bit
from .data import Dataset
from .errors import ConfigError
from .mining import PatternPool
from .scoring import LikelihoodParams, PriorParams, ScoreContext, ruleset_length_counts


@dataclass(frozen=True)
class AnnealConfig:
    t0: float = 1.0
    iter_max: int = 5000
    move_randomness: float = 0.1
    seed: int = 0
    restarts: int = 3

    def __post_init__(self) -> None:
        if self.t0 <= 0:
            raise ConfigError(f"t0 must be > 0, got {self.t0}")
        if self.iter_max < 1:
            raise ConfigError(f"iter_max must be >= 1, got {self.iter_max}")
        if not 0.0 <= self.move_randomness <= 1.0:
            raise ConfigError(f"move_randomness must be in [0, 1], got {self.move_randomness}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")


@dataclass
class AnnealState:
    """Mutable per-chain state; best_score always equals the best pair's score."""

    current: RuleSetPair
    best: RuleSetPair
    best_score: float
    t: int = 1
    trace: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class AnnealResult:
    best: RuleSetPair
    best_score: float
    trace: list[dict]


def temperature(t: int, t0: float) -> float:
    """Logarithmic cooling; defined for iteration counters t >= 1."""
    if t < 1:
        raise ValueError(f"cooling schedule starts at t=1, got t={t}")
    return t0 / math.log(1 + t)


def trace_to_jsonl(trace: list[dict]) -> str:
    """Canonical JSON-lines rendering of a trace (one record per line)."""
    return "".join(json.dumps(record) + "\n" for record in trace)


def cover_more(
    ruleset: RuleSet,
    pool: PatternPool,
    p: float,
    score_fn: Callable[[RuleSet], float],
    rng: random.Random,
) -> RuleSet:
    """Add one pool pattern: a uniformly random absent one with
    probability p, otherwise the best-scoring single addition (ties go to
    the lowest pool index). A rule set already equal to the pool is
    returned unchanged."""
    addable = [pattern for pattern in pool.patterns if pattern not in ruleset]
    if not addable:
        return ruleset
    if rng.random() < p:
        return ruleset.with_pattern(rng.choice(addable))
    best = ruleset
    best_score = math.inf
    for pattern in addable:
        candidate = ruleset.with_pattern(pattern)
        candidate_score = score_fn(candidate)
        if candidate_score < best_score:
            best, best_score = candidate, candidate_score
    return best


def cover_less(
    ruleset: RuleSet,
    p: float,
    score_fn: Callable[[RuleSet], float],
    rng: random.Random,
    pool: PatternPool | None = None,
) -> RuleSet:
    """Remove one pattern: a uniformly random member with probability p,
    otherwise the removal with the best score. Members are considered in
    pool order when a pool is given (ties go to the lowest index), else
    in canonical order. The empty rule set is returned unchanged."""
    if pool is not None:
        members = [pattern for pattern in pool.patterns if pattern in ruleset]
    else:
        members = ruleset.ordered()
    if not members:
        return ruleset
    if rng.random() < p:
        return ruleset.without_pattern(rng.choice(members))
    best = ruleset
    best_score = math.inf
    for pattern in members:
        candidate = ruleset.without_pattern(pattern)
        candidate_score = score_fn(candidate)
        if candidate_score < best_score:
            best, best_score = candidate, candidate_score
    return best


def misclassified_bitmap(pair: RuleSetPair, dataset: Dataset) -> int:
    """Bitmap of rows outside the two consensus-correct cells."""
    pos_bits = coverage_bitmap(pair.positive, dataset)
    neg_bits = coverage_bitmap(pair.negative, dataset)
    label_bits = dataset.label_bitmap
    all_bits = dataset.all_rows_bitmap
    ctp = pos_bits & ~neg_bits & label_bits
    ctn = neg_bits & ~pos_bits & (all_bits & ~label_bits)
    return all_bits & ~(ctp | ctn)


def pick_misclassified(
    pair: RuleSetPair, dataset: Dataset, rng: random.Random
) -> int | None:
    """Uniform choice among rows the pair gets wrong (any cell other than
    consensus-correct); None when every row is consensus-correct."""
    eligible = misclassified_bitmap(pair, dataset)
    count = eligible.bit_count()
    if count == 0:
        return None
    return select_bit(eligible, rng.randrange(count))


_CELL_NAMES = {
    (1, 1, 0): "CTP",
    (0, 1, 0): "CFP",
    (0, 0, 1): "CTN",
    (1, 0, 1): "CFN",
    (1, 1, 1): "AAP",
    (0, 1, 1): "AAN",
    (1, 0, 0): "PAP",
    (0, 0, 0): "PAN",
}


def _run_chain(
    chain: int,
    dataset: Dataset,
    pools: tuple[PatternPool, PatternPool],
    context: ScoreContext,
    config: AnnealConfig,
    collect_trace: bool,
) -> AnnealState:
    rng = random.Random(f"{config.seed}:{chain}")
    positive_pool, negative_pool = pools
    empty = RuleSetPair()
    state = AnnealState(current=empty, best=empty, best_score=context.score_pair(empty))

    cur_pos, cur_neg = state.current.positive, state.current.negative
    cur_pos_bits = cur_neg_bits = 0
    current_score = state.best_score
    best_pos_bits = best_neg_bits = 0

    label_bits = dataset.label_bitmap
    all_bits = dataset.all_rows_bitmap

    for t in range(1, config.iter_max + 1):
        state.t = t
        ctp = best_pos_bits & ~best_neg_bits & label_bits
        ctn = best_neg_bits & ~best_pos_bits & (all_bits & ~label_bits)
        eligible = all_bits & ~(ctp | ctn)
        wrong = eligible.bit_count()
        if wrong == 0:
            break
        row = select_bit(eligible, rng.randrange(wrong))
        y = dataset.labels[row]
        in_pos = (best_pos_bits >> row) & 1
        in_neg = (best_neg_bits >> row) & 1
        cell = _CELL_NAMES[(y, in_pos, in_neg)]

        # Case table: which set to perturb and how, given (y, best coverage).
        if y == 1:
            if in_pos and in_neg:
                move, target = "cover_less", "negative"
            elif not in_pos and not in_neg:
                move, target = "cover_more", "positive"
            else:  # consensus-wrong: covered only by the negative set
                if rng.random() < 0.5:
                    move, target = "cover_less", "negative"
                else:
                    move, target = "cover_more", "positive"
        else:
            if in_pos and in_neg:
                move, target = "cover_less", "positive"
            elif not in_pos and not in_neg:
                move, target = "cover_more", "negative"
            else:  # consensus-wrong: covered only by the positive set
                if rng.random() < 0.5:
                    move, target = "cover_less", "positive"
                else:
                    move, target = "cover_more", "negative"

        if target == "positive":
            other_bits, other_lengths = cur_neg_bits, ruleset_length_counts(cur_neg)

            def score_fn(rs: RuleSet, _b=other_bits, _l=other_lengths) -> float:
                return context.score_parts(
                    context.ruleset_bits(rs), ruleset_length_counts(rs), _b, _l
                )

            pool = positive_pool
            base = cur_pos
        else:
            other_bits, other_lengths = cur_pos_bits, ruleset_length_counts(cur_pos)

            def score_fn(rs: RuleSet, _b=other_bits, _l=other_lengths) -> float:
                return context.score_parts(
                    _b, _l, context.ruleset_bits(rs), ruleset_length_counts(rs)
                )

            pool = negative_pool
            base = cur_neg

        if move == "cover_more":
            proposal_set = cover_more(base, pool, config.move_randomness, score_fn, rng)
        else:
            proposal_set = cover_less(base, config.move_randomness, score_fn, rng, pool=pool)
        proposal_score = score_fn(proposal_set)

        if target == "positive":
            proposal = RuleSetPair(positive=proposal_set, negative=cur_neg)
        else:
            proposal = RuleSetPair(positive=cur_pos, negative=proposal_set)

        if proposal_score < state.best_score:
            state.best = proposal
            state.best_score = proposal_score
            best_pos_bits = context.ruleset_bits(proposal.positive)
            best_neg_bits = context.ruleset_bits(proposal.negative)

        temp = temperature(t, config.t0)
        previous_score = current_score
        diff = proposal_score - previous_score
        alpha = 1.0 if diff <= 0 else math.exp(-diff / temp)
        # rng.random() < 1.0 always holds, so non-worsening proposals are
        # accepted unconditionally while still consuming one draw.
        accepted = rng.random() < alpha
        if accepted:
            if target == "positive":
                cur_pos = proposal_set
                cur_pos_bits = context.ruleset_bits(cur_pos)
            else:
                cur_neg = proposal_set
                cur_neg_bits = context.ruleset_bits(cur_neg)
            current_score = proposal_score
            state.current = proposal

        if collect_trace:
            state.trace.append(
                {
                    "chain": chain,
                    "t": t,
                    "temperature": temp,
                    "row": row,
                    "cell": cell,
                    "move": move,
                    "target": target,
                    "proposal_score": proposal_score,
                    "previous_score": previous_score,
                    "accepted": accepted,
                    "current_score": current_score,
                    "best_score": state.best_score,
                }
            )
    return state


def anneal(
    dataset: Dataset,
    pools: tuple[PatternPool, PatternPool],
    prior_params: PriorParams,
    likelihood_params: LikelihoodParams,
    config: AnnealConfig,
    collect_trace: bool = True,
) -> AnnealResult:
    """Run `restarts` independent chains and return the best pair found.

    Chains are seeded from (seed, chain index), so a fixed config yields
    an identical trace. A chain stops early once its best pair leaves no
    misclassified observation.
    """
    if len(pools[0]) == 0 and len(pools[1]) == 0:
        raise ConfigError("both pattern pools are empty; nothing to search")
    context = ScoreContext(dataset, pools, prior_params, likelihood_params)

    best: RuleSetPair | None = None
    best_score = math.inf
    trace: list[dict] = []
    for chain in range(config.restarts):
        state = _run_chain(chain, dataset, pools, context, config, collect_trace)
        trace.extend(state.trace)
        if state.best_score < best_score:
            best, best_score = state.best, state.best_score
    assert best is not None
    return AnnealResult(best=best, best_score=best_score, trace=trace)
