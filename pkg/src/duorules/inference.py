"""Classification under a learned pair, forced prediction, and reports."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .core import Pattern, RuleSetPair, pattern_matches
from .data import Dataset
from .scoring import TaxonomyCounts, taxonomy_counts


class Verdict(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ACTIVE_AMBIGUOUS = "active_ambiguous"
    PASSIVE_AMBIGUOUS = "passive_ambiguous"


class ForcedVerdict(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class Prediction:
    verdict: Verdict
    matched_positive_rules: tuple[Pattern, ...]
    matched_negative_rules: tuple[Pattern, ...]


def predict(pair: RuleSetPair, row: Sequence[int]) -> Prediction:
    """Verdict from which rule sets cover the row, with the matching
    rules listed for explanation."""
    matched_pos = tuple(p for p in pair.positive.ordered() if pattern_matches(p, row))
    matched_neg = tuple(p for p in pair.negative.ordered() if pattern_matches(p, row))
    if matched_pos and matched_neg:
        verdict = Verdict.ACTIVE_AMBIGUOUS
    elif matched_pos:
        verdict = Verdict.POSITIVE
    elif matched_neg:
        verdict = Verdict.NEGATIVE
    else:
        verdict = Verdict.PASSIVE_AMBIGUOUS
    return Prediction(verdict, matched_pos, matched_neg)


def resolve_forced(prediction: Prediction) -> ForcedVerdict:
    """Resolve active ambiguity toward the class with the strictly longer
    longest matching rule; everything else passes through."""
    if prediction.verdict == Verdict.POSITIVE:
        return ForcedVerdict.POSITIVE
    if prediction.verdict == Verdict.NEGATIVE:
        return ForcedVerdict.NEGATIVE
    if prediction.verdict == Verdict.PASSIVE_AMBIGUOUS:
        return ForcedVerdict.AMBIGUOUS
    longest_pos = max(len(p) for p in prediction.matched_positive_rules)
    longest_neg = max(len(p) for p in prediction.matched_negative_rules)
    if longest_pos > longest_neg:
        return ForcedVerdict.POSITIVE
    if longest_neg > longest_pos:
        return ForcedVerdict.NEGATIVE
    return ForcedVerdict.AMBIGUOUS


def forced_predict(pair: RuleSetPair, row: Sequence[int]) -> ForcedVerdict:
    return resolve_forced(predict(pair, row))


@dataclass(frozen=True)
class PredictionRecord:
    index: int
    label: int
    verdict: Verdict
    forced_verdict: ForcedVerdict
    matched_positive_rules: tuple[Pattern, ...]
    matched_negative_rules: tuple[Pattern, ...]


@dataclass(frozen=True)
class EvaluationReport:
    """Taxonomy counts and headline rates, unforced and forced.

    Truly misclassified means consensus-wrong (CFP + CFN); ambiguous
    covers the four ambiguity cells. Forcing reassigns the active
    ambiguous rows that resolve to a class into the matching consensus
    cells before recomputing the rates.
    """

    taxonomy: TaxonomyCounts
    forced_taxonomy: TaxonomyCounts
    truly_misclassified_rate: float
    ambiguous_rate: float
    total_misclassified_rate: float
    forced_truly_misclassified_rate: float
    forced_ambiguous_rate: float
    forced_total_misclassified_rate: float
    records: tuple[PredictionRecord, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "taxonomy": self.taxonomy.as_dict(),
            "forced_taxonomy": self.forced_taxonomy.as_dict(),
            "rates": {
                "truly_misclassified": self.truly_misclassified_rate,
                "ambiguous": self.ambiguous_rate,
                "total_misclassified": self.total_misclassified_rate,
            },
            "forced_rates": {
                "truly_misclassified": self.forced_truly_misclassified_rate,
                "ambiguous": self.forced_ambiguous_rate,
                "total_misclassified": self.forced_total_misclassified_rate,
            },
        }


def _rates(counts: TaxonomyCounts, n: int) -> tuple[float, float, float]:
    truly = (counts.cfp + counts.cfn) / n
    ambiguous = (counts.aap + counts.aan + counts.pap + counts.pan) / n
    return truly, ambiguous, truly + ambiguous


def evaluate(
    pair: RuleSetPair, dataset: Dataset, include_records: bool = False
) -> EvaluationReport:
    """Taxonomy counts plus the three headline rates and their forced
    variants on a test set."""
    counts = taxonomy_counts(pair, dataset)
    forced = {
        "ctp": counts.ctp,
        "cfp": counts.cfp,
        "ctn": counts.ctn,
        "cfn": counts.cfn,
        "aap": counts.aap,
        "aan": counts.aan,
        "pap": counts.pap,
        "pan": counts.pan,
    }
    records: list[PredictionRecord] = []
    for i, (row, label) in enumerate(zip(dataset.rows, dataset.labels)):
        prediction = predict(pair, row)
        forced_verdict = resolve_forced(prediction)
        if prediction.verdict == Verdict.ACTIVE_AMBIGUOUS:
            if forced_verdict == ForcedVerdict.POSITIVE:
                if label == 1:
                    forced["aap"] -= 1
                    forced["ctp"] += 1
                else:
                    forced["aan"] -= 1
                    forced["cfp"] += 1
            elif forced_verdict == ForcedVerdict.NEGATIVE:
                if label == 0:
                    forced["aan"] -= 1
                    forced["ctn"] += 1
                else:
                    forced["aap"] -= 1
                    forced["cfn"] += 1
        if include_records:
            records.append(
                PredictionRecord(
                    index=i,
                    label=label,
                    verdict=prediction.verdict,
                    forced_verdict=forced_verdict,
                    matched_positive_rules=prediction.matched_positive_rules,
                    matched_negative_rules=prediction.matched_negative_rules,
                )
            )
    forced_counts = TaxonomyCounts(**forced)
    truly, ambiguous, total = _rates(counts, dataset.n)
    f_truly, f_ambiguous, f_total = _rates(forced_counts, dataset.n)
    return EvaluationReport(
        taxonomy=counts,
        forced_taxonomy=forced_counts,
        truly_misclassified_rate=truly,
        ambiguous_rate=ambiguous,
        total_misclassified_rate=total,
        forced_truly_misclassified_rate=f_truly,
        forced_ambiguous_rate=f_ambiguous,
        forced_total_misclassified_rate=f_total,
        records=tuple(records) if include_records else None,
    )


def pattern_frequency(
    run_results: Sequence[RuleSetPair],
) -> dict[str, list[tuple[Pattern, int]]]:
    """How many runs' final rule sets contain each pattern, per class,
    sorted by descending count then canonical pattern order."""
    if not run_results:
        raise ValueError("pattern_frequency needs at least one run result")
    counters = {"positive": Counter(), "negative": Counter()}
    for pair in run_results:
        counters["positive"].update(pair.positive.patterns)
        counters["negative"].update(pair.negative.patterns)
    out: dict[str, list[tuple[Pattern, int]]] = {}
    for sign, counter in counters.items():
        out[sign] = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0].sort_key()))
    return out
