"""duorules: dual rule-set learning for binary categorical classification.

Learns one rule set per class (a disjunction of attribute-value
conjunctions each) by maximizing a Beta-Binomial posterior with
simulated annealing over mined pattern pools, and classifies new
observations into consensus, active-ambiguous, and passive-ambiguous
outcomes.
"""

from .annealing import (
    AnnealConfig,
    AnnealResult,
    AnnealState,
    anneal,
    cover_less,
    cover_more,
    pick_misclassified,
    temperature,
    trace_to_jsonl,
)
from .core import (
    Literal,
    Pattern,
    RuleSet,
    RuleSetPair,
    coverage_bitmap,
    pattern_bitmap,
    pattern_matches,
    ruleset_covers,
)
from .data import (
    Dataset,
    Schema,
    SyntheticSpec,
    binary_schema,
    default_synthetic_spec,
    encode_with_schema,
    generate_synthetic,
    load_csv,
    parse_rule,
    parse_ruleset,
    split,
    synthetic_group_counts,
    write_csv,
)
from .errors import ConfigError, DataFormatError, SchemaMismatchError
from .inference import (
    EvaluationReport,
    ForcedVerdict,
    Prediction,
    Verdict,
    evaluate,
    forced_predict,
    pattern_frequency,
    predict,
)
from .mining import (
    MiningConfig,
    PatternPool,
    dump_pools,
    impurity,
    load_pools,
    mine_frequent,
    screen,
)
from .scoring import (
    BetaShape,
    LikelihoodParams,
    PriorParams,
    ScoreContext,
    TaxonomyCounts,
    log_marginal_likelihood,
    log_prior,
    score,
    taxonomy_counts,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "AnnealResult",
    "AnnealState",
    "BetaShape",
    "ConfigError",
    "DataFormatError",
    "Dataset",
    "EvaluationReport",
    "ForcedVerdict",
    "LikelihoodParams",
    "Literal",
    "MiningConfig",
    "Pattern",
    "PatternPool",
    "Prediction",
    "PriorParams",
    "RuleSet",
    "RuleSetPair",
    "Schema",
    "SchemaMismatchError",
    "ScoreContext",
    "SyntheticSpec",
    "TaxonomyCounts",
    "Verdict",
    "anneal",
    "binary_schema",
    "coverage_bitmap",
    "cover_less",
    "cover_more",
    "default_synthetic_spec",
    "dump_pools",
    "encode_with_schema",
    "evaluate",
    "forced_predict",
    "generate_synthetic",
    "impurity",
    "load_csv",
    "load_pools",
    "log_marginal_likelihood",
    "log_prior",
    "mine_frequent",
    "parse_rule",
    "parse_ruleset",
    "pattern_bitmap",
    "pattern_frequency",
    "pattern_matches",
    "pick_misclassified",
    "predict",
    "ruleset_covers",
    "score",
    "screen",
    "split",
    "synthetic_group_counts",
    "taxonomy_counts",
    "temperature",
    "trace_to_jsonl",
    "write_csv",
]
