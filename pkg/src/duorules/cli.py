"""Command-line front end: synth, mine, train, evaluate, runs.

A single JSON config drives the pipeline; a handful of flags override
the common knobs. Models, reports, and pool caches are JSON; traces are
JSON-lines; data is CSV.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import annealing, data, inference, mining, scoring
from .core import RuleSetPair
from .data import Dataset, Schema
from .errors import ConfigError, DataFormatError

logger = logging.getLogger(__name__)

MODEL_FORMAT = "duorules-model"
MODEL_VERSION = 1


@dataclass
class RunConfig:
    data_path: str | None
    label_column: str
    positive_label: str
    missing: str
    mining: mining.MiningConfig
    prior_alpha: float
    prior_beta: float | str  # "pool" -> beta_l = pool size at length l
    likelihood: scoring.LikelihoodParams
    anneal: annealing.AnnealConfig
    split: dict | None


def _require_keys(section: dict, allowed: set[str], name: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r} config section: {sorted(unknown)}")


def _shape(raw, name: str) -> scoring.BetaShape:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError(f"likelihood shape {name!r} must be [alpha, beta], got {raw!r}")
    return scoring.BetaShape(float(raw[0]), float(raw[1]))


def parse_run_config(raw: dict) -> RunConfig:
    _require_keys(
        raw, {"data", "mining", "prior", "likelihood", "annealing", "split"}, "top-level"
    )
    data_section = raw.get("data", {})
    _require_keys(
        data_section, {"path", "label_column", "positive_label", "missing"}, "data"
    )
    mining_section = raw.get("mining", {})
    _require_keys(
        mining_section, {"min_support", "max_length", "pool_cap", "impurity"}, "mining"
    )
    mcfg = mining.MiningConfig(
        min_support=mining_section.get("min_support", 0.05),
        max_length=int(mining_section.get("max_length", 4)),
        pool_cap=int(mining_section.get("pool_cap", 150)),
        impurity=mining_section.get("impurity", mining.CONDITIONAL_ENTROPY),
    )
    prior_section = raw.get("prior", {})
    _require_keys(prior_section, {"alpha", "beta"}, "prior")
    prior_beta = prior_section.get("beta", "pool")
    if prior_beta != "pool":
        prior_beta = float(prior_beta)
        if prior_beta <= 0:
            raise ConfigError("prior beta must be positive or 'pool'")
    prior_alpha = float(prior_section.get("alpha", 1.0))
    if prior_alpha <= 0:
        raise ConfigError("prior alpha must be positive")
    lik_section = raw.get("likelihood", {})
    _require_keys(
        lik_section, {"consensus_pos", "consensus_neg", "active", "passive"}, "likelihood"
    )
    defaults = scoring.LikelihoodParams()
    likelihood = scoring.LikelihoodParams(
        consensus_pos=_shape(lik_section["consensus_pos"], "consensus_pos")
        if "consensus_pos" in lik_section
        else defaults.consensus_pos,
        consensus_neg=_shape(lik_section["consensus_neg"], "consensus_neg")
        if "consensus_neg" in lik_section
        else defaults.consensus_neg,
        active=_shape(lik_section["active"], "active")
        if "active" in lik_section
        else defaults.active,
        passive=_shape(lik_section["passive"], "passive")
        if "passive" in lik_section
        else defaults.passive,
    )
    anneal_section = raw.get("annealing", {})
    _require_keys(
        anneal_section,
        {"t0", "iter_max", "move_randomness", "seed", "restarts"},
        "annealing",
    )
    acfg = annealing.AnnealConfig(
        t0=float(anneal_section.get("t0", 1.0)),
        iter_max=int(anneal_section.get("iter_max", 5000)),
        move_randomness=float(anneal_section.get("move_randomness", 0.1)),
        seed=int(anneal_section.get("seed", 0)),
        restarts=int(anneal_section.get("restarts", 3)),
    )
    split_section = raw.get("split")
    if split_section is not None:
        _require_keys(split_section, {"train_fraction", "seed", "stratify"}, "split")
    return RunConfig(
        data_path=data_section.get("path"),
        label_column=data_section.get("label_column", "y"),
        positive_label=data_section.get("positive_label", "1"),
        missing=data_section.get("missing", "?"),
        mining=mcfg,
        prior_alpha=prior_alpha,
        prior_beta=prior_beta,
        likelihood=likelihood,
        anneal=acfg,
        split=split_section,
    )


def load_run_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        return parse_run_config(json.load(f))


def build_prior(config: RunConfig, pools) -> scoring.PriorParams:
    if config.prior_beta == "pool":
        return scoring.PriorParams.default_for(pools[0], pools[1], alpha=config.prior_alpha)
    max_len = max(pools[0].max_length, pools[1].max_length, 1)
    return scoring.PriorParams.uniform(
        max_len, alpha=config.prior_alpha, beta=float(config.prior_beta)
    )


@dataclass
class TrainResult:
    pair: RuleSetPair
    score: float
    pools: tuple[mining.PatternPool, mining.PatternPool]
    prior: scoring.PriorParams
    trace: list[dict]


def run_training(dataset: Dataset, config: RunConfig, collect_trace: bool = False) -> TrainResult:
    """The full pipeline on an already-loaded dataset: mine, screen, anneal."""
    patterns = mining.mine_frequent(
        dataset, config.mining.min_support, config.mining.max_length
    )
    pools = mining.screen(patterns, dataset, config.mining)
    prior = build_prior(config, pools)
    result = annealing.anneal(
        dataset, pools, prior, config.likelihood, config.anneal, collect_trace=collect_trace
    )
    return TrainResult(
        pair=result.best,
        score=result.best_score,
        pools=pools,
        prior=prior,
        trace=result.trace,
    )


def _rules_to_json(schema: Schema, pair: RuleSetPair) -> dict:
    return {
        "positive_rules": [data.format_rule(schema, p) for p in pair.positive.ordered()],
        "negative_rules": [data.format_rule(schema, p) for p in pair.negative.ordered()],
    }


def save_model(
    path: str,
    pair: RuleSetPair,
    schema: Schema,
    config: RunConfig,
    final_score: float,
    pools: tuple[mining.PatternPool, mining.PatternPool],
    prior: scoring.PriorParams,
    breakdown: dict | None = None,
) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "schema": {
            "attributes": [
                {"name": name, "categories": list(categories)}
                for name, categories in schema.attributes
            ],
            "label_column": schema.label_column,
            "label_values": list(schema.label_values),
        },
        **_rules_to_json(schema, pair),
        "pools": {
            pool.class_sign: {
                "size": len(pool),
                "by_length": {str(l): m for l, m in sorted(pool.length_counts.items())},
            }
            for pool in pools
        },
        "hyperparameters": {
            "mining": {
                "min_support": config.mining.min_support,
                "max_length": config.mining.max_length,
                "pool_cap": config.mining.pool_cap,
                "impurity": config.mining.impurity,
            },
            "prior": {
                "positive": [[s.alpha, s.beta] for s in prior.positive],
                "negative": [[s.alpha, s.beta] for s in prior.negative],
            },
            "likelihood": {
                "consensus_pos": [config.likelihood.consensus_pos.alpha, config.likelihood.consensus_pos.beta],
                "consensus_neg": [config.likelihood.consensus_neg.alpha, config.likelihood.consensus_neg.beta],
                "active": [config.likelihood.active.alpha, config.likelihood.active.beta],
                "passive": [config.likelihood.passive.alpha, config.likelihood.passive.beta],
            },
            "annealing": {
                "t0": config.anneal.t0,
                "iter_max": config.anneal.iter_max,
                "move_randomness": config.anneal.move_randomness,
                "restarts": config.anneal.restarts,
            },
        },
        "score": final_score,
        "seed": config.anneal.seed,
    }
    if breakdown is not None:
        payload["score_breakdown"] = breakdown
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)


def load_model(path: str) -> tuple[RuleSetPair, Schema, dict]:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != MODEL_FORMAT:
        raise DataFormatError(f"{path} is not a {MODEL_FORMAT} file")
    raw_schema = payload["schema"]
    schema = Schema(
        attributes=tuple(
            (a["name"], tuple(a["categories"])) for a in raw_schema["attributes"]
        ),
        label_column=raw_schema["label_column"],
        label_values=tuple(raw_schema["label_values"]),
    )
    pair = RuleSetPair(
        positive=data.parse_ruleset(schema, payload["positive_rules"]),
        negative=data.parse_ruleset(schema, payload["negative_rules"]),
    )
    return pair, schema, payload


def _load_synth_spec(path: str) -> data.SyntheticSpec:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    _require_keys(
        raw,
        {"n", "seed", "p_both_positive", "p_neither_positive", "attributes",
         "positive_rules", "negative_rules"},
        "synth spec",
    )
    attributes = raw.get("attributes", list(data.SYNTHETIC_ATTRIBUTES))
    schema = data.binary_schema(tuple(attributes))
    positive_rules = raw.get("positive_rules", [list(r) for r in data.SYNTHETIC_POSITIVE_RULES])
    negative_rules = raw.get("negative_rules", [list(r) for r in data.SYNTHETIC_NEGATIVE_RULES])
    return data.SyntheticSpec(
        true_positive_rules=data.parse_ruleset(schema, positive_rules),
        true_negative_rules=data.parse_ruleset(schema, negative_rules),
        n=int(raw.get("n", 1000)),
        p_both_positive=float(raw.get("p_both_positive", 0.05)),
        p_neither_positive=float(raw.get("p_neither_positive", 0.5)),
        seed=int(raw.get("seed", 0)),
        schema=schema,
    )


def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        spec = _load_synth_spec(args.spec)
    else:
        spec = data.default_synthetic_spec(n=args.n, seed=args.seed or 0)
    dataset = data.generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data.write_csv(dataset, str(out))
    counts = data.synthetic_group_counts(spec, dataset)
    sidecar = {
        "n": dataset.n,
        "seed": spec.seed,
        "group_counts": counts,
        "positive_labels": dataset.positive_count,
    }
    with open(f"{out}.meta.json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2)
    print(f"wrote {out} ({dataset.n} rows); groups: {counts}")
    return 0


def _load_training_data(config: RunConfig) -> Dataset:
    if not config.data_path:
        raise ConfigError("config has no data.path")
    return data.load_csv(
        config.data_path,
        config.label_column,
        config.positive_label,
        missing=config.missing,
    )


def cmd_mine(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    dataset = _load_training_data(config)
    patterns = mining.mine_frequent(
        dataset, config.mining.min_support, config.mining.max_length
    )
    pools = mining.screen(patterns, dataset, config.mining)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    mining.dump_pools(pools, dataset.schema, str(out))
    print(
        f"mined {len(patterns)} frequent patterns; pools: "
        f"{len(pools[0])} positive / {len(pools[1])} negative -> {out}"
    )
    return 0


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        config.anneal = replace(config.anneal, seed=args.seed)
    return config


def cmd_train(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_run_config(args.config), args)
    dataset = _load_training_data(config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if config.split:
        train_set, test_set = data.split(
            dataset,
            float(config.split.get("train_fraction", 0.8)),
            int(config.split.get("seed", 0)),
            stratify=bool(config.split.get("stratify", False)),
        )
        data.write_csv(test_set, str(outdir / "test.csv"))
        logger.info(
            "split %d rows into %d train / %d test", dataset.n, train_set.n, test_set.n
        )
    else:
        train_set = dataset
    result = run_training(train_set, config, collect_trace=args.trace)
    counts = scoring.taxonomy_counts(result.pair, train_set)
    breakdown = {
        "log_marginal_likelihood": scoring.log_marginal_likelihood(
            counts, config.likelihood
        ),
        "log_prior": scoring.log_prior(result.pair, result.pools, result.prior),
        "train_taxonomy": counts.as_dict(),
    }
    save_model(
        str(outdir / "model.json"),
        result.pair,
        train_set.schema,
        config,
        result.score,
        result.pools,
        result.prior,
        breakdown=breakdown,
    )
    if args.trace:
        with open(outdir / "trace.jsonl", "w", encoding="utf-8") as f:
            f.write(annealing.trace_to_jsonl(result.trace))
    print(
        f"trained model: score {result.score:.4f}, "
        f"{len(result.pair.positive)} positive / {len(result.pair.negative)} negative rules "
        f"-> {outdir / 'model.json'}"
    )
    return 0


def _rule_ids(pair: RuleSetPair) -> dict:
    ids = {}
    for i, pattern in enumerate(pair.positive.ordered()):
        ids[("positive", pattern)] = f"p{i}"
    for i, pattern in enumerate(pair.negative.ordered()):
        ids[("negative", pattern)] = f"n{i}"
    return ids


def cmd_evaluate(args: argparse.Namespace) -> int:
    pair, schema, _ = load_model(args.model)
    test_set = data.encode_with_schema(args.test, schema)
    report = inference.evaluate(pair, test_set, include_records=True)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "report.json", "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
    ids = _rule_ids(pair)
    fieldnames = ["row", "label", "verdict", "matched_positive", "matched_negative"]
    if args.forced:
        fieldnames.insert(3, "forced_verdict")
    with open(outdir / "rows.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for record in report.records or ():
            row = {
                "row": record.index,
                "label": schema.label_values[record.label],
                "verdict": record.verdict.value,
                "matched_positive": "|".join(
                    ids[("positive", p)] for p in record.matched_positive_rules
                ),
                "matched_negative": "|".join(
                    ids[("negative", p)] for p in record.matched_negative_rules
                ),
            }
            if args.forced:
                row["forced_verdict"] = record.forced_verdict.value
            writer.writerow(row)
    print(
        f"truly misclassified: {report.truly_misclassified_rate:.4f}  "
        f"ambiguous: {report.ambiguous_rate:.4f}  "
        f"total: {report.total_misclassified_rate:.4f}"
    )
    if args.forced:
        print(
            f"forced truly misclassified: {report.forced_truly_misclassified_rate:.4f}  "
            f"forced ambiguous: {report.forced_ambiguous_rate:.4f}  "
            f"forced total: {report.forced_total_misclassified_rate:.4f}"
        )
    return 0


def _train_one_run(payload: tuple[Dataset, RunConfig, int]) -> tuple[int, RuleSetPair, float]:
    dataset, config, run_index = payload
    cfg = replace(config, anneal=replace(config.anneal, seed=config.anneal.seed + run_index))
    result = run_training(dataset, cfg, collect_trace=False)
    return run_index, result.pair, result.score


def cmd_runs(args: argparse.Namespace) -> int:
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    config = _apply_overrides(load_run_config(args.config), args)
    dataset = _load_training_data(config)
    if config.split:
        dataset, _ = data.split(
            dataset,
            float(config.split.get("train_fraction", 0.8)),
            int(config.split.get("seed", 0)),
            stratify=bool(config.split.get("stratify", False)),
        )
    payloads = [(dataset, config, i) for i in range(args.runs)]
    results: list[tuple[int, RuleSetPair, float]] = []
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_train_one_run, payloads))
    else:
        results = [_train_one_run(p) for p in payloads]
    results.sort(key=lambda r: r[0])
    pairs = [pair for _, pair, _ in results]
    frequency = inference.pattern_frequency(pairs)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "runs": args.runs,
        "scores": [s for _, _, s in results],
        "positive": [
            {"rule": data.format_rule(dataset.schema, pattern), "count": count}
            for pattern, count in frequency["positive"]
        ],
        "negative": [
            {"rule": data.format_rule(dataset.schema, pattern), "count": count}
            for pattern, count in frequency["negative"]
        ],
    }
    with open(outdir / "frequency.json", "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
    for sign in ("positive", "negative"):
        print(f"top {sign} patterns:")
        for entry in payload[sign][:5]:
            print(f"  {' & '.join(entry['rule'])}  ({entry['count']}/{args.runs})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duorules",
        description="Learn and apply dual rule sets for binary classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    p_synth.add_argument("--spec", help="synthetic spec JSON (defaults to the built-in benchmark)")
    p_synth.add_argument("--n", type=int, default=1000, help="rows when no spec is given")
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.set_defaults(func=cmd_synth)

    p_mine = sub.add_parser("mine", help="mine and screen pattern pools")
    p_mine.add_argument("--config", required=True)
    p_mine.add_argument("--out", required=True, help="pool cache JSON path")
    p_mine.set_defaults(func=cmd_mine)

    p_train = sub.add_parser("train", help="run the full training pipeline")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--seed", type=int, default=None, help="override annealing seed")
    p_train.add_argument("--trace", action="store_true", help="write trace.jsonl")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a model on a test CSV")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--test", required=True)
    p_eval.add_argument("--forced", action="store_true", help="also report forced predictions")
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.set_defaults(func=cmd_evaluate)

    p_runs = sub.add_parser("runs", help="train repeatedly and report rule frequencies")
    p_runs.add_argument("--config", required=True)
    p_runs.add_argument("--runs", type=int, required=True)
    p_runs.add_argument("--seed", type=int, default=None, help="override base seed")
    p_runs.add_argument("--jobs", type=int, default=1)
    p_runs.add_argument("--out", required=True, help="output directory")
    p_runs.set_defaults(func=cmd_runs)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # covers ConfigError/DataFormatError/SchemaMismatchError, malformed
        # JSON, bad shape/probability values, and unreadable/unwritable paths
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
