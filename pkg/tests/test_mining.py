import math
import random

import pytest

from duorules import (
    ConfigError,
    Dataset,
    MiningConfig,
    Pattern,
    Schema,
    dump_pools,
    impurity,
    load_pools,
    mine_frequent,
    screen,
)
from duorules.mining import CONDITIONAL_ENTROPY, GINI

from oracles import brute_force_frequent, random_dataset


class TestMineFrequent:
    def test_four_row_example(self, make_dataset):
        # rows (a,b): supports a=1 -> 3, b=1 -> 3, everything else < 3
        ds = make_dataset([(1, 1), (1, 0), (1, 1), (0, 1)], [1, 0, 1, 0], names=("a", "b"))
        mined = mine_frequent(ds, 3, 2)
        assert set(mined) == {Pattern.of([(0, 1)]), Pattern.of([(1, 1)])}

    def test_full_support_constant_column(self, make_dataset):
        ds = make_dataset([(1, 0), (1, 1), (1, 0)], [1, 0, 1], names=("a", "b"))
        mined = mine_frequent(ds, 3, 2)
        assert mined == [Pattern.of([(0, 1)])]

    def test_min_support_above_n_rejected(self, make_dataset):
        ds = make_dataset([(1, 0)], [1], names=("a", "b"))
        with pytest.raises(ValueError):
            mine_frequent(ds, 2, 2)

    def test_length_cap(self, make_dataset):
        ds = make_dataset([(1, 1), (1, 1), (1, 1)], [1, 0, 1], names=("a", "b"))
        mined = mine_frequent(ds, 1, 1)
        assert all(len(p) == 1 for p in mined)

    def test_fractional_support(self, make_dataset):
        ds = make_dataset([(1, 0), (1, 1), (0, 1), (1, 1)], [1, 0, 1, 0], names=("a", "b"))
        # 0.75 of 4 rows -> threshold 3
        assert set(mine_frequent(ds, 0.75, 1)) == set(mine_frequent(ds, 3, 1))

    def test_matches_brute_force(self):
        rng = random.Random(99)
        for trial in range(40):
            ds = random_dataset(rng, max_rows=40)
            min_support = rng.randint(1, max(1, ds.n // 2))
            max_length = rng.randint(1, 3)
            mined = set(mine_frequent(ds, min_support, max_length))
            assert mined == brute_force_frequent(ds, min_support, max_length), (
                f"trial {trial}: mismatch on n={ds.n} minsup={min_support} L={max_length}"
            )

    def test_anti_monotonicity(self):
        rng = random.Random(5)
        for _ in range(20):
            ds = random_dataset(rng, max_rows=40)
            threshold = rng.randint(1, max(1, ds.n // 3))
            mined = set(mine_frequent(ds, threshold, 3))
            for pattern in mined:
                if len(pattern) == 1:
                    continue
                for drop in pattern:
                    sub = Pattern.of(
                        (lit.attribute, lit.value) for lit in pattern if lit != drop
                    )
                    assert sub in mined

    def test_output_sorted_canonically(self, make_dataset):
        ds = make_dataset([(1, 1), (1, 1), (0, 0)], [1, 0, 1], names=("a", "b"))
        mined = mine_frequent(ds, 1, 2)
        assert mined == sorted(mined, key=Pattern.sort_key)


class TestImpurity:
    def test_pure_split_scores_zero(self, make_dataset):
        ds = make_dataset([(1,), (1,), (0,), (0,)], [1, 1, 0, 0], names=("a",))
        pattern = Pattern.of([(0, 1)])
        assert impurity(pattern, ds, CONDITIONAL_ENTROPY) == pytest.approx(0.0)
        assert impurity(pattern, ds, GINI) == pytest.approx(0.0)

    def test_half_coverage_mixed_branches(self, make_dataset):
        # pattern covers half the rows; both branches are 50/50
        ds = make_dataset(
            [(1, 0), (1, 0), (1, 1), (1, 1), (0, 0), (0, 0), (0, 1), (0, 1)],
            [1, 0, 1, 0, 1, 0, 1, 0],
            names=("a", "b"),
        )
        pattern = Pattern.of([(0, 1)])
        assert impurity(pattern, ds, CONDITIONAL_ENTROPY) == pytest.approx(math.log(2))
        assert impurity(pattern, ds, GINI) == pytest.approx(0.5)

    def test_zero_coverage_equals_unconditional(self, make_dataset):
        ds = make_dataset([(0,), (0,), (0,), (0,)], [1, 1, 1, 0], names=("a",))
        pattern = Pattern.of([(0, 1)])
        p = 3 / 4
        expected = -(p * math.log(p) + (1 - p) * math.log(1 - p))
        assert impurity(pattern, ds, CONDITIONAL_ENTROPY) == pytest.approx(expected)
        assert impurity(pattern, ds, GINI) == pytest.approx(2 * p * (1 - p))

    def test_bounds(self):
        rng = random.Random(21)
        for _ in range(50):
            ds = random_dataset(rng, max_rows=30)
            attr = rng.randrange(ds.p)
            value = rng.randrange(len(ds.schema.attributes[attr][1]))
            pattern = Pattern.of([(attr, value)])
            assert 0.0 <= impurity(pattern, ds, CONDITIONAL_ENTROPY) <= math.log(2) + 1e-12
            assert 0.0 <= impurity(pattern, ds, GINI) <= 0.5 + 1e-12

    def test_unknown_measure(self, make_dataset):
        ds = make_dataset([(0,), (1,)], [0, 1], names=("a",))
        with pytest.raises(ConfigError):
            impurity(Pattern.of([(0, 0)]), ds, "entropy")


class TestScreen:
    def test_perfect_positive_pattern_lands_positive(self, make_dataset):
        ds = make_dataset(
            [(1, 0), (1, 0), (0, 1), (0, 1)], [1, 1, 0, 0], names=("a", "b")
        )
        pools = screen(mine_frequent(ds, 1, 2), ds, MiningConfig(min_support=1))
        assert Pattern.of([(0, 1)]) in pools[0]
        assert Pattern.of([(0, 0)]) in pools[1]

    def test_named_category_association(self):
        # mostly-positive rows share marital=married; they must screen positive
        schema = Schema(
            attributes=(
                ("marital_status", ("married", "single")),
                ("capital_gain", ("0", "1")),
            ),
            label_column="income",
            label_values=("low", "high"),
        )
        rows = [(0, 0)] * 6 + [(0, 1)] * 2 + [(1, 0)] * 8
        labels = [1] * 6 + [1, 0] + [0] * 7 + [1]
        ds = Dataset(schema=schema, rows=tuple(rows), labels=tuple(labels))
        pools = screen(
            mine_frequent(ds, 2, 2), ds, MiningConfig(min_support=2, pool_cap=50)
        )
        married = Pattern.of([(0, 0)])
        assert married in pools[0]
        assert married not in pools[1]

    def test_tie_breaks_prefer_shorter(self, make_dataset):
        # a=1 and a=1&b=1 have identical coverage, hence identical impurity
        ds = make_dataset(
            [(1, 1), (1, 1), (0, 0), (0, 0)], [1, 1, 0, 0], names=("a", "b")
        )
        pools = screen(mine_frequent(ds, 1, 2), ds, MiningConfig(min_support=1))
        pos = pools[0]
        short = pos.patterns.index(Pattern.of([(0, 1)]))
        long = pos.patterns.index(Pattern.of([(0, 1), (1, 1)]))
        assert short < long

    def test_pool_cap(self, make_dataset):
        ds = make_dataset(
            [(1, 1), (1, 0), (0, 1), (0, 0)], [1, 1, 0, 0], names=("a", "b")
        )
        pools = screen(
            mine_frequent(ds, 1, 2), ds, MiningConfig(min_support=1, pool_cap=2)
        )
        assert len(pools[0]) <= 2 and len(pools[1]) <= 2

    def test_deterministic(self):
        rng = random.Random(17)
        ds = random_dataset(rng, max_rows=40)
        patterns = mine_frequent(ds, 1, 3)
        config = MiningConfig(min_support=1, pool_cap=20)
        first = screen(patterns, ds, config)
        second = screen(patterns, ds, config)
        assert first[0].patterns == second[0].patterns
        assert first[1].patterns == second[1].patterns

    def test_balanced_pattern_joins_neither_pool(self, make_dataset):
        # b=1 covers half the rows with the base-rate label mix exactly
        ds = make_dataset(
            [(1, 1), (0, 1), (1, 0), (0, 0)], [1, 0, 1, 0], names=("a", "b")
        )
        pools = screen(
            mine_frequent(ds, 1, 1), ds, MiningConfig(min_support=1, pool_cap=50)
        )
        b1 = Pattern.of([(1, 1)])
        assert b1 not in pools[0] and b1 not in pools[1]


class TestConfig:
    def test_invalid_configs(self):
        with pytest.raises(ConfigError):
            MiningConfig(min_support=0)
        with pytest.raises(ConfigError):
            MiningConfig(max_length=0)
        with pytest.raises(ConfigError):
            MiningConfig(pool_cap=0)
        with pytest.raises(ConfigError):
            MiningConfig(impurity="nope")

    def test_support_count_resolution(self):
        assert MiningConfig(min_support=0.05).support_count(800) == 40
        assert MiningConfig(min_support=5).support_count(800) == 5
        assert MiningConfig(min_support=0.001).support_count(100) == 1


class TestPoolSerialization:
    def test_round_trip(self, tmp_path, make_dataset):
        ds = make_dataset(
            [(1, 1), (1, 0), (0, 1), (0, 0), (1, 1)], [1, 1, 0, 0, 1], names=("a", "b")
        )
        pools = screen(mine_frequent(ds, 1, 2), ds, MiningConfig(min_support=1))
        path = tmp_path / "pools.json"
        dump_pools(pools, ds.schema, str(path))
        loaded = load_pools(str(path), ds.schema)
        for original, restored in zip(pools, loaded):
            assert original.patterns == restored.patterns
            assert original.supports == restored.supports
            assert original.impurities == pytest.approx(restored.impurities)
            assert original.class_sign == restored.class_sign
