import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from duorules import Dataset, binary_schema  # noqa: E402


@pytest.fixture
def five_attr_schema():
    return binary_schema(("x1", "x2", "x3", "x4", "x5"))


def make_binary_dataset(rows, labels, names=None):
    names = names or tuple(f"x{i+1}" for i in range(len(rows[0])))
    return Dataset(
        schema=binary_schema(names),
        rows=tuple(tuple(r) for r in rows),
        labels=tuple(labels),
    )


@pytest.fixture
def make_dataset():
    return make_binary_dataset
