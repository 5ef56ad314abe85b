#!/usr/bin/env python3
"""Turn the raw UCI car evaluation file into the headered, binarized CSV
the car acceptance test expects.

Usage: python scripts/make_car_csv.py car.data tests/data/car.csv

The raw file has no header and a four-way class column
(unacc/acc/good/vgood); the tool works on binary labels, so everything
except "unacc" is folded into "acc".
"""

import csv
import sys
from pathlib import Path

HEADER = ["buyingPrice", "maintainPrice", "doors", "persons", "lugBoot", "safety", "class"]


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__)
        return 2
    src, dst = sys.argv[1], sys.argv[2]
    Path(dst).parent.mkdir(parents=True, exist_ok=True)
    with open(src, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row]
    with open(dst, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(HEADER)
        for row in rows:
            if len(row) != 7:
                raise SystemExit(f"unexpected row: {row}")
            row[-1] = "unacc" if row[-1] == "unacc" else "acc"
            writer.writerow(row)
    print(f"wrote {dst} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
