"""Coverage along eps * mu for the equal-sigma and unequal-sigma sweeps.

Writes one CSV per sweep (epsilon, coverage, se, level) and prints the grid
point with the lowest coverage for each.
"""

import argparse
import csv
import sys
from pathlib import Path

from rankgauge.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default=str(ROOT / "results"))
    p.add_argument("configs", nargs="*", default=["figure1", "figure2"])
    args = p.parse_args()
    out = Path(args.out_dir)
    for name in args.configs:
        code = cli_main(["simulate", str(ROOT / "configs" / f"{name}.cfg"), "--out-dir", str(out)])
        if code:
            return code
        for path in sorted(out.glob(f"{name}_*.csv")):
            with path.open() as fh:
                rows = list(csv.DictReader(fh))
            low = min(rows, key=lambda r: float(r["coverage"]))
            print(f"{path.stem}: min coverage {low['coverage']} (se {low['se']}) at eps={low['epsilon']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
