"""Regenerate the coverage/efficiency tables for tau = 0.5, 1 and 2.

Usage: python scripts/run_tables.py [--out-dir results] [--only table2 ...]
"""

import argparse
import sys
from pathlib import Path

from rankgauge.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
TABLES = ["table2", "table3", "table4"]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default=str(ROOT / "results"))
    p.add_argument("--only", nargs="*", choices=TABLES, default=TABLES)
    args = p.parse_args()
    for name in args.only:
        print(f"== {name}", flush=True)
        code = cli_main(["simulate", str(ROOT / "configs" / f"{name}.cfg"), "--out-dir", args.out_dir])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
