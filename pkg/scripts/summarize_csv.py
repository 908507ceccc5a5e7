#!/usr/bin/env python3
"""Print the summary table for one or more result CSVs."""

import sys

from neutraldrift.bench_cli import format_summary, read_csv, summarize


def main(paths: list[str]) -> None:
    if not paths:
        sys.exit("usage: summarize_csv.py RESULTS.csv [...]")
    rows = []
    for p in paths:
        with open(p, newline="") as fh:
            rows += read_csv(fh)
    print(format_summary(summarize(rows)))


if __name__ == "__main__":
    main(sys.argv[1:])
