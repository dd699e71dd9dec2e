"""Run every packaged table config and print the frequency grids.

    python3 scripts/reproduce_tables.py                 # all 31 cells
    python3 scripts/reproduce_tables.py --table 1 --seed 7 --json out.json
"""

import argparse
import json
import time

from miscrit.simlab import load_config, packaged_configs, run_campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--table", type=int, action="append", help="restrict to table number(s)")
    ap.add_argument("--seed", type=int, help="override every config's seed")
    ap.add_argument("--replicates", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--json", help="also write all tables to this file")
    args = ap.parse_args()

    names = [n for n in packaged_configs() if not args.table or int(n[5]) in args.table]
    collected = {}
    for name in names:
        cfg = load_config(name)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.replicates is not None:
            cfg.replicates = args.replicates
        start = time.perf_counter()
        table = run_campaign(cfg, threads=args.threads)
        elapsed = time.perf_counter() - start
        print(f"{name[:-5]}  ({cfg.experiment.value}, n={cfg.n}, {cfg.noise_key}={cfg.noise:g}, seed {cfg.seed}, {elapsed:.1f}s)")
        print("  crit  " + "".join(f"{k:>5}" for k in table.columns) + "  fail")
        for c in table.rows:
            cells = "".join(f"{table.count(c, k):>5}" for k in table.columns)
            print(f"  {c.upper():<5} {cells}  {table.failures[c]:>4}")
        print()
        collected[name[:-5]] = table.to_dict()
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(collected, fh, indent=2)


if __name__ == "__main__":
    main()
