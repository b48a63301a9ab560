"""Run the three ablations (classifier, initial size, multi-population) and write CSVs.

    python3 scripts/run_ablations.py --out results/ablations
    python3 scripts/run_ablations.py --only classifier --seeds 0,1,2,3,4
"""
import argparse
import csv
from pathlib import Path

from smemnas.ablation import classifier_ablation, initsize_ablation, multipop_ablation
from smemnas.config import SearchConfig


def write(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {path}")
    for r in rows:
        print("  ", r)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", choices=["classifier", "initsize", "multipop"])
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--multipop-seeds", default="0,1,2,3,4,5,6,7,8,9")
    ap.add_argument("--initsize-hv", action="store_true", help="also run a full search per initial size")
    ap.add_argument("--out", default="results/ablations")
    args = ap.parse_args()
    cfg = SearchConfig()
    seeds = [int(s) for s in args.seeds.split(",")]
    out = Path(args.out)
    if args.only in (None, "classifier"):
        rows, summary = classifier_ablation(cfg, seeds)
        write(out / "classifier_rows.csv", rows)
        write(out / "classifier.csv", summary)
    if args.only in (None, "initsize"):
        rows, summary = initsize_ablation(cfg, seeds, (25, 50, 100, 150), with_hv=args.initsize_hv)
        write(out / "initsize_rows.csv", rows)
        write(out / "initsize.csv", summary)
    if args.only in (None, "multipop"):
        write(out / "multipop.csv", multipop_ablation(cfg, [int(s) for s in args.multipop_seeds.split(",")]))


if __name__ == "__main__":
    main()
