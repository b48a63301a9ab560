"""Run the default search over several seeds and summarize final hypervolume.

    python3 scripts/run_search.py --seeds 0,1,2 --out results/search
"""
import argparse
import json
from pathlib import Path

import numpy as np

from smemnas.config import SearchConfig
from smemnas.search import smem_nas


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0")
    ap.add_argument("--config")
    ap.add_argument("--set", action="append", default=[])
    ap.add_argument("--out", default="results/search")
    args = ap.parse_args()
    out = Path(args.out)
    summary = []
    for seed in (int(s) for s in args.seeds.split(",")):
        cfg = SearchConfig.load(args.config, args.set + [f"seed={seed}"])
        m = smem_nas(cfg, out / f"seed{seed}").metrics
        summary.append({"seed": seed, "hv_initial": m["hv_initial"], "hv_final": m["hv_final"], "wall_time": m["wall_time"]})
        print(json.dumps(summary[-1]))
    hv = [r["hv_final"] for r in summary]
    print(json.dumps({"hv_final_median": float(np.median(hv)), "runs": len(hv)}))
    (out / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
