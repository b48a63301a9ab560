"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(bad genotype, bad table, missing run files), 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .ablation import classifier_ablation, initsize_ablation, multipop_ablation
from .complexity import total_madds
from .config import ConfigError, SearchConfig
from .evaluation import EvaluationError, tabular_evaluator_load
from .metrics import kendall_tau, spearman_rho
from .search import SearchError, smem_nas
from .search_space import GenotypeError, decode, parse_genotype, to_features
from .surrogate import KINDS, pairs_from_scores, rank_features, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("smemnas")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args, extra_overrides=()) -> SearchConfig:
    overrides = list(args.set or []) + list(extra_overrides)
    return SearchConfig.load(args.config, overrides)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _write_csv(rows: list[dict], out: str | None) -> None:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# ---------------------------------------------------------------------------


def cmd_search(args) -> int:
    extra = []
    if args.no_multipop:
        extra.append("moea.multipop=false")
    if args.seed is not None:
        extra.append(f"seed={args.seed}")
    if args.threads is not None:
        extra.append(f"threads={args.threads}")
    cfg = _load_config(args, extra)
    out = Path(args.out) if args.out else Path("runs") / f"seed{cfg.seed}"
    result = smem_nas(cfg, out, manifest_extra={"argv": sys.argv[1:]})
    print(json.dumps({
        "run_dir": str(out),
        "archive_size": len(result.archive),
        "front_size": len(result.front),
        "hv_final": result.metrics["hv_final"],
        "wall_time": result.metrics["wall_time"],
    }))
    return EXIT_OK


def cmd_madds(args) -> int:
    cfg = _load_config(args)
    g = parse_genotype(args.genotype, cfg.space)
    report = total_madds(decode(g, cfg.space, cfg.channels), cfg.channels)
    print(json.dumps({"genotype": g.to_text(), **report.to_dict()}, indent=2))
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    seeds = _int_list(args.seeds)
    if args.kind == "classifier":
        kinds = args.kinds.split(",") if args.kinds else list(KINDS)
        for k in kinds:
            if k not in KINDS:
                raise UsageError(f"unknown classifier kind {k!r}")
        rows, summary = classifier_ablation(cfg, seeds, kinds, n_train=args.n_train or cfg.N)
    elif args.kind == "multipop":
        summary = multipop_ablation(cfg, seeds)
    elif args.kind == "initsize":
        sizes = _int_list(args.sizes)
        rows, summary = initsize_ablation(cfg, seeds, sizes, with_hv=not args.no_hv)
    else:
        raise UsageError(f"unknown ablation kind {args.kind!r}")
    _write_csv(summary, args.out)
    return EXIT_OK


def cmd_front(args) -> int:
    run = Path(args.run_dir)
    front_path = run / "front.json"
    snap_path = run / "gen_snapshots.jsonl"
    for p in (front_path, snap_path):
        if not p.is_file():
            raise DataError(f"missing run file {p}")
    try:
        front = json.loads(front_path.read_text())
        snaps = [json.loads(line) for line in snap_path.read_text().splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt run file: {exc}") from None
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        {"error": 1.0 - a["accuracy"], "madds": a["madds"], "accuracy": a["accuracy"], "genotype": a["genotype"]}
        for a in front
    ]
    _write_csv(rows, str(out / "front.csv"))
    snap_rows = [
        {"iteration": s["iteration"], "generation": s["generation"], "obj_acc": p[0], "madds": p[1]}
        for s in snaps
        for p in s["front0"]
    ]
    _write_csv(snap_rows, str(out / "front_snapshots.csv"))
    print(json.dumps({"front": str(out / "front.csv"), "rows": len(rows), "snapshots": len(snaps)}))
    return EXIT_OK


def cmd_rank(args) -> int:
    cfg = _load_config(args)
    table = tabular_evaluator_load(args.table, cfg.space)
    items = sorted(table.items(), key=lambda kv: kv[0].genes)
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(items))
    n_train = args.train_size
    if not 2 <= n_train < len(items) - 1:
        raise DataError(f"train size {n_train} needs at least 2 rows and 2 held-out rows (table has {len(items)})")
    genes = np.array([items[i][0].genes for i in order])
    acc = np.array([items[i][1] for i in order])
    F = to_features(genes, cfg.space)
    scfg = cfg.surrogate if args.kind is None else dataclasses.replace(cfg.surrogate, kind=args.kind)
    model = train(pairs_from_scores(F[:n_train], acc[:n_train]), scfg, rng)
    if args.save_model:
        model.save(args.save_model)
    scores = rank_features(model, F[n_train:])
    print(json.dumps({
        "kind": model.kind,
        "n_train": int(n_train),
        "n_test": int(len(items) - n_train),
        "ktau": kendall_tau(scores, acc[n_train:]),
        "spearman": spearman_rho(scores, acc[n_train:]),
    }))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smemnas", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. G=10 or moea.m=50")

    s = sub.add_parser("search", help="run the full search and write a run directory")
    common(s)
    s.add_argument("--out", help="run directory (default runs/seed<seed>)")
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, help="parallel evaluation threads; results do not depend on it")
    s.add_argument("--no-multipop", action="store_true", help="draw both parents from the main population")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("madds", help="MAdds report for one genotype")
    common(s)
    s.add_argument("genotype", help="46-character gene string or JSON array")
    s.set_defaults(func=cmd_madds)

    s = sub.add_parser("ablate", help="run an ablation and print a CSV summary")
    common(s)
    s.add_argument("kind", choices=["classifier", "multipop", "initsize"])
    s.add_argument("--seeds", default="0,1,2,3,4")
    s.add_argument("--kinds", help="classifier kinds, comma-separated")
    s.add_argument("--n-train", type=int, help="classifier ablation training size (default N)")
    s.add_argument("--sizes", default="25,50,100,150")
    s.add_argument("--no-hv", action="store_true", help="initsize: skip the per-size searches")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("front", help="export front and per-generation fronts of a run as CSV")
    s.add_argument("run_dir")
    s.add_argument("--out", help="output directory (default the run directory)")
    s.set_defaults(func=cmd_front)

    s = sub.add_parser("rank", help="train a surrogate on part of a table and report held-out KTau")
    common(s)
    s.add_argument("table")
    s.add_argument("--train-size", type=int, default=100)
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--save-model", help="write the trained model as JSON")
    s.set_defaults(func=cmd_rank)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GenotypeError, EvaluationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SearchError as exc:
        cause = exc.__cause__
        data = isinstance(cause, (GenotypeError, EvaluationError)) or isinstance(getattr(cause, "__cause__", None), EvaluationError)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA if data else EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
