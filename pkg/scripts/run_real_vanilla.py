"""Reproduce the no-training rows on a real extracted corpus, plus the
directional head-training check (triplet intra-frame must beat vanilla
intra-frame BcF by at least five points).

Expects an interchange JSON-lines file produced by the extractor, e.g.
  python scripts/run_real_vanilla.py --corpus data/framenet_args.jsonl --out runs/real

Clustering the full cross-frame test folds is the bottleneck; instances
beyond --max-instances are handled by the uniform-subsample fallback and the
cap is recorded in the summary.
"""

import argparse
import sys
import time
from pathlib import Path

from fecluster.cli import ExperimentConfig, generate_report, render_table, run_cv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--out", default="runs/real")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--max-instances", type=int, default=30_000)
    parser.add_argument("--with-triplet", action="store_true",
                        help="also run the triplet intra-frame directional check")
    args = parser.parse_args()

    combos = [("cross", "vanilla"), ("intra", "vanilla")]
    if args.with_triplet:
        combos.append(("intra", "triplet"))

    results = {}
    for method, model in combos:
        t0 = time.time()
        cfg = ExperimentConfig(
            model=model, method=method, corpus=args.corpus, out=args.out,
            seed=args.seed, max_instances=args.max_instances,
        )
        summary = run_cv(cfg)
        results[(method, model)] = summary["mean"]
        print(f"{cfg.run_dir_name()}: PiF={summary['mean']['pif']*100:.1f} "
              f"BcF={summary['mean']['bcf']*100:.1f} ({time.time() - t0:.0f}s)")

    tsv = generate_report(args.out)
    with open(Path(args.out) / "report.tsv", "w", encoding="utf-8") as fh:
        fh.write(tsv)
    print()
    print(render_table(tsv))

    for method in ("cross", "intra"):
        pif = 100.0 * results[(method, "vanilla")]["pif"]
        target = 67.6 if method == "cross" else 67.9
        print(f"{method} vanilla PiF {pif:.1f} (reference {target} +- 5.0): "
              f"{'OK' if abs(pif - target) <= 5.0 else 'OUT OF BAND'}")
    if args.with_triplet:
        delta = 100.0 * (results[("intra", "triplet")]["bcf"]
                         - results[("intra", "vanilla")]["bcf"])
        print(f"triplet intra BcF - vanilla intra BcF = {delta:+.1f} points "
              f"(need >= +5.0): {'OK' if delta >= 5.0 else 'SHORT'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
