"""Figure 2/3 welfare under the two smooth-step gradient rules.

The default smooth dynamic steps along the exact gradient of the utility.
``own-relevance`` keeps only the derivative through the publisher's own
relative relevance, which shrinks the softmax ranking term by (n-1)/n and
leaves the linear ranking unchanged. This script runs both rules on the
same games and prints softmax minus linear for each welfare metric.

    python scripts/gradient_rule_sensitivity.py --games 200 --ks 2,4,8,16,32
"""

import argparse

from pubgame import ExperimentConfig
from pubgame.experiments import reproduce_figures


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--games", type=int, default=100)
    ap.add_argument("--ks", type=lambda s: tuple(int(v) for v in s.split(",")), default=(2, 8, 32))
    ap.add_argument("--bootstrap", type=int, default=500)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    print(f"{'rule':<14} {'fig':<5} {'k':>3}  {'pub S-L':>11} {'disjoint':>8}  {'users S-L':>11} {'disjoint':>8}")
    for rule in ("exact", "own-relevance"):
        cfg = ExperimentConfig(
            ks=args.ks, games_per_cell=args.games, bootstrap=args.bootstrap, master_seed=args.seed, gradient=rule
        )
        results = reproduce_figures(cfg, None, ["fig2", "fig3"])
        for fig, summary in results.items():
            for k in args.ks:
                cells = []
                for metric in ("publishers_welfare", "users_welfare"):
                    s, lin = summary.get(float(k), "softmax", metric), summary.get(float(k), "linear", metric)
                    disjoint = s.ci_hi < lin.ci_lo or lin.ci_hi < s.ci_lo
                    cells.append(f"{s.mean - lin.mean:>+11.2e} {str(disjoint):>8}")
                print(f"{rule:<14} {fig:<5} {k:>3}  {'  '.join(cells)}")


if __name__ == "__main__":
    main()
