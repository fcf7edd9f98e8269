"""Exhaustive equilibrium search on the two-publisher line game, PRP against linear.

Prints the number of grid equilibria for each resolution. Under PRP the
count stays at zero; the linear ranking keeps the profile where both
publishers stay at their initial documents.
"""

import argparse

from pubgame.verification import grid_pne_search, line_game


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ap.add_argument("--resolutions", type=lambda s: [int(v) for v in s.split(",")], default=[11, 51, 101, 201])
    args = ap.parse_args()
    print(f"{'resolution':>10} {'epsilon':>10} {'prp':>5} {'linear':>7}  linear equilibria")
    for res in args.resolutions:
        prp = grid_pne_search(line_game(args.lam, "prp"), res)
        lin = grid_pne_search(line_game(args.lam, "linear"), res)
        shown = [p.ravel().round(4).tolist() for p in lin.found_equilibria[:4]]
        print(f"{res:>10} {prp.epsilon:>10.5f} {len(prp.found_equilibria):>5} {len(lin.found_equilibria):>7}  {shown}")


if __name__ == "__main__":
    main()
