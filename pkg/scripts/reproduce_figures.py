"""Write fig1.csv, fig2.csv and fig3.csv at the full protocol size.

    python scripts/reproduce_figures.py --out results/ [--seed 42] [--games-per-cell 200]

Equivalent to ``pubgame figures``; kept as a script so the full run is one command.
"""

import sys

from pubgame.cli import main

if __name__ == "__main__":
    sys.exit(main(["figures", "-v", *sys.argv[1:]]))
