#!/usr/bin/env python3
"""Run the convergence-trace campaign with the shipped config.

Usage: python scripts/run_fig2.py [outdir] [--seed N] [--workers K]
"""

import sys
from pathlib import Path

from eemcast.cli import main

if __name__ == "__main__":
    root = Path(__file__).resolve().parent.parent
    args = sys.argv[1:]
    out = args.pop(0) if args and not args[0].startswith("-") else "out/fig2"
    sys.exit(main(["fig2", "--config", str(root / "configs" / "fig2.cfg"),
                   "--out", out, *args]))
