#!/usr/bin/env python3
"""Produce the data tables of one reference figure at desk scale.

Usage: python scripts/run_figure.py N [--out DIR] [--seed S]
"""

import sys

from spinsqueeze.cli import main

if __name__ == "__main__":
    sys.exit(main(["figure"] + sys.argv[1:]))
