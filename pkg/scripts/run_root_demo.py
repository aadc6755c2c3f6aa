#!/usr/bin/env python3
"""Run the root-growth demo scenario and print its summary.

Equivalent to ``netmesh roots scenarios/roots.txt --out out/roots``.
Re-running with the same seed reproduces every file byte for byte; pass
a different ``--seed`` on the command line to get a different root.
"""

import pathlib
import sys

from netmesh.cli import main

ROOT = pathlib.Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "-v",
                "roots",
                str(ROOT / "scenarios" / "roots.txt"),
                "--out",
                str(ROOT / "out" / "roots"),
            ]
        )
    )
