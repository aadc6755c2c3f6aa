#!/usr/bin/env python3
"""Run the vessel-network demo scenario and print its summary.

Equivalent to ``netmesh flow scenarios/vessels.txt --out out/flow``;
snapshots land in out/flow as legacy VTK files, one per time step.
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
                "flow",
                str(ROOT / "scenarios" / "vessels.txt"),
                "--out",
                str(ROOT / "out" / "flow"),
            ]
        )
    )
