#!/usr/bin/env python3
"""
run.py — Unified launcher for NMSpectral (the ``solver`` command).

Usage:
    python run.py run config/solve.example.yaml
    python run.py validate config/solve.example.yaml
    python run.py scan config/measure_scan.example.yaml --threads 4
    python run.py run config/solve.example.yaml --output-dir results/golden --weight-mode poly
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def main() -> int:
    from src.cli.cli_gateway import CLIGateway

    return CLIGateway().run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
