#!/usr/bin/env python3
"""Energy-budgeted FedAvg on the synthetic quadratic: logs the realized
per-client energies and the scheduled gain alongside the optimization trace."""
import pathlib
import sys

from reedsim.cli import main

HERE = pathlib.Path(__file__).resolve().parent

if __name__ == "__main__":
    sys.exit(main(["run-fedavg", str(HERE / "configs" / "budget_fedavg.cfg"),
                   *sys.argv[1:]]))
