#!/usr/bin/env python3
"""Check every point of the moment validation matrix against its closed form."""
import pathlib
import sys

from reedsim.cli import main

HERE = pathlib.Path(__file__).resolve().parent

if __name__ == "__main__":
    sys.exit(main(["validate-moments", str(HERE / "configs" / "moments.cfg"),
                   *sys.argv[1:]]))
