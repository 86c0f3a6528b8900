#!/usr/bin/env python
"""Generate the synthetic core-box dataset used by the CLI walkthrough.

Writes images/, masks/, labels.json and a sample pool under the chosen
root, then prints the paths. Seeded, so repeated runs are identical.
"""

import argparse
import sys
from pathlib import Path

from corebox.synth import make_toy_dataset


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("root", type=Path, help="output directory")
    parser.add_argument("--count", type=int, default=5, help="number of image/mask pairs")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--height", type=int, default=240)
    args = parser.parse_args(argv)

    paths = make_toy_dataset(
        args.root, count=args.count, seed=args.seed, width=args.width, height=args.height
    )
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
