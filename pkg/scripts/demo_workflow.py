#!/usr/bin/env python
"""End-to-end walkthrough on the synthetic dataset.

Builds a toy dataset, augments it, extracts columns from the first pair,
and scores the dataset's masks against themselves. Everything lands under
the given work directory; the equivalent CLI commands are printed as they
run.
"""

import argparse
import shlex
import sys
from pathlib import Path

from corebox.cli import main as corebox_main
from corebox.synth import make_toy_dataset


def run(args: list[str]) -> None:
    print(f"$ corebox {shlex.join(args)}")
    code = corebox_main(args)
    if code != 0:
        sys.exit(code)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workdir", type=Path, help="scratch directory for all artifacts")
    parser.add_argument("--count", type=int, default=10, help="augmented pairs to create")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    data = args.workdir / "toy"
    paths = make_toy_dataset(data, seed=args.seed)
    print(f"toy dataset at {data}")

    aug = args.workdir / "augmented"
    run(
        [
            "augment",
            "--images", str(paths["image_dir"]),
            "--masks", str(paths["mask_dir"]),
            "--labels", str(paths["labels"]),
            "--pool", str(paths["pool"]),
            "--count", str(args.count),
            "--seed", str(args.seed),
            "--out", str(aug),
        ]
    )

    first = sorted(Path(paths["image_dir"]).iterdir())[0]
    mask = Path(paths["mask_dir"]) / first.name
    run(
        [
            "extract",
            "--image", str(first),
            "--mask", str(mask),
            "--labels", str(paths["labels"]),
            "--out", str(args.workdir / "columns"),
        ]
    )

    run(
        [
            "evaluate",
            "--pred-dir", str(paths["mask_dir"]),
            "--truth-dir", str(paths["mask_dir"]),
            "--labels", str(paths["labels"]),
            "--out", str(args.workdir / "metrics.json"),
        ]
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
