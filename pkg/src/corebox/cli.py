"""Command line entry points: augment, extract, evaluate, serve.

Exit codes: 0 success, 1 processing or IO failure, 2 bad arguments
(including input paths that do not exist). All subcommands accept
``--json`` for machine-readable stdout where it applies.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import depthref, extraction, metrics, tla
from .errors import CoreboxError
from .imagery import (
    RASTER_SUFFIXES,
    LabelMap,
    load_image,
    load_label_map,
    load_mask,
    save_image,
    validate_dataset,
)

log = logging.getLogger("corebox")

DEFAULT_LABELS = LabelMap({"core_column": 255})


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _usage_fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _require_dir(path: Path, what: str) -> str | None:
    if not path.is_dir():
        return f"{what} directory not found: {path}"
    return None


def _require_file(path: Path, what: str) -> str | None:
    if not path.is_file():
        return f"{what} file not found: {path}"
    return None


def _load_labels(path: Path | None) -> LabelMap:
    if path is None:
        return DEFAULT_LABELS
    return load_label_map(path)


# --------------------------------------------------------------------------
# augment


def cmd_augment(args: argparse.Namespace) -> int:
    for problem in (
        _require_dir(args.images, "image"),
        _require_dir(args.masks, "mask"),
        _require_dir(args.pool, "pool"),
        _require_file(args.labels, "label map") if args.labels else None,
        _require_file(args.config, "config") if args.config else None,
    ):
        if problem:
            return _usage_fail(problem)

    try:
        labels = _load_labels(args.labels)
        entries, warnings = validate_dataset(args.images, args.masks, labels)
        pool, pool_warnings = tla.load_pool(args.pool, labels)
        for line in warnings + pool_warnings:
            print(f"warning: {line}", file=sys.stderr)
        config = (
            tla.AugmentationConfig.from_json_file(args.config)
            if args.config
            else tla.AugmentationConfig()
        )
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        count = args.count if args.count is not None else len(entries)
        out = args.out
        manifest_path = out / "manifest.json"
        tla.augment_dataset(
            entries,
            pool,
            config,
            labels,
            count,
            out / "images",
            out / "masks",
            manifest_path,
            jobs=args.jobs,
        )
    except (CoreboxError, ValueError, OSError) as exc:
        return _fail(str(exc))

    if args.json:
        print(json.dumps({"manifest": str(manifest_path), "count": count}))
    else:
        print(f"wrote {count} pairs, manifest at {manifest_path}")
    return 0


# --------------------------------------------------------------------------
# extract


def _filter_config(args: argparse.Namespace) -> extraction.FilterConfig:
    config = (
        extraction.FilterConfig.from_json_file(args.filter_config)
        if args.filter_config
        else extraction.FilterConfig()
    )
    overrides = {}
    if args.n is not None:
        overrides["n"] = args.n
    if args.m is not None:
        overrides["m"] = args.m
    if args.y_max_ratio is not None:
        overrides["y_max_ratio"] = args.y_max_ratio
    if args.no_median_filter:
        overrides["median_filter"] = False
    if args.no_width_filter:
        overrides["width_filter"] = False
    if overrides:
        config = replace(config, **overrides)
    return config


def _depth_spec_for(args: argparse.Namespace, image_path: Path) -> depthref.DepthSpec | None:
    if args.depth_spec:
        with open(args.depth_spec, "r", encoding="utf-8") as fh:
            return depthref.DepthSpec.from_dict(json.load(fh))
    parsed = depthref.parse_depth_from_filename(image_path.name)
    if parsed is not None:
        return depthref.DepthSpec(top=parsed[0], bottom=parsed[1])
    return None


def _extract_one(
    image_path: Path,
    mask_path: Path,
    labels: LabelMap,
    config: extraction.FilterConfig,
    args: argparse.Namespace,
    out: Path,
) -> dict:
    image = load_image(image_path)
    mask = load_mask(mask_path, labels)
    report, crops = extraction.run_pipeline(image, mask, labels, config, args.class_name)

    spec = _depth_spec_for(args, image_path)
    intervals = None
    depth_warnings: list[str] = []
    if spec is not None and report.kept:
        ordered = depthref.order_columns(report.kept, spec)
        if ordered != report.kept:
            report.kept = ordered
            crops = extraction.extract_columns(image, ordered)
        intervals, depth_warnings = depthref.assign_depths(ordered, spec, args.core_axis)

    out.mkdir(parents=True, exist_ok=True)
    for crop in crops:
        save_image(crop.image, out / f"column_{crop.index:03d}.png")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "depths.csv").write_text(
        depthref.depths_to_csv(report.kept, intervals), encoding="utf-8"
    )

    for line in report.warnings + depth_warnings:
        print(f"warning: {image_path.name}: {line}", file=sys.stderr)
    return {
        "image": str(image_path),
        "out": str(out),
        "kept": len(report.kept),
        "dropped": len(report.dropped),
        "warnings": report.warnings + depth_warnings,
        "report": report.to_dict(),
        "intervals": [iv.as_dict() for iv in intervals] if intervals else None,
    }


def cmd_extract(args: argparse.Namespace) -> int:
    for problem in (
        _require_file(args.labels, "label map") if args.labels else None,
        _require_file(args.filter_config, "filter config") if args.filter_config else None,
        _require_file(args.depth_spec, "depth spec") if args.depth_spec else None,
    ):
        if problem:
            return _usage_fail(problem)

    try:
        labels = _load_labels(args.labels)
        config = _filter_config(args)
    except (CoreboxError, ValueError, OSError) as exc:
        return _usage_fail(str(exc))

    results = []
    try:
        if args.batch:
            for problem in (
                _require_dir(args.image, "image"),
                _require_dir(args.mask, "mask"),
            ):
                if problem:
                    return _usage_fail(problem)
            entries, warnings = validate_dataset(args.image, args.mask, labels)
            for line in warnings:
                print(f"warning: {line}", file=sys.stderr)
            for entry in entries:
                results.append(
                    _extract_one(
                        entry.image_path,
                        entry.mask_path,
                        labels,
                        config,
                        args,
                        args.out / entry.stem,
                    )
                )
        else:
            for problem in (
                _require_file(args.image, "image"),
                _require_file(args.mask, "mask"),
            ):
                if problem:
                    return _usage_fail(problem)
            results.append(
                _extract_one(args.image, args.mask, labels, config, args, args.out)
            )
    except (CoreboxError, ValueError, OSError) as exc:
        return _fail(str(exc))

    if args.json:
        print(json.dumps(results if args.batch else results[0], indent=2))
    else:
        for result in results:
            print(
                f"{result['image']}: kept {result['kept']}, "
                f"dropped {result['dropped']} -> {result['out']}"
            )
    return 0


# --------------------------------------------------------------------------
# evaluate


def _mask_stems(directory: Path) -> dict[str, Path]:
    found = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() in RASTER_SUFFIXES and path.is_file():
            found[path.stem] = path
    return found


def cmd_evaluate(args: argparse.Namespace) -> int:
    for problem in (
        _require_dir(args.pred_dir, "prediction"),
        _require_dir(args.truth_dir, "truth"),
        _require_file(args.labels, "label map") if args.labels else None,
    ):
        if problem:
            return _usage_fail(problem)

    try:
        labels = _load_labels(args.labels)
        positive = extraction.resolve_class_value(labels, args.class_name)
    except (CoreboxError, ValueError) as exc:
        return _usage_fail(str(exc))

    preds = _mask_stems(args.pred_dir)
    truths = _mask_stems(args.truth_dir)
    stems = sorted(set(preds) & set(truths))
    if not stems:
        return _fail(f"no mask pairs shared between {args.pred_dir} and {args.truth_dir}")

    def score(stem: str) -> metrics.MetricReport:
        return metrics.evaluate_pair(
            load_mask(preds[stem], labels), load_mask(truths[stem], labels), positive
        )

    try:
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                reports = list(pool.map(score, stems))
        else:
            reports = [score(stem) for stem in stems]
        per_pair = dict(zip(stems, reports))
        stats = metrics.summarize(reports)
    except (CoreboxError, ValueError, OSError) as exc:
        return _fail(str(exc))

    doc = metrics.report_to_json(per_pair, stats)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(doc, encoding="utf-8")
    if args.json:
        print(doc)
    else:
        for stem in stems:
            values = per_pair[stem].values()
            cells = "  ".join(f"{name}={values[name]:.3f}" for name in metrics.METRIC_NAMES)
            print(f"{stem}: {cells}")
        print(metrics.summary_to_text(stats))
    return 0


# --------------------------------------------------------------------------
# serve


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import Workspace, create_app

    static_dir = args.static_dir
    if static_dir is None:
        candidate = Path("frontend") / "dist"
        if candidate.is_dir():
            static_dir = candidate

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, args.port))
    except OSError as exc:
        sock.close()
        return _fail(f"cannot bind {args.host}:{args.port}: {exc}")

    workspace = Workspace(spool_dir=args.spool_dir)
    app = create_app(workspace, max_upload_mb=args.max_upload_mb, static_dir=static_dir)
    server = uvicorn.Server(
        uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    )
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass
    finally:
        sock.close()
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corebox",
        description="Core box image augmentation, column extraction and evaluation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("augment", help="synthesize augmented image/mask pairs")
    p.add_argument("--images", type=Path, required=True, help="source image directory")
    p.add_argument("--masks", type=Path, required=True, help="source mask directory")
    p.add_argument("--labels", type=Path, help="label map JSON (default: core_column=255)")
    p.add_argument("--pool", type=Path, required=True, help="sample pool root")
    p.add_argument("--config", type=Path, help="augmentation config JSON")
    p.add_argument("--count", type=int, help="outputs to generate (default: one per source)")
    p.add_argument("--out", type=Path, required=True, help="output root")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--json", action="store_true", help="machine-readable stdout")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract", help="cut filtered core columns out of a masked photo")
    p.add_argument("--image", type=Path, required=True, help="photo (or directory with --batch)")
    p.add_argument("--mask", type=Path, required=True, help="mask (or directory with --batch)")
    p.add_argument("--labels", type=Path, help="label map JSON (default: core_column=255)")
    p.add_argument("--class", dest="class_name", help="class to extract (default: inferred)")
    p.add_argument("--filter-config", type=Path, help="filter config JSON")
    p.add_argument("--n", type=float, help="median band multiplier")
    p.add_argument("--m", type=float, help="global width divisor")
    p.add_argument("--y-max-ratio", type=float, help="keep boxes starting above ratio * height")
    p.add_argument("--no-median-filter", action="store_true")
    p.add_argument("--no-width-filter", action="store_true")
    p.add_argument("--depth-spec", type=Path, help="depth spec JSON (default: parse filename)")
    p.add_argument(
        "--core-axis",
        choices=[depthref.HORIZONTAL, depthref.VERTICAL],
        default=depthref.HORIZONTAL,
        help="axis along which core length is measured",
    )
    p.add_argument("--batch", action="store_true", help="treat --image/--mask as directories")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--json", action="store_true", help="machine-readable stdout")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score predicted masks against ground truth")
    p.add_argument("--pred-dir", type=Path, required=True)
    p.add_argument("--truth-dir", type=Path, required=True)
    p.add_argument("--labels", type=Path, help="label map JSON (default: core_column=255)")
    p.add_argument("--class", dest="class_name", help="positive class (default: inferred)")
    p.add_argument("--out", type=Path, help="write the JSON report here")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--json", action="store_true", help="machine-readable stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the interactive correction service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8780)
    p.add_argument("--spool-dir", type=Path, help="persist evicted sessions here")
    p.add_argument("--max-upload-mb", type=int, default=64)
    p.add_argument("--static-dir", type=Path, help="web client bundle to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
