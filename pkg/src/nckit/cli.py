"""Command-line surface. Emits plot-ready CSV (RFC 4180) or JSON tables.

Exit codes: 0 success, 1 fatal error, 2 partial success (some epochs of a
trajectory failed; the rows that succeeded are still emitted).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

import numpy as np

from . import codec, metrics, synth
from .classify import max_margin_solve, webb_lowe
from .etf import SimplexEtf, etf_deviation, random_pose, realize
from .io import ClassifierSnapshot, read_manifest, read_pack, write_classifier
from .moments import compute_moments


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _emit_table(header, rows, fmt: str, out_path) -> None:
    """Render a rectangular table; float cells carry 17 significant digits."""
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])
        text = buf.getvalue()
    elif fmt == "json":
        objs = [dict(zip(header, row)) for row in rows]
        text = json.dumps(objs, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _report_rows(reports):
    header = list(metrics.REPORT_FIELDS)
    rows = [[getattr(r, name) for name in header] for r in reports]
    return header, rows


def cmd_metrics(args) -> int:
    manifest = read_manifest(args.manifest)
    reports = metrics.trajectory_report(
        manifest,
        rtol=args.rtol,
        probe_preference=args.probe,
        max_workers=args.threads,
    )
    header, rows = _report_rows(reports)
    _emit_table(header, rows, args.format, args.out)
    failures = [r for r in reports if r.failed]
    for r in failures:
        print(f"epoch {r.epoch} failed: {r.error}", file=sys.stderr)
    return 2 if failures else 0


def cmd_etf(args) -> int:
    rng = np.random.default_rng(args.seed)
    pose = random_pose(args.dim, args.classes, rng)
    vertices = realize(SimplexEtf(args.classes, args.dim, args.alpha, pose))
    snapshot = ClassifierSnapshot(
        args.classes, args.dim, vertices.T, np.zeros(args.classes)
    )
    write_classifier(snapshot, args.out)
    dev = etf_deviation(vertices)
    _emit_table(
        ["classes", "dim", "alpha", "norm_cv", "cosine_std", "max_angle_dev"],
        [[args.classes, args.dim, args.alpha, dev.norm_cv, dev.cosine_std, dev.max_angle_dev]],
        args.format,
        None,
    )
    return 0


def cmd_codec(args) -> int:
    instance = codec.etf_codec(args.classes, args.sigma[0])
    analytic = codec.analytic_exponent(instance).beta
    points = codec.exponent_estimate(instance, args.sigma, args.trials, args.seed)
    header = ["sigma", "error_rate", "ci_halfwidth", "empirical_exponent", "analytic_beta"]
    rows = [
        [pt.sigma, pt.error_rate, pt.ci_halfwidth,
         pt.exponent if pt.usable else None, analytic]
        for pt in points
    ]
    _emit_table(header, rows, args.format, args.out)
    return 0


def cmd_lda(args) -> int:
    pack = read_pack(args.pack)
    snapshot = webb_lowe(compute_moments(pack), args.rtol)
    write_classifier(snapshot, args.out)
    return 0


def cmd_maxmargin(args) -> int:
    pack = read_pack(args.pack)
    m = compute_moments(pack)
    centered = m.centered_means
    spectral = float(np.linalg.norm(centered, 2))
    if spectral == 0.0:
        raise ValueError("degenerate pack: identical class means")
    scaled = centered / spectral
    weights = max_margin_solve(scaled, tol=args.tol)
    residual = float(np.linalg.norm(weights - scaled.T) / np.linalg.norm(scaled))
    _emit_table(
        ["classes", "dim", "spectral_scale", "duality_residual"],
        [[pack.num_classes, pack.feature_dim, spectral, residual]],
        args.format,
        args.out,
    )
    return 0


def cmd_synth(args) -> int:
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    missing = [k for k in ("feature_dim", "num_classes", "per_class_count", "epochs", "seed")
               if k not in doc]
    if missing:
        raise ValueError(f"synth config is missing required keys: {missing}")
    config = synth.SynthConfig(
        feature_dim=int(doc["feature_dim"]),
        num_classes=int(doc["num_classes"]),
        per_class_count=int(doc["per_class_count"]),
        epochs=int(doc["epochs"]),
        noise_schedule=tuple(doc["noise_schedule"]) if "noise_schedule" in doc else None,
        mean_trajectory=doc.get("mean_trajectory", "fixed_etf"),
        interpolation=tuple(doc["interpolation"]) if "interpolation" in doc else None,
        scale=float(doc.get("scale", 1.0)),
        seed=int(doc["seed"]),
    )
    manifest = synth.generate(config, args.out_dir)
    print(f"wrote {len(manifest.entries)} epochs to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nckit",
        description="Collapse metrics, simplex-ETF geometry, and codec exponents",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="per-epoch collapse metrics for a manifest")
    p.add_argument("manifest")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--probe", choices=("train", "test"), default="test")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("etf", help="write a posed simplex ETF as a classifier file")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_etf)

    p = sub.add_parser("codec", help="ETF codec error rates and exponents")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--sigma", type=float, action="append", required=True,
                   help="noise level; repeat in decreasing order for a sweep")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_codec)

    p = sub.add_parser("lda", help="fit the least-squares linear classifier to a pack")
    p.add_argument("pack")
    p.add_argument("--out", required=True)
    p.add_argument("--rtol", type=float, default=None)
    p.set_defaults(func=cmd_lda)

    p = sub.add_parser("maxmargin", help="max-margin solve on a pack's class means")
    p.add_argument("pack")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_maxmargin)

    p = sub.add_parser("synth", help="generate a synthetic trajectory from a JSON config")
    p.add_argument("config")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
