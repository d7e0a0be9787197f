"""Command-line entry point: run discovery over a sequence and write artifacts.

Outputs land in --out: detections.jsonl (one record per frame), timing.json
(per-stage means), metrics.csv when ground truth is available, and overlay
PNGs when --overlay is set. Exit codes: 0 success, 1 configuration error,
2 input/output error, 3 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .evaluation import (
    GroundTruth,
    evaluate_sequence,
    load_ground_truth,
    write_metrics_csv,
)
from .exceptions import (
    ConfigError,
    NonBinaryMaskError,
    ObjScoutError,
    ParseError,
    SchemaError,
)
from .geometry import Frame, iter_frames, list_frame_paths
from .pipeline import DetectionRecord, SalientObjectDiscovery, write_detections
from .synthetic import SyntheticSpec, generate_synthetic

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_PIPELINE = 3

_GT_COLOR = (0, 220, 60)
_DET_COLOR = (235, 60, 40)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="objscout",
        description="Discover the most salient object in an unlabeled image sequence.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", metavar="DIR", help="directory of sequence frames (png/ppm/jpg)")
    source.add_argument(
        "--synthetic",
        metavar="SPEC",
        help="generate a synthetic sequence first; SPEC is a JSON object or a path to one",
    )
    parser.add_argument("--proposals", metavar="FILE", help="proposal manifest (JSON); omit to use the saliency fallback generator")
    parser.add_argument("--embeddings", metavar="DIR", help="directory of per-frame embedding files; omit to use the built-in descriptor")
    parser.add_argument("--window", type=int, default=5, help="correspondence graph window in frames")
    parser.add_argument("--nms-iou", type=float, default=0.5, help="suppression overlap threshold")
    parser.add_argument("--gate", type=float, default=0.4, help="minimum similarity for a cross-frame match")
    parser.add_argument("--lambda", dest="path_weight", type=float, default=1.0, help="edge weight in the path score")
    parser.add_argument("--passes", type=int, default=3, help="raster scans of the saliency transform")
    parser.add_argument("--keep-max", type=int, default=100, help="proposals kept per frame after suppression")
    parser.add_argument("--ncc-gate", type=float, default=0.3, help="minimum correlation peak for predicted boxes")
    parser.add_argument("--out", metavar="DIR", default="objscout_out", help="output directory")
    parser.add_argument("--overlay", action="store_true", help="write per-frame overlay PNGs")
    parser.add_argument("--gt", metavar="DIR", help="ground truth: mask directory or gt.json manifest")
    parser.add_argument("--seed", type=int, default=0, help="seed for synthetic generation")
    return parser


def _load_synthetic_spec(arg: str, seed: int) -> SyntheticSpec:
    text = arg
    if not arg.lstrip().startswith("{"):
        path = Path(arg)
        if not path.is_file():
            raise ConfigError(f"synthetic spec file does not exist: {arg}")
        text = path.read_text(encoding="utf-8")
    try:
        return SyntheticSpec.from_json(text, seed=seed)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"synthetic spec is not valid JSON: {exc}") from exc


def _write_overlay(frame: Frame, record: DetectionRecord, gt: GroundTruth | None, path: Path) -> None:
    img = Image.fromarray(np.rint(frame.rgb * 255.0).astype(np.uint8))
    draw = ImageDraw.Draw(img)
    gt_box = gt.boxes.get(frame.index) if gt is not None else None
    if gt_box is not None:
        draw.rectangle([gt_box.x, gt_box.y, gt_box.x2 - 1, gt_box.y2 - 1], outline=_GT_COLOR)
    if record.box is not None:
        b = record.box
        draw.rectangle([b.x, b.y, b.x2 - 1, b.y2 - 1], outline=_DET_COLOR)
    img.save(path)


def _timing_summary(records: list[DetectionRecord]) -> dict:
    stages = sorted({k for r in records for k in r.timings_ms})
    summary = {
        f"mean_{stage}_ms": statistics.fmean(r.timings_ms.get(stage, 0.0) for r in records)
        for stage in stages
    }
    summary["frames"] = len(records)
    summary["mean_seconds_per_frame"] = summary.get("mean_total_ms", 0.0) / 1e3
    return summary


def run(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    gt_source = args.gt
    if args.synthetic is not None:
        spec = _load_synthetic_spec(args.synthetic, args.seed)
        input_dir, gt_path = generate_synthetic(spec, out_dir / "synthetic")
        if gt_source is None:
            gt_source = str(gt_path)
    else:
        input_dir = Path(args.input)
        if not input_dir.is_dir():
            raise OSError(f"input directory does not exist: {input_dir}")
        if not list_frame_paths(input_dir):
            raise OSError(f"no frame images found in {input_dir}")

    estimator = SalientObjectDiscovery(
        window=args.window,
        keep_max=args.keep_max,
        nms_iou=args.nms_iou,
        gate=args.gate,
        path_weight=args.path_weight,
        ncc_peak_gate=args.ncc_gate,
        passes=args.passes,
        proposals=args.proposals,
        embeddings=args.embeddings,
    )
    session = estimator.session()

    gt = load_ground_truth(gt_source) if gt_source is not None else None

    overlay_dir = out_dir / "overlays"
    if args.overlay:
        overlay_dir.mkdir(exist_ok=True)

    records: list[DetectionRecord] = []
    for frame in iter_frames(input_dir):
        record = session.process_frame(frame)
        records.append(record)
        if args.overlay:
            _write_overlay(frame, record, gt, overlay_dir / f"{frame.index:05d}.png")

    detections_path = out_dir / "detections.jsonl"
    write_detections(detections_path, records)

    summary = _timing_summary(records)
    (out_dir / "timing.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(
        f"processed {len(records)} frames at "
        f"{summary['mean_seconds_per_frame']:.4f} s/frame -> {detections_path}"
    )

    if gt is not None:
        detections = {r.frame: r.box for r in records}
        scored = [
            (r.frame, r.box, r.objectness) for r in records if r.box is not None
        ]
        report = evaluate_sequence(
            detections, scored, gt, summary["mean_seconds_per_frame"]
        )
        metrics_path = out_dir / "metrics.csv"
        write_metrics_csv(metrics_path, [(gt.sequence, report)])
        print(
            f"precision={report.precision:.3f} recall={report.recall:.3f} "
            f"f_score={report.f_score:.3f} corloc={report.corloc:.3f} "
            f"ap={report.ap:.3f} -> {metrics_path}"
        )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return run(args)
    except ConfigError as exc:
        print(f"objscout: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError, SchemaError, NonBinaryMaskError) as exc:
        print(f"objscout: input/output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ObjScoutError, ValueError) as exc:
        print(f"objscout: pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
