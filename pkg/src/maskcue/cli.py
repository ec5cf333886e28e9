"""Command-line entry point: track, eval, synth and ablate."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .association import Variant
from .cmc import FileWarps, MissingWarpError
from .config import ConfigError, TrackerConfig
from .maskprov import FileMaskProvider
from .metrics import EvalReport, MetricError, evaluate, sequence_from_records
from .tracker import Detection, FrameError, frames_from_records, run_sequence

EXIT_OK, EXIT_USAGE, EXIT_INPUT = 0, 1, 2
REPORT_KEYS = ("mota", "idf1", "fp", "fn", "idsw", "gt_count", "idtp", "idfp", "idfn")
TABLE_KEYS = ("mota", "idf1", "fp", "fn", "idsw")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def _table(rows: list[tuple[str, EvalReport]], label: str) -> str:
    header = [label] + [k.upper() for k in TABLE_KEYS]
    body = [[name] + [_fmt(r.as_dict()[k]) for k in TABLE_KEYS] for name, r in rows]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths))) for row in [header] + body]
    return "\n".join(lines) + "\n"


def _kv(report: EvalReport, prefix: str = "") -> str:
    d = report.as_dict()
    return "".join(f"{prefix}{k}={io.fmt_num(d[k])}\n" for k in REPORT_KEYS)


# -- loaders -------------------------------------------------------------------


def _load_config(path: Optional[str], variant: Optional[str]) -> TrackerConfig:
    cfg = io.parse_config(path) if path else TrackerConfig()
    if variant is not None:
        cfg = replace(cfg, variant=Variant.parse(variant))
    return cfg


def _load_detections(path: str) -> tuple[dict[int, list[Detection]], int]:
    records = io.read_mot(path)
    dets: dict[int, list[Detection]] = {}
    for r in records:
        if not (r.w > 0 and r.h > 0):
            raise InputError(f"{path}: frame {r.frame}: detection has non-positive size")
        dets.setdefault(r.frame, []).append(Detection(r.bbox, min(max(r.score, 0.0), 1.0)))
    return dets, max(dets, default=0)


def _load_gt(path: str) -> dict:
    # score 0 marks rows the benchmark ignores
    return sequence_from_records(r for r in io.read_mot(path) if r.score != 0.0)


def track_files(
    det: str,
    masks: Optional[str] = None,
    warps: Optional[str] = None,
    cfg: TrackerConfig = TrackerConfig(),
) -> list[io.MotRecord]:
    det_by_frame, n_frames = _load_detections(det)
    provider = FileMaskProvider(io.read_masks(masks)) if masks else None
    source = None
    if warps:
        source = FileWarps(io.read_warps(warps), warps)
        n_frames = max([n_frames] + source.frames())
    outputs = run_sequence(frames_from_records(det_by_frame, n_frames, source), cfg, provider)
    return [
        io.MotRecord(f, o.id, *o.bbox.as_tuple(), o.score)
        for f, outs in enumerate(outputs, start=1)
        for o in outs
    ]


# -- subcommands ---------------------------------------------------------------


def cmd_track(args) -> int:
    cfg = _load_config(args.config, args.variant)
    records = track_files(args.det, args.masks, args.warps, cfg)
    io.write_mot_file(args.out, records)
    return EXIT_OK


def cmd_eval(args) -> int:
    gt = _load_gt(args.gt)
    res = sequence_from_records(io.read_mot(args.res))
    report = evaluate(gt, res)
    sys.stdout.write(_table([(Path(args.res).name, report)], "result"))
    sys.stdout.write(_kv(report))
    if args.report_out:
        Path(args.report_out).write_text(_kv(report), encoding="ascii")
    return EXIT_OK


def cmd_synth(args) -> int:
    from . import synth

    if args.spec:
        spec = synth.ScenarioSpec.from_json(Path(args.spec).read_text(encoding="ascii"))
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    else:
        spec = synth.preset(args.preset, args.seed if args.seed is not None else 0)
    synth.write_scenario(synth.generate(spec), args.out)
    return EXIT_OK


def _parse_variants(text: str) -> list[Variant]:
    out = []
    for name in text.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            v = Variant.parse(name)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if v not in out:
            out.append(v)
    if not out:
        raise UsageError("no variants given")
    return out


def ablate(scenario_dirs: Sequence[str], variants: Sequence[Variant], cfg: TrackerConfig = TrackerConfig()) -> list[tuple[str, EvalReport]]:
    """Run each variant over every scenario directory; metrics are pooled across scenarios."""
    scenes = []
    for d in scenario_dirs:
        p = Path(d)
        masks = p / "masks.txt"
        warps = p / "warps.txt"
        scenes.append(
            (
                str(p / "det.txt"),
                str(masks) if masks.exists() else None,
                str(warps) if warps.exists() else None,
                _load_gt(str(p / "gt.txt")),
            )
        )
    rows = []
    for v in variants:
        gt_all: dict = {}
        res_all: dict = {}
        # give each scene its own frame and id range so events never mix
        frame_base = 0
        id_base = 0
        for det, masks, warps, gt in scenes:
            recs = track_files(det, masks, warps, replace(cfg, variant=v))
            res = sequence_from_records(recs)
            span = max(list(gt) + list(res) + [0])
            ids = [i for items in list(gt.values()) + list(res.values()) for i, _ in items]
            width = max([abs(i) for i in ids] + [0]) + 1
            for f, items in gt.items():
                gt_all[f + frame_base] = [(i + id_base, b) for i, b in items]
            for f, items in res.items():
                res_all[f + frame_base] = [(i + id_base, b) for i, b in items]
            frame_base += span
            id_base += width
        rows.append((v.value, evaluate(gt_all, res_all)))
    return rows


def cmd_ablate(args) -> int:
    variants = _parse_variants(args.variants)
    dirs = [d for item in args.scenario_dir for d in item.split(",") if d]
    for d in dirs:
        if not Path(d).is_dir():
            raise InputError(f"{d}: not a directory")
    rows = ablate(dirs, variants, _load_config(args.config, None))
    sys.stdout.write(_table(rows, "variant"))
    kv = "".join(_kv(r, f"{name}.") for name, r in rows)
    sys.stdout.write(kv)
    if args.report_out:
        Path(args.report_out).write_text(kv, encoding="ascii")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .synth import PRESETS

    p = _Parser(prog="maskcue", description="Mask-assisted multi-object tracking on MOT-format files.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    variants = [v.value for v in Variant]

    t = sub.add_parser("track", help="track detections and write MOT results")
    t.add_argument("--det", required=True, help="MOT detection file")
    t.add_argument("--masks", help="mask-stream file; without it masks never pass the gate")
    t.add_argument("--warps", help="per-frame warp file; identity when omitted")
    t.add_argument("--config", help="key = value tracker config")
    t.add_argument("--variant", choices=variants, help="override the configured variant")
    t.add_argument("--out", required=True, help="result file")
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("eval", help="score a result file against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--res", required=True)
    e.add_argument("--report-out", help="also write the metric=value lines here")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="write a synthetic scenario directory")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESETS)
    src.add_argument("--spec", help="scenario JSON (as written to scenario.json)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("ablate", help="compare variants over scenario directories")
    a.add_argument("--scenario-dir", required=True, action="append", help="repeatable or comma-separated")
    a.add_argument("--variants", default=",".join(variants), help="comma-separated, in output order")
    a.add_argument("--config")
    a.add_argument("--report-out")
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"maskcue: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FrameError as exc:
        print(f"maskcue: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (io.FormatError, InputError, ConfigError, MetricError, MissingWarpError) as exc:
        print(f"maskcue: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnicodeDecodeError as exc:
        print(f"maskcue: error: input is not ASCII text ({exc.reason})", file=sys.stderr)
        return EXIT_INPUT
    except (TypeError, KeyError, ValueError) as exc:
        if args.command != "synth":
            raise
        print(f"maskcue: error: {args.spec}: invalid scenario ({exc})", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"maskcue: error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
