"""Readers and writers for MOT text files, mask streams, warps and configs.

Every reader rejects malformed input with a ``FormatError`` that names the
file, the 1-based line and, where it applies, the 1-based field.  Numbers are
written in shortest round-trip positional notation, independent of locale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .association import Variant
from .cmc import WarpTransform
from .config import ConfigError, TrackerConfig
from .geometry import BBox, MaskObservation
from .maskprov import MaskStream


class FormatError(ValueError):
    def __init__(self, message: str, source: str = "<string>", line: int = 0, field: Optional[int] = None):
        where = f"{source}:{line}" if line else source
        if field is not None:
            where += f": field {field}"
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line
        self.field = field


def fmt_num(x: float) -> str:
    """Shortest decimal that round-trips to ``x``, never in exponent form."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot write non-finite number {x}")
    if x == 0.0:
        return "0"
    return np.format_float_positional(x, unique=True, trim="-")


# -- MOT records ---------------------------------------------------------------


@dataclass(frozen=True)
class MotRecord:
    frame: int
    id: int
    x: float
    y: float
    w: float
    h: float
    score: float = 1.0

    @property
    def bbox(self) -> BBox:
        return BBox(self.x, self.y, self.w, self.h)


def _int_field(text: str, idx: int, source: str, line_no: int) -> int:
    try:
        v = float(text)
    except ValueError:
        raise FormatError(f"expected an integer, got {text!r}", source, line_no, idx) from None
    if not v.is_integer():
        raise FormatError(f"expected an integer, got {text!r}", source, line_no, idx)
    return int(v)


def _float_field(text: str, idx: int, source: str, line_no: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise FormatError(f"expected a number, got {text!r}", source, line_no, idx) from None
    if not math.isfinite(v):
        raise FormatError(f"non-finite number {text!r}", source, line_no, idx)
    return v


def parse_mot(line: str, line_no: int = 1, source: str = "<string>") -> MotRecord:
    parts = [p.strip() for p in line.strip().split(",")]
    if len(parts) < 7:
        raise FormatError(f"expected at least 7 comma-separated fields, got {len(parts)}", source, line_no)
    frame = _int_field(parts[0], 1, source, line_no)
    if frame < 1:
        raise FormatError(f"frame must be >= 1, got {frame}", source, line_no, 1)
    tid = _int_field(parts[1], 2, source, line_no)
    x, y, w, h, score = (_float_field(parts[k], k + 1, source, line_no) for k in range(2, 7))
    return MotRecord(frame, tid, x, y, w, h, score)


def read_mot(path: str | Path) -> list[MotRecord]:
    source = str(path)
    try:
        text = Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError as exc:
        raise FormatError(f"not ASCII text ({exc.reason})", source) from None
    return parse_mot_text(text, source)


def parse_mot_text(text: str, source: str = "<string>") -> list[MotRecord]:
    out = []
    for k, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        out.append(parse_mot(line, k, source))
    return out


def write_mot(records: Iterable[MotRecord]) -> str:
    rows = sorted(records, key=lambda r: (r.frame, r.id))
    lines = []
    for r in rows:
        if not (r.w > 0 and r.h > 0):
            raise ValueError(f"record at frame {r.frame}, id {r.id} has non-positive size")
        nums = (r.x, r.y, r.w, r.h, r.score)
        lines.append(f"{r.frame},{r.id}," + ",".join(fmt_num(v) for v in nums) + ",-1,-1,-1\n")
    return "".join(lines)


def write_mot_file(path: str | Path, records: Iterable[MotRecord]) -> None:
    Path(path).write_bytes(write_mot(records).encode("ascii"))


def group_by_frame(records: Iterable[MotRecord]) -> dict[int, list[MotRecord]]:
    out: dict[int, list[MotRecord]] = {}
    for r in records:
        out.setdefault(r.frame, []).append(r)
    return out


# -- RLE -----------------------------------------------------------------------


def rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major run lengths of a 2-D boolean mask, background first."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    return [int(v) for v in _kernels.rle_encode(mask.reshape(-1).astype(np.uint8))]


def rle_decode(runs: Sequence[int], width: int, height: int) -> np.ndarray:
    runs = [int(r) for r in runs]
    check_runs(runs, width, height)
    flat = _kernels.rle_decode(np.asarray(runs, dtype=np.int64), width * height)
    return flat.reshape(height, width).astype(bool)


def check_runs(runs: Sequence[int], width: int, height: int) -> None:
    if not runs:
        raise ValueError("empty run list")
    for k, r in enumerate(runs):
        if r < 0 or (r == 0 and k != 0):
            raise ValueError(f"run {k + 1} has invalid length {r}")
    total = sum(runs)
    if total != width * height:
        raise ValueError(f"run lengths sum to {total}, expected {width * height} ({width}x{height})")


# -- warp files ----------------------------------------------------------------


def read_warps(path: str | Path) -> dict[int, WarpTransform]:
    source = str(path)
    table: dict[int, WarpTransform] = {}
    for k, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 7:
            raise FormatError(f"expected 7 space-separated fields, got {len(parts)}", source, k)
        frame = _int_field(parts[0], 1, source, k)
        if frame < 1:
            raise FormatError(f"frame must be >= 1, got {frame}", source, k, 1)
        if frame in table:
            raise FormatError(f"duplicate entry for frame {frame}", source, k, 1)
        coeffs = [_float_field(parts[i], i + 1, source, k) for i in range(1, 7)]
        try:
            table[frame] = WarpTransform(*coeffs)
        except ValueError as exc:
            raise FormatError(str(exc), source, k) from None
    return table


def write_warps(warps: dict[int, WarpTransform]) -> str:
    return "".join(
        f"{f} " + " ".join(fmt_num(v) for v in warps[f].coefficients()) + "\n" for f in sorted(warps)
    )


# -- mask-stream files ---------------------------------------------------------


def read_masks(path: str | Path) -> list[MaskStream]:
    return parse_masks(Path(path).read_text(encoding="ascii"), str(path))


def parse_masks(text: str, source: str = "<string>") -> list[MaskStream]:
    streams: dict[int, MaskStream] = {}
    dims: Optional[tuple[int, int]] = None
    for k, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "S":
            if len(parts) != 7:
                raise FormatError(f"stream header needs 7 fields, got {len(parts)}", source, k)
            sid = _int_field(parts[1], 2, source, k)
            birth = _int_field(parts[2], 3, source, k)
            if sid in streams:
                raise FormatError(f"duplicate stream {sid}", source, k, 2)
            x, y, w, h = (_float_field(parts[i], i + 1, source, k) for i in range(3, 7))
            if not (w > 0 and h > 0):
                raise FormatError("birth box must have positive size", source, k, 6)
            streams[sid] = MaskStream(sid, birth, BBox(x, y, w, h))
        elif tag == "M":
            if len(parts) != 7:
                raise FormatError(f"mask line needs 7 fields, got {len(parts)}", source, k)
            sid = _int_field(parts[1], 2, source, k)
            if sid not in streams:
                raise FormatError(f"mask for undeclared stream {sid}", source, k, 2)
            frame = _int_field(parts[2], 3, source, k)
            stream = streams[sid]
            if frame < stream.birth_frame:
                raise FormatError(f"frame {frame} precedes birth frame {stream.birth_frame}", source, k, 3)
            if frame in stream.frames:
                raise FormatError(f"duplicate mask for stream {sid} frame {frame}", source, k, 3)
            conf = _float_field(parts[3], 4, source, k)
            if not 0.0 <= conf <= 1.0:
                raise FormatError(f"mean_conf {conf} outside [0, 1]", source, k, 4)
            width = _int_field(parts[4], 5, source, k)
            height = _int_field(parts[5], 6, source, k)
            if width <= 0 or height <= 0:
                raise FormatError("mask dimensions must be positive", source, k, 5)
            if dims is None:
                dims = (width, height)
            elif dims != (width, height):
                raise FormatError(f"mask size {width}x{height} differs from {dims[0]}x{dims[1]}", source, k, 5)
            try:
                runs = [int(r) for r in parts[6].split(",")]
                check_runs(runs, width, height)
            except ValueError as exc:
                raise FormatError(f"bad run lengths: {exc}", source, k, 7) from None
            if sum(runs[1::2]) == 0 and conf != 0.0:
                raise FormatError("empty mask must have mean_conf 0", source, k, 4)
            stream.frames[frame] = MaskObservation(width, height, tuple(runs), conf)
        else:
            raise FormatError(f"unknown record tag {tag!r}", source, k, 1)
    return [streams[s] for s in sorted(streams)]


def write_masks(streams: Sequence[MaskStream]) -> str:
    lines = []
    for s in sorted(streams, key=lambda s: s.stream_id):
        b = s.birth_bbox
        lines.append(f"S {s.stream_id} {s.birth_frame} " + " ".join(fmt_num(v) for v in b.as_tuple()) + "\n")
        for f in sorted(s.frames):
            m = s.frames[f]
            lines.append(
                f"M {s.stream_id} {f} {fmt_num(m.mean_confidence)} {m.width} {m.height} "
                + ",".join(str(r) for r in m.runs)
                + "\n"
            )
    return "".join(lines)


# -- config files --------------------------------------------------------------


_CONFIG_KEYS = {f.name: f for f in fields(TrackerConfig)}


def parse_config_text(text: str, source: str = "<string>") -> TrackerConfig:
    values: dict[str, object] = {}
    for k, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"expected 'key = value', got {raw.strip()!r}", source, k)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise FormatError(f"unknown key {key!r}", source, k)
        if key in values:
            raise FormatError(f"duplicate key {key!r}", source, k)
        try:
            if key == "variant":
                values[key] = Variant.parse(value)
            elif key == "track_buffer":
                values[key] = int(value)
            else:
                v = float(value)
                if not math.isfinite(v):
                    raise ValueError(f"non-finite value {value!r}")
                values[key] = v
        except ValueError as exc:
            raise FormatError(f"{key}: {exc}", source, k) from None
    try:
        return TrackerConfig(**values)
    except ConfigError as exc:
        raise FormatError(f"out of range: {exc}", source) from None


def parse_config(path: str | Path) -> TrackerConfig:
    return parse_config_text(Path(path).read_text(encoding="ascii"), str(path))


def write_config(cfg: TrackerConfig) -> str:
    out = []
    for name in _CONFIG_KEYS:
        v = getattr(cfg, name)
        out.append(f"{name} = {v.value if isinstance(v, Variant) else fmt_num(v)}\n")
    return "".join(out)
