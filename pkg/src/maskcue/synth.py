"""Deterministic synthetic sequences: ground truth, detections, masks and warps.

Objects follow piecewise-linear paths in world coordinates.  The camera
offset turns world positions into frame positions, and the per-frame warp
maps frame t-1 coordinates onto frame t.  Later-listed objects are drawn in
front of earlier ones; each object's visible mask is its silhouette minus the
silhouettes of everything in front of it.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .cmc import IDENTITY, WarpTransform
from .geometry import BBox, MaskObservation, iou, rasterize
from .maskprov import MaskNoise, MaskStream, OracleMaskProvider, oracle_noise
from .tracker import Detection


@dataclass(frozen=True)
class ObjectSpec:
    shape: str  # "ellipse" | "rectangle"
    size: tuple[float, float]
    path: tuple[tuple[float, float, float], ...]  # (frame, cx, cy) keyframes, world coords
    motion: str = "linear"
    appear: int = 1
    disappear: Optional[int] = None  # last frame present, inclusive

    def center(self, t: float) -> tuple[float, float]:
        """Piecewise-linear position; extrapolates the first/last segment."""
        p = self.path
        if len(p) == 1:
            return p[0][1], p[0][2]
        k = 0
        while k < len(p) - 2 and t > p[k + 1][0]:
            k += 1
        (t0, x0, y0), (t1, x1, y1) = p[k], p[k + 1]
        a = (t - t0) / (t1 - t0)
        return x0 + a * (x1 - x0), y0 + a * (y1 - y0)

    def present(self, t: int) -> bool:
        return t >= self.appear and (self.disappear is None or t <= self.disappear)


@dataclass(frozen=True)
class DetectorNoise:
    center_jitter: float = 0.0  # px std of box center
    size_jitter: float = 0.0  # relative std of width and height
    drop_prob: float = 0.0
    drop_prob_occluded: float = 0.0
    occlusion_level: float = 0.0  # visible fraction below which a detection counts as occluded
    score: float = 0.95
    score_occlusion_penalty: float = 0.0  # score -= penalty * (1 - visible fraction)
    score_jitter: float = 0.0
    blur_frames: tuple[int, ...] = ()
    blur_jitter: float = 0.0  # extra center jitter std on blur frames


@dataclass(frozen=True)
class CameraSpec:
    kind: str = "static"  # "static" | "pan" | "shake"
    velocity: tuple[float, float] = (0.0, 0.0)  # pan, px/frame
    amplitude: float = 0.0  # shake, px
    jumps: tuple[tuple[int, float, float], ...] = ()  # (frame, dx, dy) abrupt camera moves


@dataclass(frozen=True)
class ScenarioSpec:
    width: int
    height: int
    n_frames: int
    objects: tuple[ObjectSpec, ...]
    detector: DetectorNoise = DetectorNoise()
    camera: CameraSpec = CameraSpec()
    mask_noise: MaskNoise = MaskNoise()
    mask_conf: float = 0.95
    mask_conf_occlusion_penalty: float = 0.0
    mask_low_conf_frames: tuple[int, ...] = ()  # frames where every mask drops to 0.3 confidence
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_frames < 2:
            raise ValueError("a scenario needs at least 2 frames")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        d = self.detector
        for name in ("drop_prob", "drop_prob_occluded", "occlusion_level"):
            v = getattr(d, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"detector.{name}={v} outside [0, 1]")
        if not 0.0 <= self.mask_conf <= 1.0:
            raise ValueError("mask_conf outside [0, 1]")
        for o in self.objects:
            if o.shape not in ("ellipse", "rectangle"):
                raise ValueError(f"unknown shape {o.shape!r}")
            if not o.path:
                raise ValueError("object path is empty")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        d = json.loads(text)
        objects = tuple(
            ObjectSpec(
                o["shape"],
                tuple(o["size"]),
                tuple(tuple(k) for k in o["path"]),
                o.get("motion", "linear"),
                o.get("appear", 1),
                o.get("disappear"),
            )
            for o in d.pop("objects")
        )
        det = d.pop("detector", {})
        det["blur_frames"] = tuple(det.get("blur_frames", ()))
        cam = d.pop("camera", {})
        cam["velocity"] = tuple(cam.get("velocity", (0.0, 0.0)))
        cam["jumps"] = tuple(tuple(j) for j in cam.get("jumps", ()))
        d["mask_low_conf_frames"] = tuple(d.get("mask_low_conf_frames", ()))
        return cls(
            objects=objects,
            detector=DetectorNoise(**det),
            camera=CameraSpec(**cam),
            mask_noise=MaskNoise(**d.pop("mask_noise", {})),
            **d,
        )


@dataclass
class Scenario:
    spec: ScenarioSpec
    gt: dict[int, list[tuple[int, BBox]]]
    detections: dict[int, list[Detection]]
    visible_masks: dict[int, dict[int, MaskObservation]]  # object -> frame -> mask
    observed_masks: dict[int, dict[int, MaskObservation]]
    warps: dict[int, WarpTransform]
    camera_offsets: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return self.spec.n_frames

    def gt_boxes(self) -> dict[int, dict[int, BBox]]:
        return {f: dict(items) for f, items in self.gt.items()}

    def oracle_provider(self, noisy: bool = True) -> OracleMaskProvider:
        return OracleMaskProvider(self.gt_boxes(), self.observed_masks if noisy else self.visible_masks)

    def mask_streams(self) -> list[MaskStream]:
        """One stream per object, born at its first ground-truth frame."""
        streams = []
        for obj in sorted(self.observed_masks):
            frames = [f for f, items in sorted(self.gt.items()) if any(i == obj for i, _ in items)]
            if not frames:
                continue
            birth = frames[0]
            box = dict(self.gt[birth])[obj]
            streams.append(MaskStream(obj, birth, box, dict(self.observed_masks[obj])))
        return streams


def _silhouette(shape: str, box: BBox, width: int, height: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    rect = rasterize(box, width, height)
    if rect.count == 0:
        return mask
    if shape == "rectangle":
        mask[rect.row0 : rect.row1, rect.col0 : rect.col1] = True
        return mask
    cx, cy = box.center
    rx, ry = box.w / 2.0, box.h / 2.0
    cols = np.arange(rect.col0, rect.col1) + 0.5
    rows = np.arange(rect.row0, rect.row1) + 0.5
    inside = ((cols[None, :] - cx) / rx) ** 2 + ((rows[:, None] - cy) / ry) ** 2 < 1.0
    mask[rect.row0 : rect.row1, rect.col0 : rect.col1] = inside
    return mask


def _camera_offsets(spec: ScenarioSpec, rng: np.random.Generator) -> dict[int, tuple[float, float]]:
    cam = spec.camera
    jumps: dict[int, tuple[float, float]] = {}
    for f, dx, dy in cam.jumps:
        jx, jy = jumps.get(int(f), (0.0, 0.0))
        jumps[int(f)] = (jx + dx, jy + dy)
    out = {}
    jx = jy = 0.0
    for t in range(1, spec.n_frames + 1):
        if t in jumps:
            jx += jumps[t][0]
            jy += jumps[t][1]
        if cam.kind == "static":
            ox, oy = 0.0, 0.0
        elif cam.kind == "pan":
            ox, oy = cam.velocity[0] * (t - 1), cam.velocity[1] * (t - 1)
        elif cam.kind == "shake":
            if t == 1:
                ox, oy = 0.0, 0.0
            else:
                ox, oy = (float(v) for v in rng.uniform(-cam.amplitude, cam.amplitude, 2))
        else:
            raise ValueError(f"unknown camera kind {cam.kind!r}")
        out[t] = (ox + jx, oy + jy)
    return out


def generate(spec: ScenarioSpec) -> Scenario:
    rng = np.random.default_rng(spec.seed)
    W, H = spec.width, spec.height
    offsets = _camera_offsets(spec, rng)
    warps = {1: IDENTITY}
    for t in range(2, spec.n_frames + 1):
        dx = offsets[t][0] - offsets[t - 1][0]
        dy = offsets[t][1] - offsets[t - 1][1]
        warps[t] = IDENTITY if dx == 0.0 and dy == 0.0 else WarpTransform.translation(-dx, -dy)

    det_cfg = spec.detector
    gt: dict[int, list[tuple[int, BBox]]] = {}
    detections: dict[int, list[Detection]] = {}
    visible: dict[int, dict[int, MaskObservation]] = {k + 1: {} for k in range(len(spec.objects))}
    observed: dict[int, dict[int, MaskObservation]] = {k + 1: {} for k in range(len(spec.objects))}
    low_conf = set(spec.mask_low_conf_frames)
    blur = set(det_cfg.blur_frames)

    for t in range(1, spec.n_frames + 1):
        ox, oy = offsets[t]
        boxes: dict[int, BBox] = {}
        for k, o in enumerate(spec.objects):
            if not o.present(t):
                continue
            cx, cy = o.center(t)
            w, h = o.size
            boxes[k + 1] = BBox(cx - ox - w / 2.0, cy - oy - h / 2.0, w, h)
        gt[t] = sorted(boxes.items())

        sil = {i: _silhouette(spec.objects[i - 1].shape, b, W, H) for i, b in boxes.items()}
        front = np.zeros((H, W), dtype=bool)
        vis_frac: dict[int, float] = {}
        truth: dict[int, Optional[MaskObservation]] = {}
        for i in sorted(boxes, reverse=True):
            own = sil[i]
            area = int(own.sum())
            vis = own & ~front
            front |= own
            vis_frac[i] = float(vis.sum()) / area if area else 0.0
            if not vis.any():
                truth[i] = None
                continue
            conf = spec.mask_conf - spec.mask_conf_occlusion_penalty * (1.0 - vis_frac[i])
            if t in low_conf:
                conf = min(conf, 0.3)
            truth[i] = MaskObservation.from_array(vis, min(max(conf, 0.0), 1.0))

        for i in sorted(boxes):
            m = truth[i]
            if m is not None:
                visible[i][t] = m
            neighbour = None
            best = 0.0
            for j in sorted(boxes):
                if j != i and truth[j] is not None:
                    v = iou(boxes[i], boxes[j])
                    if v > best:
                        best, neighbour = v, truth[j]
            noisy = oracle_noise(m, spec.mask_noise, rng, neighbour)
            if noisy is not None:
                observed[i][t] = noisy

        dets = []
        for i in sorted(boxes):
            b = boxes[i]
            u_drop, u_occ = rng.random(2)
            jit = rng.normal(0.0, 1.0, 5)
            occluded = vis_frac[i] == 0.0 or vis_frac[i] < det_cfg.occlusion_level
            if u_drop < det_cfg.drop_prob or (occluded and u_occ < det_cfg.drop_prob_occluded):
                continue
            cj = det_cfg.center_jitter
            if t in blur:
                cj = math.hypot(cj, det_cfg.blur_jitter)
            cx, cy = b.center
            cx += cj * jit[0]
            cy += cj * jit[1]
            w = b.w * max(1.0 + det_cfg.size_jitter * jit[2], 0.2)
            h = b.h * max(1.0 + det_cfg.size_jitter * jit[3], 0.2)
            score = det_cfg.score - det_cfg.score_occlusion_penalty * (1.0 - vis_frac[i])
            score += det_cfg.score_jitter * jit[4]
            score = min(max(score, 0.0), 1.0)
            dets.append(Detection(BBox(cx - w / 2.0, cy - h / 2.0, w, h), score))
        detections[t] = dets

    return Scenario(spec, gt, detections, visible, observed, warps, offsets)


# -- presets -------------------------------------------------------------------

PRESETS = ("crossing", "occlusion_cluster", "blur_pan", "pedestrian_plain")


def preset(name: str, seed: int = 0) -> ScenarioSpec:
    if name == "crossing":
        return _crossing(seed)
    if name == "occlusion_cluster":
        return _occlusion_cluster(seed)
    if name == "blur_pan":
        return _blur_pan(seed)
    if name == "pedestrian_plain":
        return _pedestrian_plain(seed)
    raise ValueError(f"unknown preset {name!r} (expected one of {', '.join(PRESETS)})")


def _pedestrian_plain(seed: int) -> ScenarioSpec:
    objects = tuple(
        ObjectSpec("ellipse", (30.0, 80.0), ((1, x0, y0), (60, x0 + vx * 59, y0)), "linear")
        for x0, y0, vx in ((60.0, 80.0, 2.0), (300.0, 100.0, -1.5), (150.0, 250.0, 1.0), (500.0, 260.0, -2.5))
    )
    return ScenarioSpec(640, 360, 60, objects, seed=seed)


def _crossing(seed: int) -> ScenarioSpec:
    # A (listed first, smaller) walks behind B, both stop for 5 frames with A
    # fully hidden, then each retreats the way it came.  A's lost track keeps
    # coasting forward, so it finds no IoU overlap when A reappears.
    meet, hold, approach, retreat = 11, 5, 9.0, 9.0
    stop = meet + hold - 1
    a = ObjectSpec(
        "rectangle",
        (30.0, 70.0),
        ((1, 320.0 - 10 * approach, 180.0), (meet, 320.0, 180.0), (stop, 320.0, 180.0), (stop + 20, 320.0 - 20 * retreat, 180.0)),
        "crossing-pair",
    )
    b = ObjectSpec(
        "rectangle",
        (50.0, 100.0),
        ((1, 320.0 + 10 * approach, 180.0), (meet, 320.0, 180.0), (stop, 320.0, 180.0), (stop + 20, 320.0 + 20 * retreat, 180.0)),
        "crossing-pair",
    )
    det = DetectorNoise(center_jitter=1.0, drop_prob_occluded=1.0, score_occlusion_penalty=0.8)
    return ScenarioSpec(640, 360, stop + 21, (a, b), det, seed=seed)


def _blur_pan(seed: int) -> ScenarioSpec:
    # four walkers under a panning camera that jumps twice; the jumps land on
    # blurred frames where detections are jittery and masks unreliable
    n = 60
    objects = tuple(
        ObjectSpec(
            "ellipse",
            (36.0, 90.0),
            ((1, 150.0 + 50.0 * k, 180.0 + 10.0 * (k % 2)), (n, 150.0 + 50.0 * k + (0.5 if k % 2 else -0.5) * n, 180.0 + 10.0 * (k % 2))),
            "linear",
        )
        for k in range(4)
    )
    blur = (19, 20, 21, 39, 40, 41)
    det = DetectorNoise(center_jitter=1.0, blur_frames=blur, blur_jitter=6.0)
    cam = CameraSpec("pan", (3.0, 0.0), jumps=((20, 45.0, 0.0), (40, -45.0, 13.5)))
    return ScenarioSpec(640, 360, n, objects, det, cam, mask_low_conf_frames=blur, seed=seed)


def _occlusion_cluster(seed: int) -> ScenarioSpec:
    # five dancers wandering between random waypoints inside a tight region;
    # the layout is drawn from the seed, so every seed is a different scene
    rng = np.random.default_rng(seed)
    n, step = 80, 15
    objects = []
    for _ in range(5):
        size = (float(rng.uniform(28.0, 44.0)), float(rng.uniform(70.0, 100.0)))
        path = tuple(
            (t, float(rng.uniform(220.0, 420.0)), float(rng.uniform(150.0, 210.0)))
            for t in range(1, n + 1 + step, step)
        )
        objects.append(ObjectSpec("ellipse", size, path, "occlusion-cluster"))
    det = DetectorNoise(
        center_jitter=2.0,
        size_jitter=0.03,
        drop_prob=0.03,
        drop_prob_occluded=0.9,
        occlusion_level=0.3,
        score_occlusion_penalty=0.5,
    )
    noise = MaskNoise(dropout_prob=0.15, leak_prob=0.2, leak_conf_drop=0.5, swap_prob=0.3)
    return ScenarioSpec(640, 360, n, tuple(objects), det, mask_noise=noise, mask_conf=0.9, seed=seed)


def write_scenario(scn: Scenario, out_dir: str | Path) -> None:
    """Write det.txt, gt.txt, masks.txt, warps.txt and scenario.json."""
    from .io import MotRecord, write_masks, write_mot, write_warps

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    det_records = [
        MotRecord(f, -1, *d.bbox.as_tuple(), d.score) for f, ds in scn.detections.items() for d in ds
    ]
    # detections share id -1; keep generation order within a frame
    det_records.sort(key=lambda r: r.frame)
    gt_records = [MotRecord(f, i, *b.as_tuple(), 1.0) for f, items in scn.gt.items() for i, b in items]
    (out / "det.txt").write_bytes(write_mot(det_records).encode("ascii"))
    (out / "gt.txt").write_bytes(write_mot(gt_records).encode("ascii"))
    (out / "masks.txt").write_bytes(write_masks(scn.mask_streams()).encode("ascii"))
    (out / "warps.txt").write_bytes(write_warps(scn.warps).encode("ascii"))
    (out / "scenario.json").write_bytes((scn.spec.to_json() + "\n").encode("ascii"))


def run_scenario(
    scn: Scenario,
    variant,
    masks: str = "file",
    warps: bool = True,
    cfg=None,
):
    """Track a generated scenario and evaluate it against its ground truth.

    ``masks`` is "file" (streams bound at birth, as the CLI does), "oracle"
    (rebinding by ground truth) or "none".  Returns (outputs, EvalReport).
    """
    from .association import Variant
    from .cmc import FileWarps
    from .config import TrackerConfig
    from .maskprov import FileMaskProvider
    from .metrics import evaluate
    from .tracker import frames_from_records, run_sequence

    base = cfg if cfg is not None else TrackerConfig()
    cfg = replace(base, variant=Variant.parse(variant))
    if masks == "file":
        provider = FileMaskProvider(scn.mask_streams())
    elif masks == "oracle":
        provider = scn.oracle_provider()
    elif masks == "none":
        provider = None
    else:
        raise ValueError(f"unknown mask source {masks!r}")
    source = FileWarps(scn.warps) if warps else None
    frames = frames_from_records(scn.detections, scn.n_frames, source)
    outputs = run_sequence(frames, cfg, provider)
    res = {f: [(o.id, o.bbox) for o in outs] for f, outs in enumerate(outputs, start=1)}
    return outputs, evaluate(scn.gt, res)
