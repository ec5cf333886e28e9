"""Acceptance criteria AC-1 .. AC-10.

Each test prints one ``AC-n PASS|FAIL`` line with the measured values and its
runtime; the lines are repeated in the terminal summary.  Tolerances and
budgets are the ones the criteria state; nothing here is loosened.
"""
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from maskcue import cli, io, synth
from maskcue.assign import solve
from maskcue.association import Variant
from maskcue.geometry import BBox, MaskObservation, mask_bbox_ratios
from maskcue.metrics import clear_match_frame, clear_mot, evaluate, idf1

from .oracles import best_matching, clear_reference, idf1_reference, random_scene, to_bboxes

RESULTS: list[str] = []


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def verdict(ac: str, ok: bool, detail: str, elapsed: float, budget: float | None) -> None:
    within = budget is None or elapsed < budget
    passed = ok and within
    limit = f" (budget {budget:g}s)" if budget is not None else ""
    line = f"{ac} {'PASS' if passed else 'FAIL'}: {detail}; {elapsed:.2f}s{limit}"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


def mean_idf1(reports) -> float:
    return math.fsum(r.idf1 for r in reports) / len(reports)


# -- AC-1 ----------------------------------------------------------------------


def test_ac1_assignment_matches_brute_force():
    rng = np.random.default_rng(20240601)
    gate = 0.8
    bad = []
    with Timer() as t:
        for k in range(1000):
            n, m = (int(v) for v in rng.integers(1, 8, 2))
            cost = rng.uniform(-1.0, 2.0, (n, m))
            got = solve(cost, gate).matches
            _, pairs = best_matching(cost, gate)
            got_stats = (len(got), math.fsum(cost[i, j] for i, j in got))
            ref_stats = (len(pairs), math.fsum(cost[i, j] for i, j in pairs))
            if got_stats != ref_stats:
                bad.append(k)
    verdict("AC-1", not bad, f"1000 matrices up to 7x7, gate 0.8, mismatches={len(bad)}", t.elapsed, 10.0)


# -- AC-2 ----------------------------------------------------------------------


def _pixel_count(mask: np.ndarray, b: BBox) -> tuple[int, int]:
    h, w = mask.shape
    inter = rect = 0
    for r in range(h):
        in_row = math.floor(b.y + 0.5) <= r < math.floor(b.y + b.h + 0.5)
        for c in range(w):
            inside = in_row and math.floor(b.x + 0.5) <= c < math.floor(b.x + b.w + 0.5)
            rect += inside
            inter += inside and bool(mask[r, c])
    return inter, rect


def test_ac2_mask_box_ratios_match_pixel_counting():
    rng = np.random.default_rng(7)
    bad = []
    with Timer() as t:
        for k in range(1000):
            mask = rng.random((64, 64)) < rng.uniform(0.02, 0.6)
            if k % 4 == 0:  # blobs as well as noise
                mask[:] = False
                r0, c0 = rng.integers(0, 60, 2)
                mask[r0 : r0 + rng.integers(1, 30), c0 : c0 + rng.integers(1, 30)] = True
            x, y = rng.uniform(-10, 70, 2)
            w, h = rng.uniform(0.5, 50, 2)
            b = BBox(float(x), float(y), float(w), float(h))
            obs = MaskObservation.from_array(mask, 0.9)
            got = mask_bbox_ratios(obs, b)
            inter, rect = _pixel_count(mask, b)
            area = int(mask.sum())
            mc = inter / area if area else 0.0
            mf = inter / rect if rect else 0.0
            identity = round(got.mc * area) == round(got.mf * rect) == got.inter if rect and area else got.inter == 0
            if (got.mc, got.mf, got.inter) != (mc, mf, inter) or not identity:
                bad.append(k)
    verdict("AC-2", not bad, f"1000 random 64x64 (mask, box) pairs, mismatches={len(bad)}", t.elapsed, 10.0)


# -- AC-3 ----------------------------------------------------------------------


def test_ac3_crossing_baseline_switches_mcbyte_does_not():
    with Timer() as t:
        scn = synth.generate(synth.preset("crossing", seed=7))
        _, base = synth.run_scenario(scn, "baseline")
        _, mc = synth.run_scenario(scn, "mcbyte")
    ok = base.idsw >= 1 and mc.idsw == 0 and mc.idf1 > base.idf1
    detail = f"baseline IDSW={base.idsw} IDF1={base.idf1:.4f}; mcbyte IDSW={mc.idsw} IDF1={mc.idf1:.4f}"
    verdict("AC-3", ok, detail, t.elapsed, 5.0)


# -- AC-4 ----------------------------------------------------------------------


def test_ac4_ablation_trend_on_occlusion_cluster():
    variants = ("baseline", "a1", "a3", "a4", "a5", "a6")
    reports = {v: [] for v in variants}
    with Timer() as t:
        for seed in range(20):
            scn = synth.generate(synth.preset("occlusion_cluster", seed))
            for v in variants:
                reports[v].append(synth.run_scenario(scn, v)[1])
    m = {v: mean_idf1(reports[v]) for v in variants}
    ok = m["a1"] < m["a3"] <= m["a4"] <= m["a5"] <= m["a6"] and m["a6"] >= m["baseline"] + 0.02
    detail = "mean IDF1 over 20 seeds: " + " ".join(f"{v}={m[v]:.4f}" for v in variants)
    verdict("AC-4", ok, detail, t.elapsed, 60.0)


# -- AC-5 ----------------------------------------------------------------------


def test_ac5_mcbyte_without_cues_equals_baseline(tmp_path):
    differing = []
    with Timer() as t:
        for name in synth.PRESETS:
            d = tmp_path / name
            synth.write_scenario(synth.generate(synth.preset(name, 0)), d)
            out = {}
            for v in (Variant.BASELINE, Variant.MCBYTE):
                p = tmp_path / f"{name}.{v.value}.txt"
                code = cli.main(["track", "--det", str(d / "det.txt"), "--variant", v.value, "--out", str(p)])
                assert code == 0
                out[v] = p.read_bytes()
            if out[Variant.BASELINE] != out[Variant.MCBYTE]:
                differing.append(name)
    verdict("AC-5", not differing, f"presets with differing bytes: {differing or 'none'}", t.elapsed, 10.0)


# -- AC-6 ----------------------------------------------------------------------


def test_ac6_perfect_input_is_perfect():
    scores = {}
    with Timer() as t:
        scn = synth.generate(synth.preset("pedestrian_plain"))
        for v in Variant:
            r = synth.run_scenario(scn, v.value)[1]
            scores[v.value] = (r.mota, r.idf1)
    ok = all(s == (1.0, 1.0) for s in scores.values())
    worst = min(scores.values())
    verdict("AC-6", ok, f"{len(scores)} variants, worst (MOTA, IDF1)={worst}", t.elapsed, 5.0)


# -- AC-7 ----------------------------------------------------------------------


def test_ac7_cmc_helps_under_camera_jumps():
    with Timer() as t:
        scn = synth.generate(synth.preset("blur_pan", 0))
        with_warps = synth.run_scenario(scn, "mcbyte", warps=True)[1]
        identity = synth.run_scenario(scn, "mcbyte", warps=False)[1]
    ok = with_warps.idf1 > identity.idf1
    verdict("AC-7", ok, f"IDF1 with warps={with_warps.idf1:.4f}, identity={identity.idf1:.4f}", t.elapsed, 5.0)


# -- AC-8 ----------------------------------------------------------------------


def test_ac8_metrics_match_brute_force():
    bad = 0
    with Timer() as t:
        rng = np.random.default_rng(8)
        for _ in range(100):
            gt, res = random_scene(rng)
            tp, fp, fn, idsw = clear_reference(gt, res)
            m, ev, total = clear_mot(to_bboxes(gt), to_bboxes(res))
            ref_mota = 1.0 - (fp + fn + idsw) / sum(len(v) for v in gt.values())
            if (ev.tp, ev.fp, ev.fn, ev.idsw) != (tp, fp, fn, idsw) or m != ref_mota:
                bad += 1
            elif idf1(to_bboxes(gt), to_bboxes(res)) != idf1_reference(gt, res):
                bad += 1

        def b(x):
            return BBox(x, 0.0, 20.0, 20.0)

        gt = {f: [(1, b(0.0)), (2, b(100.0))] for f in range(1, 7)}
        res = {f: [(10, b(0.0)), (20, b(100.0))] if f <= 3 else [(20, b(0.0)), (10, b(100.0))] for f in range(1, 7)}
        swap_idsw = evaluate(gt, res).idsw
        L = 10
        gt = {f: [(1, b(0.0))] for f in range(1, L + 1)}
        res = {f: [(7 if f <= L // 2 else 8, b(0.0))] for f in range(1, L + 1)}
        split = idf1(gt, res)[0]
    ok = bad == 0 and swap_idsw == 2 and split == 0.5
    detail = f"100 random scenes, mismatches={bad}; swap IDSW={swap_idsw}; half-lifetime IDF1={split}"
    verdict("AC-8", ok, detail, t.elapsed, 20.0)


# -- AC-9 ----------------------------------------------------------------------


def test_ac9_format_round_trips(tmp_path):
    rng = np.random.default_rng(9)
    with Timer() as t:
        recs = [
            io.MotRecord(
                int(rng.integers(1, 10000)),
                int(rng.integers(-1, 1000)),
                float(rng.uniform(-500, 2000)),
                float(rng.uniform(-500, 2000)),
                float(rng.uniform(0.01, 500)),
                float(rng.uniform(0.01, 500)),
                float(rng.random()),
            )
            for _ in range(1000)
        ]
        back = io.parse_mot_text(io.write_mot(recs))
        mot_ok = back == sorted(recs, key=lambda r: (r.frame, r.id))

        rle_bad = 0
        masks = rng.random((10000, 32, 32)) < rng.random((10000, 1, 1))
        for mask in masks:
            if not np.array_equal(io.rle_decode(io.rle_encode(mask), 32, 32), mask):
                rle_bad += 1

        d = tmp_path / "scn"
        synth.write_scenario(synth.generate(synth.preset("crossing", 7)), d)
        outs = []
        for k in range(2):
            p = tmp_path / f"r{k}.txt"
            cli.main(["track", "--det", str(d / "det.txt"), "--masks", str(d / "masks.txt"), "--warps", str(d / "warps.txt"), "--out", str(p)])
            outs.append(p.read_bytes())
        golden_ok = outs[0] == outs[1] and len(outs[0]) > 0
    ok = mot_ok and rle_bad == 0 and golden_ok
    detail = f"MOT 1000 records exact={mot_ok}; RLE 10000 masks mismatches={rle_bad}; golden bytes stable={golden_ok}"
    verdict("AC-9", ok, detail, t.elapsed, 10.0)


# -- AC-10 ---------------------------------------------------------------------


def _mot17_style_pair(d: Path) -> tuple[Path, Path]:
    """A det/gt pair in the 10- and 9-column layouts the public benchmark ships."""
    scn = synth.generate(synth.preset("occlusion_cluster", 4))
    det = d / "det.txt"
    gt = d / "gt.txt"
    det.write_text(
        "".join(
            f"{f},-1,{io.fmt_num(x.bbox.x)},{io.fmt_num(x.bbox.y)},{io.fmt_num(x.bbox.w)},{io.fmt_num(x.bbox.h)},{io.fmt_num(x.score)},-1,-1,-1\n"
            for f, ds in sorted(scn.detections.items())
            for x in ds
        )
    )
    # gt rows: frame,id,x,y,w,h,consider,class,visibility
    gt.write_text(
        "".join(
            f"{f},{i},{io.fmt_num(b.x)},{io.fmt_num(b.y)},{io.fmt_num(b.w)},{io.fmt_num(b.h)},1,1,1.0\n"
            for f, items in sorted(scn.gt.items())
            for i, b in items
        )
    )
    return det, gt


def test_ac10_real_data_smoke(tmp_path):
    det = os.environ.get("MASKCUE_SMOKE_DET")
    gt = os.environ.get("MASKCUE_SMOKE_GT")
    source = "supplied pair"
    if not (det and gt):
        det, gt = _mot17_style_pair(tmp_path)
        source = "generated MOT17-layout pair (set MASKCUE_SMOKE_DET/GT for real data)"
    res = tmp_path / "res.txt"
    with Timer() as t:
        track = subprocess.run(
            [sys.executable, "-m", "maskcue", "track", "--det", str(det), "--out", str(res)],
            capture_output=True,
            text=True,
        )
        ev = subprocess.run(
            [sys.executable, "-m", "maskcue", "eval", "--gt", str(gt), "--res", str(res)],
            capture_output=True,
            text=True,
        )
    values = dict(line.split("=", 1) for line in ev.stdout.splitlines() if "=" in line)
    parsed = {k: float(v) for k, v in values.items()}
    ok = track.returncode == 0 and ev.returncode == 0 and set(cli.REPORT_KEYS) <= set(parsed)
    detail = f"{source}: track exit={track.returncode}, eval exit={ev.returncode}, keys parsed={len(parsed)}"
    verdict("AC-10", ok, detail, t.elapsed, None)
