"""Compare the compiled and pure kernel backends.

Times each kernel on representative inputs, checks that both backends give
identical answers, and times one end-to-end tracking run per backend.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from maskcue import _kernels, synth
from maskcue.geometry import rasterize


def _cases(rng: np.random.Generator) -> dict[str, tuple]:
    boxes_a = np.column_stack([rng.uniform(0, 600, (60, 2)), rng.uniform(10, 120, (60, 2))])
    boxes_b = np.column_stack([rng.uniform(0, 600, (80, 2)), rng.uniform(10, 120, (80, 2))])
    mask = np.zeros((360, 640), dtype=np.uint8)
    yy, xx = np.mgrid[0:360, 0:640]
    mask[((xx - 320) / 80.0) ** 2 + ((yy - 180) / 120.0) ** 2 <= 1.0] = 1
    flat = mask.reshape(-1)
    runs = _kernels.rle_encode(flat)
    rects = np.array(
        [rasterize_xywh(x, y, w, h) for x, y, w, h in boxes_b], dtype=np.int64
    )
    cost = rng.uniform(0.0, 1.2, (40, 45))
    return {
        "iou_matrix 60x80": (_kernels.iou_matrix, (boxes_a, boxes_b)),
        "rle_encode 640x360": (_kernels.rle_encode, (flat,)),
        "rle_decode 640x360": (_kernels.rle_decode, (runs, flat.size)),
        "rle_rect_counts 80 rects": (_kernels.rle_rect_counts, (runs, 640, rects)),
        "matching 40x45 gated": (_kernels.min_cost_matching, (cost, 0.8)),
        "matching 40x45 max-card": (_kernels.min_cost_matching, (cost, 0.8, True)),
    }


def rasterize_xywh(x, y, w, h):
    from maskcue.geometry import BBox

    return tuple(rasterize(BBox(float(x), float(y), float(w), float(h)), 640, 360))


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def _best(fn, args, repeat: int) -> float:
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = _kernels.available()
    if backends == ["pure"]:
        print("compiled kernels are not built; only the pure backend is available")
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':28s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}  same")
    for name, (fn, fargs) in cases.items():
        times, outs = [], []
        for b in backends:
            _kernels.use(b)
            outs.append(fn(*fargs))
            times.append(_best(fn, fargs, args.repeat))
        same = all(_same(outs[0], o) for o in outs[1:])
        speedup = times[-1] / times[0] if len(times) > 1 else 1.0
        print(f"{name:28s}" + "".join(f"{t * 1e6:12.1f}us" for t in times) + f"{speedup:9.1f}x  {same}")

    scn = synth.generate(synth.preset("occlusion_cluster", 0))
    results = []
    for b in backends:
        _kernels.use(b)
        elapsed = min(timeit.repeat(lambda: synth.run_scenario(scn, "mcbyte"), number=1, repeat=3))
        results.append(elapsed)
        report = synth.run_scenario(scn, "mcbyte")[1]
        print(f"end-to-end occlusion_cluster ({b}): {elapsed * 1e3:.1f} ms, IDF1 {report.idf1:.4f}")
    if len(results) > 1:
        print(f"end-to-end speedup: {results[1] / results[0]:.2f}x")


if __name__ == "__main__":
    main()
