import json
from dataclasses import replace

import numpy as np
import pytest

from maskcue import synth
from maskcue.cmc import IDENTITY, warp_bbox
from maskcue.geometry import mask_bbox_ratios
from maskcue.maskprov import MaskNoise
from maskcue.synth import CameraSpec, DetectorNoise, ObjectSpec, ScenarioSpec, generate, preset


def one_object(**kw):
    obj = ObjectSpec("ellipse", (20.0, 40.0), ((1, 50.0, 60.0), (10, 95.0, 60.0)))
    return ScenarioSpec(200, 120, 10, (obj,), **kw)


def test_zero_noise_static_single_object():
    scn = generate(one_object())
    for f in range(1, 11):
        (oid, box), = scn.gt[f]
        (det,) = scn.detections[f]
        assert oid == 1 and det.bbox == box
        m = scn.observed_masks[1][f]
        assert m == scn.visible_masks[1][f]
        assert np.array_equal(m.to_array(), synth._silhouette("ellipse", box, 200, 120))
        assert scn.warps[f] == IDENTITY
    assert scn.gt[10][0][1].center == (95.0, 60.0)


def test_path_extrapolates_and_presence_window():
    o = ObjectSpec("rectangle", (2.0, 2.0), ((1, 0.0, 0.0), (3, 4.0, 2.0)), appear=2, disappear=4)
    assert o.center(5) == (8.0, 4.0)
    assert [o.present(t) for t in range(1, 6)] == [False, True, True, True, False]


def test_generation_is_deterministic(tmp_path):
    for name in synth.PRESETS:
        spec = preset(name, seed=3)
        synth.write_scenario(generate(spec), tmp_path / "a" / name)
        synth.write_scenario(generate(spec), tmp_path / "b" / name)
        for f in ("det.txt", "gt.txt", "masks.txt", "warps.txt", "scenario.json"):
            assert (tmp_path / "a" / name / f).read_bytes() == (tmp_path / "b" / name / f).read_bytes()


def test_seed_changes_noise():
    a = generate(preset("occlusion_cluster", 1))
    b = generate(preset("occlusion_cluster", 2))
    assert a.gt != b.gt


def test_later_objects_occlude_earlier():
    scn = generate(preset("occlusion_cluster", 0))
    for f in range(1, scn.n_frames + 1):
        masks = [scn.visible_masks[i][f].to_array() for i in scn.visible_masks if f in scn.visible_masks[i]]
        total = np.sum(masks, axis=0) if masks else np.zeros(1)
        assert total.max() <= 1  # visible regions never overlap


def test_visible_masks_lie_inside_gt_boxes():
    for name in synth.PRESETS:
        scn = generate(preset(name, 0))
        for f, items in scn.gt.items():
            for i, box in items:
                m = scn.visible_masks[i].get(f)
                if m is not None:
                    assert mask_bbox_ratios(m, box).mc == 1.0


def test_crossing_hides_a_for_five_frames():
    scn = generate(preset("crossing", 7))
    assert len(scn.spec.objects) == 2 and scn.spec.detector.drop_prob_occluded == 1.0
    hidden = [f for f in range(1, scn.n_frames + 1) if f not in scn.visible_masks[1]]
    assert hidden == [11, 12, 13, 14, 15]
    for f in hidden:
        # only B's detection survives
        assert len(scn.detections[f]) == 1
    assert all(f in scn.visible_masks[2] for f in range(1, scn.n_frames + 1))


def test_pan_warps_are_per_frame_translations():
    obj = ObjectSpec("rectangle", (10.0, 10.0), ((1, 100.0, 50.0),))
    spec = ScenarioSpec(300, 100, 8, (obj,), camera=CameraSpec("pan", (3.0, 0.0)))
    scn = generate(spec)
    for f in range(2, 9):
        assert scn.warps[f].coefficients() == (1.0, 0.0, -3.0, 0.0, 1.0, 0.0)
        assert scn.camera_offsets[f] == (3.0 * (f - 1), 0.0)


@pytest.mark.parametrize("camera", [CameraSpec("pan", (3.0, -1.25)), CameraSpec("shake", amplitude=6.0), CameraSpec("pan", (2.0, 0.0), jumps=((4, 30.0, -7.0),))])
def test_warps_carry_static_world_boxes(camera):
    obj = ObjectSpec("rectangle", (12.0, 30.0), ((1, 150.0, 70.0),))
    scn = generate(ScenarioSpec(300, 150, 12, (obj,), camera=camera, seed=5))
    for f in range(2, 13):
        prev = scn.gt[f - 1][0][1]
        cur = scn.gt[f][0][1]
        moved = warp_bbox(prev, scn.warps[f])
        assert np.allclose(moved.as_tuple(), cur.as_tuple(), atol=1e-6)


def test_pedestrian_plain_is_clean():
    spec = preset("pedestrian_plain")
    assert len(spec.objects) == 4 and spec.detector == DetectorNoise() and spec.mask_noise.is_zero
    assert all(o.motion == "linear" for o in spec.objects)


def test_blur_pan_has_pan_and_blur():
    spec = preset("blur_pan")
    assert spec.camera.kind == "pan" and spec.detector.blur_frames
    assert set(spec.mask_low_conf_frames) == set(spec.detector.blur_frames)


def test_unknown_preset_rejected():
    with pytest.raises(ValueError, match="unknown preset"):
        preset("nope")


@pytest.mark.parametrize(
    "change",
    [
        dict(n_frames=1),
        dict(width=0),
        dict(detector=DetectorNoise(drop_prob=1.5)),
        dict(mask_conf=-0.1),
        dict(objects=(ObjectSpec("star", (1.0, 1.0), ((1, 0.0, 0.0),)),)),
    ],
)
def test_spec_validation(change):
    with pytest.raises(ValueError):
        replace(one_object(), **change)


def test_mask_noise_validation():
    with pytest.raises(ValueError):
        MaskNoise(dropout_prob=2.0)


def test_spec_json_round_trip():
    for name in synth.PRESETS:
        spec = preset(name, 11)
        text = spec.to_json()
        assert ScenarioSpec.from_json(text) == spec
        json.loads(text)


def test_mask_streams_match_files(tmp_path):
    from maskcue import io

    scn = generate(preset("crossing", 7))
    synth.write_scenario(scn, tmp_path)
    streams = io.read_masks(tmp_path / "masks.txt")
    assert [s.stream_id for s in streams] == [1, 2]
    assert streams[0].birth_frame == 1 and streams[0].frames == scn.observed_masks[1]
    gt = io.read_mot(tmp_path / "gt.txt")
    assert len(gt) == sum(len(v) for v in scn.gt.values())
    assert {r.id for r in io.read_mot(tmp_path / "det.txt")} == {-1}
    assert io.read_warps(tmp_path / "warps.txt") == scn.warps


def test_run_scenario_mask_sources():
    scn = generate(preset("pedestrian_plain"))
    for masks in ("file", "oracle", "none"):
        _, report = synth.run_scenario(scn, "mcbyte", masks=masks)
        assert report.mota == 1.0
    with pytest.raises(ValueError):
        synth.run_scenario(scn, "mcbyte", masks="bogus")
