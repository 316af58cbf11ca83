import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hstrack.hypercube import load_sequence, read_boxes
from hstrack.synth import (
    SceneObject,
    SceneSpec,
    linear_path,
    load_scene,
    make_metamer_pair,
    metamer_crossing_scene,
    render,
    scene_from_dict,
    scene_to_dict,
    write_scene,
)


def _spec(objects=(), frames=5, noise=0.0, seed=0):
    return SceneSpec(width=40, height=30, bands=3, frames=frames, background=(0.2, 0.3, 0.4),
                     objects=objects, noise_sigma=noise, seed=seed)


def test_empty_scene_is_background():
    frames, boxes = render(_spec())
    assert boxes == []
    assert np.array_equal(frames, np.broadcast_to([0.2, 0.3, 0.4], frames.shape))


def test_static_object_renders_identically():
    obj = SceneObject((0.9, 0.8, 0.7), (8, 8), ((20.0, 15.0),) * 5)
    frames, boxes = render(_spec((obj,)))
    assert all(np.array_equal(frames[0], f) for f in frames)
    assert all(b == boxes[0] for b in boxes)


@pytest.mark.parametrize("shape", ["disk", "rect"])
def test_ground_truth_is_tight_around_paint(shape):
    path = linear_path((10.0, 12.0), (3.0, 1.5), 5)
    obj = SceneObject((0.9, 0.9, 0.9), (10, 8), path, shape=shape)
    frames, boxes = render(_spec((obj,)))
    for frame, box in zip(frames, boxes):
        rows, cols = np.nonzero(frame[:, :, 0] == 0.9)
        assert (cols.min(), rows.min()) == (box.x, box.y)
        assert (cols.max() + 1, rows.max() + 1) == (box.x + box.w, box.y + box.h)


def test_noise_is_seeded():
    obj = SceneObject((0.9, 0.8, 0.7), (6, 6), ((20.0, 15.0),) * 3)
    a, _ = render(_spec((obj,), frames=3, noise=0.05, seed=1))
    b, _ = render(_spec((obj,), frames=3, noise=0.05, seed=1))
    c, _ = render(_spec((obj,), frames=3, noise=0.05, seed=2))
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert a.min() >= 0 and a.max() <= 1


def test_path_out_of_bounds():
    with pytest.raises(ValueError, match="out of bounds"):
        _spec((SceneObject((0.5,) * 3, (4, 4), linear_path((35.0, 10.0), (3.0, 0.0), 5)),))


def test_bouncing_path_stays_in_bounds():
    path = linear_path((5.0, 5.0), (7.0, -3.0), 50, bounds=((2, 30), (1, 20)))
    assert all(2 <= x <= 30 and 1 <= y <= 20 for x, y in path)


@settings(max_examples=60, deadline=None)
@given(bands=st.integers(2, 16), mean=st.floats(0.15, 0.85), seed=st.integers(0, 1000))
def test_metamer_pair_properties(bands, mean, seed):
    a, b = make_metamer_pair(bands, mean, seed=seed)
    assert abs(a.mean() - b.mean()) < 1e-12
    assert np.abs(a - b).max() >= 0.3 - 1e-9
    assert np.all((a >= 0) & (a <= 1) & (b >= 0) & (b <= 1))
    if bands > 2:
        assert a[bands // 2] == b[bands // 2]


def test_two_band_metamer():
    a, b = make_metamer_pair(2, 0.5)
    np.testing.assert_allclose(a, [0.2, 0.8])
    np.testing.assert_allclose(b, [0.8, 0.2])


def test_infeasible_metamer():
    with pytest.raises(ValueError):
        make_metamer_pair(8, 0.05)
    with pytest.raises(ValueError):
        make_metamer_pair(1, 0.5)


def test_metamer_objects_differ_per_band_only():
    spec = metamer_crossing_scene(seed=0, noise_sigma=0.0)
    frames, _ = render(spec)
    target, distractor = spec.objects
    ta = frames[0][tuple(int(v) for v in target.path[0][::-1])]
    da = frames[0][tuple(int(v) for v in distractor.path[0][::-1])]
    assert abs(ta.mean() - da.mean()) < 1e-12
    assert np.abs(ta - da).max() >= 0.3 - 1e-9


def test_write_scene_round_trip(tmp_path):
    obj = SceneObject((0.9, 0.8, 0.7), (6, 6), linear_path((10.0, 10.0), (2.0, 1.0), 4))
    spec = _spec((obj,), frames=4, noise=0.02)
    header, gt = write_scene(spec, tmp_path, name="s")
    frames, boxes = render(spec)
    loaded = np.stack([c.data for c in load_sequence(header)])
    np.testing.assert_array_equal(loaded, frames.astype(np.float32).astype(np.float64))
    assert read_boxes(gt) == boxes


def test_write_scene_is_deterministic(tmp_path):
    spec = metamer_crossing_scene(seed=3, frames=5)
    write_scene(spec, tmp_path / "a")
    write_scene(spec, tmp_path / "b")
    for name in ("scene.hdr", "scene.bin", "scene_gt.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_scene_json(tmp_path):
    cfg = {
        "width": 32, "height": 24, "bands": 4, "frames": 6, "background": 0.1,
        "noise_sigma": 0.01, "seed": 2,
        "objects": [{"spectrum": [0.9, 0.7, 0.5, 0.3], "size": 8,
                     "path": {"start": [8, 12], "velocity": [5, 0], "bounce": True}}],
    }
    (tmp_path / "scene.json").write_text(json.dumps(cfg))
    spec = load_scene(tmp_path / "scene.json")
    assert spec.background == (0.1,) * 4
    assert spec.objects[0].size == (8, 8)
    assert all(4 <= x <= 28 for x, _ in spec.objects[0].path)
    assert scene_from_dict(json.loads(json.dumps(scene_to_dict(spec)))) == spec
