import numpy as np
import pytest

from hstrack.bench import center_error, precision_curve
from hstrack.hypercube import BoundingBox, HyperCube, band
from hstrack.synth import CROSSING_GRAY_BAND, linear_motion_scene, metamer_crossing_scene, render
from hstrack.tracker import TrackerConfig, cosine_window, init, run, search_window_size, step


def _textured_frame(seed=0, shape=(60, 80, 4)):
    rng = np.random.default_rng(seed)
    return rng.random(shape) * 0.5 + 0.25


def test_cosine_window_shape():
    win = cosine_window(9, 13)
    assert win.shape == (9, 13)
    assert win[0, 0] == win[-1, -1] == 0.0
    assert win[4, 6] == pytest.approx(1.0)
    assert np.all((win >= 0) & (win <= 1))
    np.testing.assert_allclose(win, np.outer(win[:, 6], win[4, :]), atol=1e-15)


def test_search_window_size():
    assert search_window_size(BoundingBox(0, 0, 32, 30), 2.5) == (75, 80)
    assert search_window_size(BoundingBox(0, 0, 10, 7), 1.0) == (7, 10)


def test_init_with_reference_geometry():
    frame = HyperCube(np.random.default_rng(0).random((120, 160, 14)))
    state = init(frame, BoundingBox(60, 40, 32, 30), TrackerConfig())
    assert state.bank.filters.shape == (10, 6, 6, 14)
    assert state.model.window_size == (75, 80)
    assert state.model.model_x.shape == (75, 80, 10)


def test_unit_padding_window_is_the_box():
    frame = HyperCube(_textured_frame())
    state = init(frame, BoundingBox(20, 10, 16, 12), TrackerConfig(padding=1.0, search_scale_min=0.2))
    assert state.model.window_size == (12, 16)


def test_init_is_deterministic():
    frame = HyperCube(_textured_frame())
    a = init(frame, BoundingBox(20, 10, 16, 12), TrackerConfig())
    b = init(frame, BoundingBox(20, 10, 16, 12), TrackerConfig())
    assert np.array_equal(a.bank.filters, b.bank.filters)
    assert np.array_equal(a.model.alpha_hat, b.model.alpha_hat)


def test_config_validation():
    frame = HyperCube(_textured_frame())
    with pytest.raises(ValueError, match="smaller"):
        init(frame, BoundingBox(0, 0, 5, 20), TrackerConfig())
    with pytest.raises(ValueError):
        TrackerConfig(padding=3.5)
    with pytest.raises(ValueError):
        TrackerConfig(padding=0.5)


def test_static_scene_does_not_move():
    frame = HyperCube(_textured_frame())
    state = init(frame, BoundingBox(30, 20, 14, 12), TrackerConfig())
    for _ in range(3):
        state, box = step(state, frame)
        assert box == BoundingBox(30, 20, 14, 12)
    assert state.response.shape == state.model.window_size


def test_follows_a_small_translation():
    data = _textured_frame()
    state = init(HyperCube(data), BoundingBox(30, 20, 14, 12), TrackerConfig())
    _, box = step(state, HyperCube(np.roll(data, 3, axis=1)))
    assert abs(box.x - 33) <= 1 and abs(box.y - 20) <= 1


def test_step_rejects_frame_size_change():
    state = init(HyperCube(_textured_frame()), BoundingBox(30, 20, 14, 12), TrackerConfig())
    with pytest.raises(ValueError):
        step(state, HyperCube(_textured_frame(shape=(60, 81, 4))))


def test_run_contract():
    frame = HyperCube(_textured_frame())
    start = BoundingBox(30, 20, 14, 12)
    assert run([frame], start, TrackerConfig()) == [start]
    boxes = run([frame] * 10, start, TrackerConfig())
    assert len(boxes) == 10 and all(b == start for b in boxes)
    with pytest.raises(ValueError):
        run([], start, TrackerConfig())


def test_run_reports_every_state():
    frame = HyperCube(_textured_frame())
    seen = []
    run([frame] * 4, BoundingBox(30, 20, 14, 12), TrackerConfig(), on_step=lambda s: seen.append(s.frame_index))
    assert seen == [0, 1, 2, 3]


def test_linear_motion_scene():
    frames, truth = render(linear_motion_scene(seed=1))
    boxes = run((HyperCube(f) for f in frames), truth[0], TrackerConfig())
    errors = [center_error(p, t) for p, t in zip(boxes, truth)]
    assert np.mean(errors) < 3
    assert all(b.w == truth[0].w and b.h == truth[0].h for b in boxes)
    assert all(0 <= b.center()[0] <= 64 and 0 <= b.center()[1] <= 64 for b in boxes)


def test_fft_features_track_like_direct():
    frames, truth = render(linear_motion_scene(seed=0, frames=30))
    direct = run((HyperCube(f) for f in frames), truth[0], TrackerConfig())
    fft = run((HyperCube(f) for f in frames), truth[0], TrackerConfig(conv_method="fft"))
    assert max(center_error(a, b) for a, b in zip(direct, fft)) <= 1.0


def test_tracking_is_deterministic():
    frames, truth = render(linear_motion_scene(seed=0, frames=20))
    a = run((HyperCube(f) for f in frames), truth[0], TrackerConfig(seed=4))
    b = run((HyperCube(f) for f in frames), truth[0], TrackerConfig(seed=4))
    assert a == b


def _crossing_precision(tracker_seed, single_band):
    frames, truth = render(metamer_crossing_scene(seed=0))
    if single_band:
        cubes = (HyperCube(band(HyperCube(f), CROSSING_GRAY_BAND)) for f in frames)
    else:
        cubes = (HyperCube(f) for f in frames)
    boxes = run(cubes, truth[0], TrackerConfig(seed=tracker_seed))
    return precision_curve(boxes, truth, (20,)).precision[0], boxes


def test_single_band_tracker_follows_the_distractor():
    _, boxes = _crossing_precision(0, single_band=True)
    distractor = metamer_crossing_scene(seed=0).objects[1]
    last = len(boxes) - 1
    assert center_error(boxes[last], distractor.box_at(last)) < 5


def test_spectral_advantage_across_filter_seeds():
    full = [_crossing_precision(s, False)[0] for s in range(8)]
    single = [_crossing_precision(s, True)[0] for s in range(8)]
    assert min(full) >= 0.9
    # A lucky filter bank can pick up the one-pixel vertical offset, but most do not.
    assert sum(p <= 0.5 for p in single) >= 5
