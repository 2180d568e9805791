import math

import numpy as np
import pytest

from rvos.errors import SceneSpecError, ShapeOutOfCanvas
from rvos.synthetic import MotionSpec, SceneSpec, ShapeSpec, gen_synthetic, scene_from_dict
from rvos.video import encode_frame_png


def linear_square(name="red square", start=(16.0, 16.0), velocity=(2.0, 1.0), size=8):
    return ShapeSpec(
        name=name,
        kind="square",
        size=size,
        color=(200, 40, 40),
        motion=MotionSpec(kind="linear", start=start, velocity=velocity),
    )


def scene(shapes, frames=6, h=48, w=64, **kw):
    return SceneSpec(clip_id="c", frame_count=frames, height=h, width=w,
                     shapes=tuple(shapes), **kw)


class TestRendering:
    def test_deterministic_bytes(self):
        s = scene([linear_square()], frames=4)
        a, _ = gen_synthetic(s, seed=7)
        b, _ = gen_synthetic(s, seed=7)
        for fa, fb in zip(a.frames, b.frames):
            assert encode_frame_png(fa) == encode_frame_png(fb)

    def test_gt_matches_rendered_pixels(self):
        s = scene([linear_square()])
        clip, gt = gen_synthetic(s, seed=0)
        color = np.array((200, 40, 40), dtype=np.uint8)
        for frame, mask in zip(clip.frames, gt["red_square"]):
            painted = (frame == color).all(axis=2)
            assert (painted == mask).all()

    def test_square_moves_by_velocity(self):
        s = scene([linear_square(start=(16.0, 16.0), velocity=(3.0, 0.0))])
        _, gt = gen_synthetic(s, seed=0)
        cols0 = np.nonzero(gt["red_square"][0].any(axis=0))[0]
        cols1 = np.nonzero(gt["red_square"][1].any(axis=0))[0]
        assert (cols1 == cols0 + 3).all()

    def test_circular_centroid_tracks_path(self):
        motion = MotionSpec(kind="circular", center=(32.0, 24.0), radius=10.0, omega_deg=45.0)
        disc = ShapeSpec("green disc", "disc", 5, (40, 200, 40), motion)
        s = scene([disc], frames=8)
        _, gt = gen_synthetic(s, seed=0)
        for t, mask in enumerate(gt["green_disc"]):
            ys, xs = np.nonzero(mask)
            ex, ey = motion.position(t)
            assert abs(xs.mean() - ex) <= 1.0
            assert abs(ys.mean() - ey) <= 1.0

    def test_disc_is_round(self):
        motion = MotionSpec(kind="linear", start=(20.0, 20.0))
        disc = ShapeSpec("dot", "disc", 6, (9, 9, 9), motion)
        _, gt = gen_synthetic(scene([disc], frames=1), seed=0)
        mask = gt["dot"][0]
        ys, xs = np.nonzero(mask)
        d = np.sqrt((xs - 20.0) ** 2 + (ys - 20.0) ** 2)
        assert d.max() <= 6.0

    def test_speckle_gives_unique_frames(self):
        s = scene([], frames=6, speckle=0.05)
        clip, _ = gen_synthetic(s, seed=3)
        keys = {encode_frame_png(f) for f in clip.frames}
        assert len(keys) == 6

    def test_no_speckle_static_frames_identical(self):
        s = scene([], frames=3)
        clip, _ = gen_synthetic(s, seed=3)
        assert encode_frame_png(clip.frames[0]) == encode_frame_png(clip.frames[2])


class TestValidation:
    def test_shape_walks_off_canvas(self):
        s = scene([linear_square(start=(58.0, 16.0), velocity=(4.0, 0.0))], frames=6)
        with pytest.raises(ShapeOutOfCanvas):
            gen_synthetic(s, seed=0)

    def test_disc_touching_edge_rejected(self):
        motion = MotionSpec(kind="linear", start=(3.0, 24.0))
        disc = ShapeSpec("d", "disc", 6, (9, 9, 9), motion)
        with pytest.raises(ShapeOutOfCanvas):
            gen_synthetic(scene([disc], frames=1), seed=0)

    def test_duplicate_shape_names(self):
        s = scene([linear_square(), linear_square(start=(30.0, 30.0))])
        with pytest.raises(SceneSpecError):
            gen_synthetic(s, seed=0)

    def test_zero_frames(self):
        with pytest.raises(SceneSpecError):
            gen_synthetic(scene([], frames=0), seed=0)

    def test_unknown_shape_kind(self):
        bad = ShapeSpec("x", "triangle", 5, (1, 2, 3),
                        MotionSpec(kind="linear", start=(20.0, 20.0)))
        with pytest.raises(SceneSpecError):
            gen_synthetic(scene([bad], frames=1), seed=0)


class TestSceneFromDict:
    def test_minimal(self):
        doc = {"clip_id": "k", "frames": 3, "height": 10, "width": 12}
        s = scene_from_dict(doc)
        assert s.clip_id == "k"
        assert s.frame_count == 3
        assert s.shapes == ()

    def test_full_shape(self):
        doc = {
            "clip_id": "k", "frames": 2, "height": 40, "width": 40,
            "shapes": [{
                "name": "blue disc", "kind": "disc", "size": 4,
                "color": [20, 20, 200],
                "motion": {"kind": "circular", "center": [20, 20],
                           "radius": 6, "omega_deg": 30},
            }],
        }
        s = scene_from_dict(doc)
        assert s.shapes[0].slug == "blue_disc"
        assert s.shapes[0].motion.radius == 6.0

    def test_missing_key(self):
        with pytest.raises(SceneSpecError):
            scene_from_dict({"clip_id": "k", "frames": 3, "height": 10})

    def test_unknown_motion_kind(self):
        doc = {
            "clip_id": "k", "frames": 2, "height": 40, "width": 40,
            "shapes": [{"name": "a", "kind": "disc", "size": 4,
                        "color": [1, 2, 3], "motion": {"kind": "spiral"}}],
        }
        with pytest.raises(SceneSpecError):
            scene_from_dict(doc)

    def test_non_numeric_frames(self):
        doc = {"clip_id": "k", "frames": "many", "height": 10, "width": 10}
        with pytest.raises(SceneSpecError):
            scene_from_dict(doc)
