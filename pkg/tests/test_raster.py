import numpy as np
import pytest

from courtraster.plays import Play
from courtraster.raster import (
    FadeSpec,
    TrajectoryImage,
    export_image,
    orient_play,
    rasterize,
    to_rgb_preview,
    write_pgm,
    write_ppm,
)
from courtraster.tensorfile import load_tensor


def still_play(entity_positions, shooter_role=1, outcome="made"):
    """Play where every entity holds one position for all 125 frames."""
    pos = np.zeros((125, 11, 3), dtype=np.float32)
    for slot, xyz in entity_positions.items():
        pos[:, slot, : len(xyz)] = xyz
    return Play(positions=pos, shooter_role=shooter_role, outcome=outcome)


def test_orient_reflects_low_hoop_shot():
    p = still_play({0: (6.0, 25.0), 10: (6.0, 25.0, 8.0)})
    q = orient_play(p)
    assert q.positions[-1, 10, 0] == pytest.approx(88.0)
    assert q.positions[-1, 10, 1] == pytest.approx(25.0)
    assert q.positions[-1, 0, 0] == pytest.approx(88.0)


def test_orient_keeps_high_hoop_shot():
    p = still_play({0: (85.0, 20.0), 10: (85.0, 20.0, 8.0)})
    q = orient_play(p)
    assert np.array_equal(q.positions, p.positions)


def test_orient_idempotent():
    p = still_play({0: (6.0, 10.0), 3: (40.0, 30.0), 10: (6.0, 10.0, 8.0)})
    once = orient_play(p)
    twice = orient_play(once)
    assert np.array_equal(once.positions, twice.positions)


def test_orient_rotates_both_axes():
    p = still_play({2: (10.0, 5.0), 10: (5.0, 25.0, 8.0)})
    q = orient_play(p)
    assert q.positions[-1, 2, 0] == pytest.approx(84.0)
    assert q.positions[-1, 2, 1] == pytest.approx(45.0)


def test_fade_intensities_endpoints():
    vals = FadeSpec(floor=0.2).intensities()
    assert vals[0] == pytest.approx(0.2)
    assert vals[-1] == pytest.approx(1.0)
    assert np.all(np.diff(vals) > 0)


def test_fade_floor_validation():
    with pytest.raises(ValueError):
        FadeSpec(floor=1.0)
    with pytest.raises(ValueError):
        FadeSpec(floor=-0.1)


def test_stationary_entity_paints_single_max_pixel():
    p = still_play({0: (10.2, 30.7)}, shooter_role=1)
    img = rasterize(p, 1, FadeSpec(0.2))
    data = img.data[0].copy()
    assert data[10, 30] == pytest.approx(1.0)
    data[10, 30] = 0.0
    # all other entities sat at (0, 0): that corner pixel is painted too
    assert data[0, 0] == pytest.approx(1.0)
    data[0, 0] = 0.0
    assert np.all(data == 0.0)


def test_single_frame_paint_is_floor():
    pos = np.zeros((125, 11, 3), dtype=np.float32)
    pos[:, :, :2] = -1000.0  # everything far off-court, clamped to pixel (0, 0)
    pos[0, 5, :2] = (60.5, 20.5)  # one defender visits one pixel at t=0 only
    p = Play(positions=pos, shooter_role=1, outcome="made")
    img = rasterize(p, 1, FadeSpec(0.2))
    assert img.data[0, 60, 20] == pytest.approx(0.2, abs=1e-6)


def test_fade_monotone_along_path():
    pos = np.zeros((125, 11, 3), dtype=np.float32)
    pos[:, :, :2] = -1000.0
    rows = np.floor(np.linspace(0, 93.99, 125)).astype(np.float32)
    pos[:, 10, 0] = rows + 0.5
    pos[:, 10, 1] = 25.5
    p = Play(positions=pos, shooter_role=1, outcome="made")
    img = rasterize(p, 11, FadeSpec(0.2))
    path = img.data[5, :, 25]
    painted = path[path > 0]
    assert len(painted) == 94
    assert np.all(np.diff(painted) >= -1e-7)
    # row 0 keeps the brighter of its two visiting frames (t=0 and t=1)
    assert painted[0] == pytest.approx(0.2 + 0.8 / 124.0, abs=1e-6)
    assert painted[-1] == pytest.approx(1.0)


def test_channel_maps():
    p = still_play({0: (10.5, 10.5), 7: (20.5, 20.5), 10: (30.5, 30.5, 5.0)})
    img3 = rasterize(p, 3)
    assert img3.data[0, 10, 10] == 1.0  # offense in red
    assert img3.data[2, 20, 20] == 1.0  # defense in blue
    assert img3.data[1, 30, 30] == 1.0  # ball in green
    img11 = rasterize(p, 11)
    assert img11.data[0, 10, 10] == 1.0
    assert img11.data[7 + 1, 20, 20] == 1.0  # defense role 3 -> channel 8
    assert img11.data[5, 30, 30] == 1.0


def test_rgb_preview_matches_direct_3ch(small_plays):
    plays, _ = small_plays
    for p in plays[:10]:
        img11 = rasterize(p, 11)
        img3 = rasterize(p, 3)
        prev = to_rgb_preview(img11)
        assert np.array_equal(prev.data, img3.data)


def test_preview_rejects_non_11ch():
    p = still_play({0: (10.0, 10.0)})
    with pytest.raises(ValueError):
        to_rgb_preview(rasterize(p, 3))


def test_preview_channel_separation():
    pos = np.zeros((125, 11, 3), dtype=np.float32)
    pos[:, :, :2] = -1000.0  # players pile up on pixel (0, 0)
    pos[:, 10, :2] = (44.5, 25.5)
    p = Play(positions=pos, shooter_role=1, outcome="made")
    prev = to_rgb_preview(rasterize(p, 11))
    # ball pixel is pure green; the player pile shows red + blue, no green
    assert list(prev.data[:, 44, 25]) == [0.0, 1.0, 0.0]
    assert list(prev.data[:, 0, 0]) == [1.0, 0.0, 1.0]


def test_nonzero_pixel_budget_per_entity_channel(small_plays):
    plays, _ = small_plays
    img = rasterize(plays[0], 11)
    for c in range(11):
        assert np.count_nonzero(img.data[c]) <= 125


def test_intensity_bounds_and_finite(small_plays):
    plays, _ = small_plays
    for p in plays[:20]:
        img = rasterize(p, 11)
        assert np.isfinite(img.data).all()
        assert img.data.min() >= 0.0 and img.data.max() <= 1.0
        painted = img.data[img.data > 0]
        assert painted.min() >= 0.2 - 1e-6


def test_downscale_dims():
    p = still_play({0: (10.2, 30.7)})
    img = rasterize(p, 11, downscale=2)
    assert img.data.shape == (11, 47, 25)
    assert img.data[0, 5, 15] == 1.0  # floor(10.2/2), floor(30.7/2)
    with pytest.raises(ValueError):
        rasterize(p, 11, downscale=3)


def test_wrong_frame_count_rejected():
    pos = np.zeros((125, 11, 3), dtype=np.float32)
    p = Play(positions=pos, shooter_role=1, outcome="made")
    p.positions = np.zeros((100, 11, 3), dtype=np.float32)  # bypass the constructor
    with pytest.raises(ValueError):
        rasterize(p, 11)


def test_pgm_export_zero_image(tmp_path):
    img = TrajectoryImage(data=np.zeros((1, 94, 50), dtype=np.float32))
    blob = write_pgm(img)
    assert blob.startswith(b"P5\n50 94\n255\n")
    assert blob[len(b"P5\n50 94\n255\n"):] == b"\x00" * (94 * 50)


def test_ppm_export_ones_image():
    img = TrajectoryImage(data=np.ones((3, 94, 50), dtype=np.float32))
    blob = write_ppm(img)
    assert blob.startswith(b"P6\n50 94\n255\n")
    assert blob[len(b"P6\n50 94\n255\n"):] == b"\xff" * (94 * 50 * 3)


def test_pgm_rounding_half_up():
    data = np.zeros((1, 94, 50), dtype=np.float32)
    data[0, 0, 0] = 0.5  # 127.5 rounds up to 128
    blob = write_pgm(TrajectoryImage(data=data))
    assert blob[len(b"P5\n50 94\n255\n")] == 128


def test_export_11ch_round_trip(tmp_path, small_plays):
    plays, _ = small_plays
    img = rasterize(plays[0], 11)
    path = tmp_path / "img.tnsr"
    export_image(img, path)
    back = load_tensor(path)
    assert np.array_equal(back, img.data)
    preview = (tmp_path / "img.tnsr.preview.ppm").read_bytes()
    assert preview.startswith(b"P6\n50 94\n")


def test_image_invariant_checks():
    with pytest.raises(ValueError, match="channel count"):
        TrajectoryImage(data=np.zeros((2, 94, 50), dtype=np.float32))
    with pytest.raises(ValueError, match="intensities"):
        TrajectoryImage(data=np.full((1, 94, 50), 1.5, dtype=np.float32))
    bad = np.zeros((1, 94, 50), dtype=np.float32)
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        TrajectoryImage(data=bad)
