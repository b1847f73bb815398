import numpy as np
import pytest

from courtraster import analysis
from courtraster.analysis import (
    CourtGrid,
    SsimSpec,
    compare_filters_to_history,
    half_court_crop,
    heatmap_model,
    heatmap_raw,
    historical_occupancy,
    made_mass,
    maximize_activation,
    pair_made_probability,
    predicted_role,
    probability_histogram,
    ssim,
    ssim_table_csv,
)
from courtraster.nn.network import build_cnn, init_params
from courtraster.plays import Play
from courtraster.raster import TrajectoryImage


def make_play(shot_xy, made=True, role=1):
    pos = np.zeros((125, 11, 3), dtype=np.float32)
    pos[:, role - 1, :2] = shot_xy
    pos[:, 10, :2] = shot_xy
    pos[:, 10, 2] = 8.0
    for s in range(10):
        if s != role - 1:
            pos[:, s, :2] = (30.0 + 2 * s, 10.0)
    return Play(positions=pos, shooter_role=role, outcome="made" if made else "missed")


# -- probability readers -------------------------------------------------------

def test_probability_readers():
    probs = np.zeros((2, 10))
    probs[0, 4] = 0.6  # role 3 made
    probs[0, 5] = 0.2  # role 3 missed
    probs[0, 0] = 0.2
    probs[1, 8] = 0.1  # role 5 made
    probs[1, 9] = 0.5  # role 5 missed
    probs[1, 1] = 0.4
    assert made_mass(probs) == pytest.approx([0.8, 0.1])
    assert predicted_role(probs).tolist() == [3, 5]
    assert pair_made_probability(probs) == pytest.approx([0.75, 1 / 6])


# -- heat maps ------------------------------------------------------------------

def test_heatmap_raw_all_made_single_cell():
    plays = [make_play((88.3, 25.2), made=True) for _ in range(10)]
    grid = heatmap_raw(plays)
    vals = grid.values()
    assert grid.attempts[88, 25] == 10
    assert vals[88, 25] == 1.0
    assert grid.populated().sum() == 1
    assert np.isnan(vals[50, 25])


def test_heatmap_raw_ratio():
    plays = [make_play((70.5, 30.5), made=True) for _ in range(3)]
    plays += [make_play((70.5, 30.5), made=False)]
    grid = heatmap_raw(plays)
    assert grid.values()[70, 30] == 0.75


def test_heatmap_raw_role_filter():
    plays = [make_play((70.5, 30.5), made=True, role=2), make_play((60.5, 20.5), made=False, role=3)]
    grid = heatmap_raw(plays, role=2)
    assert grid.attempts[70, 30] == 1 and grid.attempts[60, 20] == 0


def test_heatmap_raw_matches_planted_probability(small_plays):
    _, scenes = small_plays
    # pure truth-file check of the estimator arithmetic at tiny scale
    grid = CourtGrid.empty()
    for s in scenes:
        r, c = int(s.shot_xy[0]), int(s.shot_xy[1])
        grid.numerator[r, c] += s.made
        grid.attempts[r, c] += 1
    vals = grid.values()
    assert np.nanmax(vals) <= 1.0 and np.nanmin(vals) >= 0.0


def test_heatmap_model_uniform_is_half():
    plays = [make_play((80.5, 25.5)), make_play((60.5, 20.5), role=4)]
    probs = np.full((2, 10), 0.1)
    grid = heatmap_model(None, None, plays, probs=probs)
    vals = grid.values()
    assert vals[80, 25] == pytest.approx(0.5)
    assert vals[60, 20] == pytest.approx(0.5)


def test_heatmap_model_empty():
    grid = heatmap_model(None, None, [], probs=np.zeros((0, 10)))
    assert grid.populated().sum() == 0


def test_grid_csv_shape():
    plays = [make_play((80.5, 25.5))]
    text = heatmap_raw(plays).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "row,col,attempts,value"
    assert lines[1] == "80,25,1,1.000000"


# -- histograms -----------------------------------------------------------------

def test_histogram_uniform_mass_at_half():
    plays = [make_play((80.5, 25.5)) for _ in range(7)]
    probs = np.full((7, 10), 0.1)
    counts, edges = probability_histogram(None, None, plays, role="all", probs=probs)
    assert counts.sum() == 7
    assert edges[10] == pytest.approx(0.5)
    assert counts[10] == 7  # exactly 0.5 falls in the [0.5, 0.55) bin


def test_histogram_role_partition():
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(10), size=40)
    plays = [make_play((80.5, 25.5)) for _ in range(40)]
    total = 0
    for role in (1, 2, 3, 4, 5):
        counts, _ = probability_histogram(None, None, plays, role=role, probs=probs)
        total += counts.sum()
    assert total == 40
    all_counts, _ = probability_histogram(None, None, plays, role="all", probs=probs)
    assert all_counts.sum() == 40


# -- SSIM -------------------------------------------------------------------------

def test_ssim_identity():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (94, 50))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-9)


def test_ssim_symmetry():
    rng = np.random.default_rng(2)
    a = rng.uniform(0, 1, (60, 40))
    b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_noise_monotone_decrease():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.2, 0.8, (94, 50))
    scores = []
    for sigma in (0.05, 0.1, 0.2):
        noisy = np.clip(x + np.random.default_rng(99).normal(0, sigma, x.shape), 0, 1)
        scores.append(ssim(x, noisy))
    assert scores[0] > scores[1] > scores[2]
    assert all(-1.0 <= s <= 1.0 for s in scores)


def test_ssim_against_skimage():
    from skimage.metrics import structural_similarity

    rng = np.random.default_rng(4)
    for _ in range(5):
        a = rng.uniform(0, 1, (94, 50))
        b = np.clip(a + rng.normal(0, rng.uniform(0.02, 0.3), a.shape), 0, 1)
        ref = structural_similarity(
            a, b, win_size=11, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=1.0,
        )
        assert ssim(a, b) == pytest.approx(ref, abs=1e-7)


def test_ssim_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ssim(np.zeros((20, 20)), np.zeros((20, 21)))
    with pytest.raises(ValueError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))  # smaller than the window


def test_ssim_spec_validation():
    with pytest.raises(ValueError):
        SsimSpec(k1=0.0)


# -- half-court crop ---------------------------------------------------------------

def test_half_court_crop_dims_and_idempotence():
    img = TrajectoryImage(data=np.random.default_rng(5).uniform(0, 1, (1, 94, 50)).astype(np.float32))
    cropped = half_court_crop(img)
    assert cropped.data.shape == (1, 47, 50)
    again = half_court_crop(cropped)
    assert again is cropped
    # hoop pixel (88, 25) maps to row 41 of the crop
    assert np.array_equal(cropped.data[:, 41, 25], img.data[:, 88, 25])


def test_half_court_crop_array():
    arr = np.arange(94 * 50, dtype=float).reshape(94, 50)
    out = half_court_crop(arr)
    assert out.shape == (47, 50)
    assert out[0, 0] == arr[47, 0]


# -- activation maximization --------------------------------------------------------

def test_maxact_zero_weights_degenerate():
    spec = build_cnn(image_shape=(3, 16, 12), filters=4, blocks=1, head_width=5)
    params = init_params(spec, seed=0)
    params["img.0.w"][:] = 0.0
    res = maximize_activation(params, spec, layer=1, filter_index=0, steps=20, seed=1)
    assert res.degenerate
    assert res.image.data.min() >= 0.0 and res.image.data.max() <= 1.0


def test_maxact_ascends_on_random_model():
    spec = build_cnn(image_shape=(3, 16, 12), filters=4, blocks=1, head_width=5)
    params = init_params(spec, seed=3)
    res = maximize_activation(params, spec, layer=1, filter_index=1, steps=60, step_size=0.05, seed=2)
    assert not res.degenerate
    assert len(res.trace) == 61
    assert res.trace[-1] > res.trace[0]
    assert res.image.data.min() >= 0.0 and res.image.data.max() <= 1.0
    # mostly monotone ascent
    diffs = np.diff(res.trace)
    assert (diffs >= -1e-9).mean() >= 0.9


def test_maxact_needs_image_trunk():
    from courtraster.nn.network import build_ffn

    spec = build_ffn(feature_dim=8)
    with pytest.raises(ValueError):
        maximize_activation(init_params(spec, 0), spec, 1, 0)


# -- occupancy and the SSIM table ------------------------------------------------------

def test_historical_occupancy_normalized(small_plays):
    plays, _ = small_plays
    for group in ("offense", "ball", "defense"):
        grid = historical_occupancy(plays, group)
        assert grid.shape == (94, 50)
        assert grid.min() >= 0.0 and grid.max() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        historical_occupancy(plays, "referees")


def test_ssim_table_rows(small_plays):
    plays, _ = small_plays
    spec = build_cnn(image_shape=(11, 47, 25), filters=8, blocks=2, head_width=6)
    params = init_params(spec, seed=4)
    rows = compare_filters_to_history(params, spec, plays, steps=15, seed=5)
    assert len(rows) == 4
    assert [r["targets"] for r in rows] == ["offense", "ball", "offense+ball", "defense"]
    for r in rows:
        assert -1.0 <= r["ssim_half"] <= 1.0
        assert -1.0 <= r["ssim_full"] <= 1.0
    text = ssim_table_csv(rows)
    lines = text.strip().splitlines()
    assert lines[0] == "layer,filter,targets,ssim_half,ssim_full,degenerate"
    assert len(lines) == 5
