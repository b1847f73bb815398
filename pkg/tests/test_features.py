"""Feature extractor versus an independently coded brute-force reference.

The oracle below recomputes every geometric feature with plain loops and
textbook formulas (acos instead of wrapped bearings, explicit frame
counting), sharing nothing with the library implementation beyond the play
arrays themselves.
"""

import math

import numpy as np
import pytest

from courtraster.features import (
    N_FEATURES,
    Scene,
    defenders_in_cone,
    extract_features,
    feature_names,
    possession_times,
    window_speeds,
)
from courtraster.plays import Play

HOOP = (88.75, 25.0)


def play_from(positions, shooter_role=1, outcome="made", game_secs=100.0, quarter_secs=40.0):
    return Play(
        positions=np.asarray(positions, dtype=np.float32),
        shooter_role=shooter_role,
        outcome=outcome,
        game_secs_remaining=game_secs,
        quarter_secs_remaining=quarter_secs,
    )


def random_play(rng):
    pos = np.empty((125, 11, 3), dtype=np.float64)
    for s in range(11):
        start = rng.uniform([2, 2], [92, 48])
        end = rng.uniform([2, 2], [92, 48])
        t = np.linspace(0, 1, 125)[:, None]
        wobble = rng.normal(0, 0.4, (125, 2)).cumsum(axis=0) * 0.1
        xy = start + (end - start) * t + wobble
        pos[:, s, :2] = np.clip(xy, 0.2, [93.8, 49.8])
        pos[:, s, 2] = 0.0
    pos[:, 10, 2] = rng.uniform(0, 9, 125)
    return play_from(pos, shooter_role=int(rng.integers(1, 6)),
                     game_secs=float(rng.uniform(0, 2880)), quarter_secs=float(rng.uniform(0, 720)))


# -- brute-force reference ----------------------------------------------------

def oracle_features(play):
    pos = play.positions.astype(np.float64)
    out = np.zeros(N_FEATURES)
    shooter = play.shooter_role - 1
    last = pos[-1]

    k = 0
    for s in range(10):
        out[k] = last[s, 0]; out[k + 1] = last[s, 1]; k += 2
    out[20], out[21], out[22] = last[10, 0], last[10, 1], last[10, 2]
    out[23] = play.game_secs_remaining
    out[24] = play.quarter_secs_remaining

    # speeds: displacement into frame t belongs to window t // 25
    for s in range(11):
        dims = 2 if s < 10 else 3
        sums = [0.0] * 5
        counts = [0] * 5
        for t in range(1, 125):
            d = 0.0
            for ax in range(dims):
                d += (pos[t, s, ax] - pos[t - 1, s, ax]) ** 2
            v = min(math.sqrt(d) * 25.0, 50.0)
            w = t // 25
            sums[w] += v
            counts[w] += 1
        for w in range(5):
            val = sums[w] / counts[w]
            if s < 10:
                out[25 + 5 * s + w] = val
            else:
                out[75 + w] = val

    k = 80
    for i in range(10):
        for j in range(i + 1, 10):
            out[k] = math.dist(last[i, :2], last[j, :2])
            k += 1

    def angle_at_hoop(a, b):
        ua = (a[0] - HOOP[0], a[1] - HOOP[1])
        ub = (b[0] - HOOP[0], b[1] - HOOP[1])
        na = math.hypot(*ua); nb = math.hypot(*ub)
        if na < 1e-9 or nb < 1e-9:
            return 0.0
        cosv = (ua[0] * ub[0] + ua[1] * ub[1]) / (na * nb)
        return math.acos(max(-1.0, min(1.0, cosv)))

    k = 125
    for i in range(10):
        for j in range(i + 1, 10):
            out[k] = angle_at_hoop(last[i], last[j])
            k += 1

    for s in range(10):
        d = math.dist(last[s, :2], HOOP)
        out[170 + s] = d
        if d < 1e-9:
            out[180 + s] = 0.0
        else:
            cosv = (HOOP[0] - last[s, 0]) / d  # against the inward axis (-1, 0)
            out[180 + s] = math.acos(max(-1.0, min(1.0, cosv)))

    sx, sy = last[shooter, :2]
    axis = (HOOP[0] - sx, HOOP[1] - sy)
    axis_n = math.hypot(*axis)
    cone = 0
    near6 = 0
    for d in range(5, 10):
        dx, dy = last[d, 0] - sx, last[d, 1] - sy
        dist = math.hypot(dx, dy)
        if dist <= 6.0:
            near6 += 1
            if axis_n < 1e-9:
                cone += 1
            elif dist == 0.0:
                cone += 1
            else:
                ang = math.acos(max(-1.0, min(1.0, (dx * axis[0] + dy * axis[1]) / (dist * axis_n))))
                if ang <= math.radians(15.0) + 1e-12:
                    cone += 1
    out[190] = cone
    out[191] = near6

    owned = [0] * 5
    for t in range(125):
        best = None
        for s in range(10):
            d2 = (pos[t, s, 0] - pos[t, 10, 0]) ** 2 + (pos[t, s, 1] - pos[t, 10, 1]) ** 2
            if best is None or d2 < best[0]:
                best = (d2, s)
        if best[1] < 5:
            owned[best[1]] += 1
    for r in range(5):
        out[192 + r] = owned[r] / 25.0

    near_any = 0
    for s in range(10):
        if s == shooter:
            continue
        if math.dist(last[s, :2], (sx, sy)) <= 6.0:
            near_any += 1
    out[197] = near_any
    return out


# -- targeted examples ---------------------------------------------------------

def test_layout_has_198_documented_names():
    names = feature_names()
    assert len(names) == N_FEATURES == 198
    assert len(set(names)) == 198
    assert names[190] == "defenders_in_cone"
    assert names[197] == "players_near_shooter"


def test_isolated_shooter_counts_zero():
    pos = np.zeros((125, 11, 3))
    pos[:, 0, :2] = HOOP  # shooter on the hoop
    for s in range(1, 10):
        pos[:, s, :2] = (20.0 + 5 * s, 45.0)  # everyone else 20+ ft away
    pos[:, 10, :2] = HOOP
    fv = extract_features(play_from(pos, shooter_role=1))
    assert fv.values[190] == 0
    assert fv.values[191] == 0
    assert fv.values[197] == 0


def test_stationary_play_zero_speeds():
    pos = np.zeros((125, 11, 3))
    for s in range(11):
        pos[:, s, :2] = (10.0 + 3 * s, 25.0)
    fv = extract_features(play_from(pos))
    assert np.all(fv.values[25:80] == 0.0)


def test_three_player_scene_radius_count():
    pos = np.zeros((125, 11, 3))
    pos[:, 0, :2] = (80.0, 25.0)  # shooter
    pos[:, 5, :2] = (83.0, 25.0)  # defender 3 ft away
    pos[:, 6, :2] = (80.0, 30.0)  # defender 5 ft away
    for s in [1, 2, 3, 4, 7, 8, 9]:
        pos[:, s, :2] = (10.0, 5.0 + 4 * s)
    pos[:, 10, :2] = (80.0, 25.0)
    fv = extract_features(play_from(pos, shooter_role=1))
    assert fv.values[191] == 2


def test_cone_angle_zero_counts():
    # defender directly between shooter and hoop, 4 ft out
    players = np.zeros((10, 2))
    players[0] = (78.75, 25.0)
    players[5] = (82.75, 25.0)
    for s in [1, 2, 3, 4, 6, 7, 8, 9]:
        players[s] = (10.0, 4.0 * s + 2)
    scene = Scene(players_xy=players, ball_xyz=np.array([78.75, 25.0, 7.0]), shooter_slot=0)
    assert defenders_in_cone(scene) == 1


def test_cone_excludes_behind_and_wide():
    players = np.zeros((10, 2))
    players[0] = (78.75, 25.0)
    players[5] = (76.75, 25.0)  # 2 ft behind the shooter (angle 180)
    # 3 ft away at 20 degrees off-axis
    ang = math.radians(20.0)
    players[6] = (78.75 + 3 * math.cos(ang), 25.0 + 3 * math.sin(ang))
    for s in [1, 2, 3, 4, 7, 8, 9]:
        players[s] = (10.0, 4.0 * s + 2)
    scene = Scene(players_xy=players, ball_xyz=np.array([78.75, 25.0, 7.0]), shooter_slot=0)
    assert defenders_in_cone(scene) == 0
    # at 14 degrees the same defender counts
    ang = math.radians(14.0)
    players[6] = (78.75 + 3 * math.cos(ang), 25.0 + 3 * math.sin(ang))
    scene = Scene(players_xy=players, ball_xyz=np.array([78.75, 25.0, 7.0]), shooter_slot=0)
    assert defenders_in_cone(scene) == 1


def test_cone_shooter_on_hoop_falls_back_to_radius():
    players = np.zeros((10, 2))
    players[0] = HOOP
    players[5] = (HOOP[0] - 3.0, HOOP[1])
    players[6] = (HOOP[0], HOOP[1] - 5.0)
    for s in [1, 2, 3, 4, 7, 8, 9]:
        players[s] = (10.0, 4.0 * s + 2)
    scene = Scene(players_xy=players, ball_xyz=np.array([*HOOP, 7.0]), shooter_slot=0)
    assert defenders_in_cone(scene) == 2


def test_possession_time_split():
    pos = np.zeros((125, 11, 3))
    for s in range(10):
        pos[:, s, :2] = (10.0 + 8 * s, 10.0)
    pos[:75, 10, :2] = (10.0, 10.0)  # role 1 owns 75 frames
    pos[75:, 10, :2] = (18.0, 10.0)  # role 2 owns 50 frames
    times = possession_times(play_from(pos))
    assert times == pytest.approx([3.0, 2.0, 0.0, 0.0, 0.0])


def test_possession_defense_owned_frames_credit_nobody():
    pos = np.zeros((125, 11, 3))
    for s in range(10):
        pos[:, s, :2] = (10.0 + 8 * s, 10.0)
    pos[:50, 10, :2] = (10.0, 10.0)   # offense role 1
    pos[50:, 10, :2] = (50.0, 10.0)   # defender slot 5's spot
    times = possession_times(play_from(pos))
    assert times.sum() == pytest.approx(2.0)


def test_constant_speed_five_everywhere():
    pos = np.zeros((125, 11, 3))
    steps = np.arange(125) * 0.2
    pos[:, 0, 0] = 10.0 + steps
    pos[:, 0, 1] = 25.0
    for s in range(1, 11):
        pos[:, s, :2] = (60.0, 40.0)
    speeds = window_speeds(play_from(pos))
    assert speeds[0] == pytest.approx([5.0] * 5)
    assert np.all(speeds[1:] == 0.0)


def test_teleport_clamped_to_50():
    pos = np.zeros((125, 11, 3))
    for s in range(11):
        pos[:, s, :2] = (10.0, 10.0)
    pos[60:, 0, 0] = 60.0  # 50 ft jump between frames 59 and 60
    speeds = window_speeds(play_from(pos))
    w = 60 // 25
    assert speeds[0, w] == pytest.approx(50.0 / 25.0)  # one clamped sample in the mean
    fv = extract_features(play_from(pos))
    assert np.isfinite(fv.values).all()


def test_angles_within_range_and_counts_integral(small_plays):
    plays, _ = small_plays
    for p in plays[:10]:
        v = extract_features(p).values
        assert np.all(v[125:170] >= 0.0) and np.all(v[125:170] <= np.pi + 1e-12)
        assert np.all(v[180:190] >= 0.0) and np.all(v[180:190] <= np.pi + 1e-12)
        assert np.all(v[80:125] >= 0.0)
        for idx in (190, 191, 197):
            assert v[idx] == int(v[idx])


def test_reflection_consistency(small_plays):
    # extracting after orientation equals reflecting an unoriented play first
    from courtraster.raster import orient_play

    plays, _ = small_plays
    for p in plays[:5]:
        flipped = Play(
            positions=np.concatenate(
                [
                    94.0 - p.positions[:, :, :1],
                    50.0 - p.positions[:, :, 1:2],
                    p.positions[:, :, 2:],
                ],
                axis=2,
            ),
            shooter_role=p.shooter_role,
            outcome=p.outcome,
            game_secs_remaining=p.game_secs_remaining,
            quarter_secs_remaining=p.quarter_secs_remaining,
        )
        back = orient_play(flipped)
        a = extract_features(p).values
        b = extract_features(back).values
        assert a == pytest.approx(b, abs=1e-4)


def test_oracle_equivalence_random_plays():
    rng = np.random.default_rng(20240817)
    count_idx = [190, 191, 197]
    for _ in range(120):
        play = random_play(rng)
        mine = extract_features(play).values
        ref = oracle_features(play)
        for i in count_idx:
            assert mine[i] == ref[i], f"count feature {i}"
        others = np.delete(np.arange(N_FEATURES), count_idx)
        np.testing.assert_allclose(mine[others], ref[others], atol=1e-9, rtol=0)


def test_oracle_equivalence_synthetic_plays(small_plays):
    plays, _ = small_plays
    for play in plays[:40]:
        mine = extract_features(play).values
        ref = oracle_features(play)
        np.testing.assert_allclose(mine, ref, atol=1e-9, rtol=0)
        for i in (190, 191, 197):
            assert mine[i] == ref[i]
