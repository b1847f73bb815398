"""Hand-crafted play statistics evaluated on the oriented 125-frame window.

The 198-entry layout, in order (slot labels: off1..off5 are the offensive
roles, def1..def5 the defenders, matching play slot order):

    [0..19]    player (x, y) at the shot frame, slots off1..def5
    [20..22]   ball (x, y, z) at the shot frame
    [23..24]   game seconds remaining, quarter seconds remaining
    [25..74]   per-player mean speed (ft/s) in each of 5 one-second windows,
               player-major: 25 + 5*slot + window
    [75..79]   ball mean speed per window (3-D displacement)
    [80..124]  45 pairwise player distances, slot pairs (i, j), i < j
    [125..169] 45 pairwise angles subtended at the hoop, same pair order
    [170..179] player distance to the hoop
    [180..189] player bearing from the hoop versus the inward baseline normal
    [190]      defenders inside the shooter's 30-degree cone and within 6 ft
    [191]      defenders within 6 ft of the shooter
    [192..196] ball possession time (s) per offensive role
    [197]      players of either team (shooter excluded) within 6 ft

Instantaneous speeds are clamped at 50 ft/s to bound tracking glitches.
Degenerate geometry (a player exactly at the hoop, or the shooter at the
hoop) falls back to an angle of 0 / radius-only counting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .court import FPS, HOOP_HIGH, PLAY_FRAMES
from .plays import BALL_SLOT, Play

N_FEATURES = 198
SPEED_CLAMP_FTS = 50.0
NEAR_RADIUS_FT = 6.0
CONE_HALF_ANGLE_DEG = 15.0

SLOT_LABELS = ("off1", "off2", "off3", "off4", "off5", "def1", "def2", "def3", "def4", "def5")

_PAIR_I, _PAIR_J = np.triu_indices(10, k=1)


@dataclass(frozen=True)
class Scene:
    """Shot-frame snapshot: player positions by slot, ball, and shooter."""

    players_xy: np.ndarray  # (10, 2)
    ball_xyz: np.ndarray  # (3,)
    shooter_slot: int

    @staticmethod
    def from_play(play: Play) -> "Scene":
        return Scene(
            players_xy=play.positions[-1, :10, :2].astype(np.float64),
            ball_xyz=play.positions[-1, BALL_SLOT].astype(np.float64),
            shooter_slot=play.shooter_slot,
        )


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # (198,) float64
    shooter_role: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("feature vector contains non-finite values")


def feature_names() -> list[str]:
    names = []
    for s in SLOT_LABELS:
        names += [f"pos_{s}_x", f"pos_{s}_y"]
    names += ["ball_x", "ball_y", "ball_z", "game_clock_s", "quarter_clock_s"]
    for s in SLOT_LABELS:
        names += [f"speed_{s}_w{w}" for w in range(5)]
    names += [f"speed_ball_w{w}" for w in range(5)]
    names += [f"dist_{SLOT_LABELS[i]}_{SLOT_LABELS[j]}" for i, j in zip(_PAIR_I, _PAIR_J)]
    names += [f"hoop_angle_{SLOT_LABELS[i]}_{SLOT_LABELS[j]}" for i, j in zip(_PAIR_I, _PAIR_J)]
    names += [f"hoop_dist_{s}" for s in SLOT_LABELS]
    names += [f"hoop_bearing_{s}" for s in SLOT_LABELS]
    names += ["defenders_in_cone", "defenders_within_6ft"]
    names += [f"poss_time_{s}" for s in SLOT_LABELS[:5]]
    names += ["players_near_shooter"]
    assert len(names) == N_FEATURES
    return names


def window_speeds(play: Play) -> np.ndarray:
    """Mean speed (ft/s) per one-second window: 10 players (2-D) then the
    ball (3-D), shape (11, 5). The displacement into frame t belongs to
    window t // 25."""
    pos = play.positions.astype(np.float64)
    d_players = np.linalg.norm(np.diff(pos[:, :10, :2], axis=0), axis=2) * FPS
    d_ball = np.linalg.norm(np.diff(pos[:, BALL_SLOT, :], axis=0), axis=1) * FPS
    inst = np.concatenate([d_players, d_ball[:, None]], axis=1)  # (124, 11)
    inst = np.minimum(inst, SPEED_CLAMP_FTS)
    windows = np.arange(1, PLAY_FRAMES) // FPS
    out = np.zeros((11, 5))
    for w in range(5):
        out[:, w] = inst[windows == w].mean(axis=0)
    return out


def possession_times(play: Play) -> np.ndarray:
    """Seconds each offensive role spends nearest the ball, tie going to the
    lowest slot. Frames owned by the defense credit nobody."""
    pos = play.positions.astype(np.float64)
    diff = pos[:, :10, :2] - pos[:, BALL_SLOT, None, :2]
    d2 = np.einsum("fsk,fsk->fs", diff, diff)
    owner = np.argmin(d2, axis=1)
    counts = np.bincount(owner, minlength=10)[:5]
    return counts / FPS


def defenders_in_cone(scene: Scene, half_angle_deg: float = CONE_HALF_ANGLE_DEG) -> int:
    """Defenders at most 6 ft from the shooter and within the cone toward
    the hoop. If the shooter stands on the hoop the cone direction is
    undefined and the count falls back to the radius alone."""
    shooter = scene.players_xy[scene.shooter_slot]
    defenders = scene.players_xy[5:]
    rel = defenders - shooter
    dist = np.linalg.norm(rel, axis=1)
    near = dist <= NEAR_RADIUS_FT

    axis = np.array(HOOP_HIGH) - shooter
    axis_len = np.linalg.norm(axis)
    if axis_len < 1e-9:
        return int(near.sum())
    cos_lim = np.cos(np.radians(half_angle_deg))
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (rel @ axis) / (dist * axis_len)
    in_cone = np.where(dist > 0, cosang >= cos_lim - 1e-12, True)
    return int((near & in_cone).sum())


def _hoop_bearings(points: np.ndarray) -> np.ndarray:
    rel = points - np.array(HOOP_HIGH)
    return np.arctan2(rel[:, 1], rel[:, 0])


def extract_features(play: Play) -> FeatureVector:
    """Compute the full 198-entry vector for one oriented play."""
    scene = Scene.from_play(play)
    players = scene.players_xy
    ball = scene.ball_xyz
    hoop = np.array(HOOP_HIGH)
    out = np.empty(N_FEATURES, dtype=np.float64)

    out[0:20] = players.reshape(-1)
    out[20:23] = ball
    out[23] = play.game_secs_remaining
    out[24] = play.quarter_secs_remaining

    speeds = window_speeds(play)
    out[25:75] = speeds[:10].reshape(-1)
    out[75:80] = speeds[10]

    rel = players[_PAIR_I] - players[_PAIR_J]
    out[80:125] = np.linalg.norm(rel, axis=1)

    to_hoop = players - hoop
    hoop_dist = np.linalg.norm(to_hoop, axis=1)
    bearings = _hoop_bearings(players)
    raw = np.abs(bearings[_PAIR_I] - bearings[_PAIR_J])
    wrapped = np.minimum(raw, 2.0 * np.pi - raw)
    degenerate = (hoop_dist[_PAIR_I] < 1e-9) | (hoop_dist[_PAIR_J] < 1e-9)
    out[125:170] = np.where(degenerate, 0.0, wrapped)

    out[170:180] = hoop_dist
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_inward = np.clip(-to_hoop[:, 0] / np.maximum(hoop_dist, 1e-300), -1.0, 1.0)
    out[180:190] = np.where(hoop_dist < 1e-9, 0.0, np.arccos(cos_inward))

    out[190] = defenders_in_cone(scene)
    shooter = players[scene.shooter_slot]
    d_shooter = np.linalg.norm(players - shooter, axis=1)
    out[191] = np.sum(d_shooter[5:] <= NEAR_RADIUS_FT)
    out[192:197] = possession_times(play)
    near_any = d_shooter <= NEAR_RADIUS_FT
    near_any[scene.shooter_slot] = False
    out[197] = near_any.sum()

    return FeatureVector(values=out, shooter_role=play.shooter_role)


def extract_feature_matrix(plays: list[Play]) -> np.ndarray:
    """(N, 198) float64 matrix of extract_features over plays."""
    if not plays:
        return np.zeros((0, N_FEATURES))
    return np.stack([extract_features(p).values for p in plays])
