"""Synthetic tracking games with a planted, analytically known shot model.

Each generated play is one possession: five offensive players ease toward
role-typical spots, defenders shade their marks toward the hoop with lag and
noise, and the ball rides with its holder (optionally after one pass) until
the designated shooter releases at the final frame. The shot outcome is
sampled from a logistic model of shot distance, defender proximity, and
shooter role, and every play's realized probability is recorded so tests can
check the pipeline against exact ground truth.

Generation is deterministic for a fixed config. Tail-to-head, plays alternate
offense between the two teams so each play is exactly one possession under
the nearest-owner rule.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from .court import COURT_LENGTH_FT, COURT_WIDTH_FT, FPS, HOOP_HIGH, QUARTER_SECONDS
from .tracking import (
    EVENT_PASS,
    EVENT_SHOT_MADE,
    EVENT_SHOT_MISSED,
    TEAM_BALL,
    FrameSequence,
    ValidationReport,
)

SETUP_FRAMES = 37
PLAY_PHASE_FRAMES = 125
FRAMES_PER_PLAY = SETUP_FRAMES + PLAY_PHASE_FRAMES

# Openness saturates: defender distance beyond this contributes nothing.
DEFENDER_DIST_CAP_FT = 10.0

_COURT_MARGIN = 0.75


class ConfigError(ValueError):
    """Invalid generator configuration."""


@dataclass(frozen=True)
class GenConfig:
    n_plays: int
    seed: int
    fps: int = FPS
    noise_std: float = 0.5
    role_offsets: tuple[float, float, float, float, float] = (-0.15, -0.05, 0.35, 0.10, 0.0)
    coeffs: tuple[float, float, float] = (0.8, 0.09, 0.08)

    def validate(self) -> None:
        if self.n_plays < 1:
            raise ConfigError(f"n_plays must be >= 1, got {self.n_plays}")
        if self.fps < 1:
            raise ConfigError(f"fps must be >= 1, got {self.fps}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if len(self.role_offsets) != 5:
            raise ConfigError("role_offsets must have 5 entries")
        if len(self.coeffs) != 3:
            raise ConfigError("coeffs must be (a, b, c)")


@dataclass(frozen=True)
class PlantedScene:
    play_index: int
    shooter_role: int
    shot_xy: tuple[float, float]
    dist_to_hoop: float
    min_defender_dist: float
    probability: float
    outcome: str  # "made" | "missed"
    quarter: int
    game_secs_remaining: float
    quarter_secs_remaining: float

    @property
    def made(self) -> bool:
        return self.outcome == "made"

    @property
    def label(self) -> int:
        return 2 * (self.shooter_role - 1) + (0 if self.made else 1)


def planted_shot_probability(
    dist_to_hoop: float, min_defender_dist: float, role: int, cfg: GenConfig
) -> float:
    """Logistic make-probability: strictly decreasing in shot distance,
    non-decreasing in defender distance (capped at 10 ft)."""
    if dist_to_hoop < 0:
        raise ValueError("dist_to_hoop must be >= 0")
    if not 1 <= role <= 5:
        raise ValueError(f"role must be in 1..5, got {role}")
    a, b, c = cfg.coeffs
    logit = (
        a
        - b * dist_to_hoop
        + c * min(min_defender_dist, DEFENDER_DIST_CAP_FT)
        + cfg.role_offsets[role - 1]
    )
    return 1.0 / (1.0 + math.exp(-logit))


def _smoothstep(u: np.ndarray) -> np.ndarray:
    return u * u * (3.0 - 2.0 * u)


def _ou_noise(rng: np.random.Generator, n: int, dims: int, sigma: float, rho: float = 0.92):
    """Smooth stationary jitter (Ornstein-Uhlenbeck style random walk)."""
    if sigma <= 0:
        return np.zeros((n, dims))
    step = sigma * math.sqrt(1.0 - rho * rho)
    eps = step * rng.standard_normal((n, dims))
    eps[0] = 0.0
    return lfilter([1.0], [1.0, -rho], eps, axis=0)

# Shot-spot priors per role: (rim_share, rim_lo, rim_hi, alt sampler params).
# Role 3 (center) lives in the paint with a heavy at-rim cluster; role 2
# (shooting guard) is biased to the three-point arc.


def _sample_shot_spot(rng: np.random.Generator, role: int) -> np.ndarray:
    hoop = np.array(HOOP_HIGH)
    if role == 1:
        r = float(np.clip(rng.normal(20.0, 4.0), 12.0, 27.0))
        theta = math.radians(float(np.clip(rng.normal(0.0, 25.0), -60.0, 60.0)))
    elif role == 2:
        if rng.random() < 0.75:
            r = float(np.clip(rng.normal(23.5, 1.2), 20.0, 26.0))
        else:
            r = float(rng.uniform(8.0, 18.0))
        theta = math.radians(float(rng.uniform(-70.0, 70.0)))
    elif role == 3:
        if rng.random() < 0.6:
            r = float(rng.uniform(0.3, 1.2))
            theta = math.radians(float(rng.uniform(-90.0, 90.0)))
        else:
            r = float(rng.uniform(2.0, 9.0))
            theta = math.radians(float(rng.uniform(-50.0, 50.0)))
    elif role == 4:
        if rng.random() < 0.35:
            r = float(rng.uniform(0.5, 2.0))
        else:
            r = float(np.clip(rng.normal(11.0, 3.0), 4.0, 18.0))
        theta = math.radians(float(rng.uniform(-60.0, 60.0)))
    else:
        r = float(np.clip(rng.normal(15.0, 4.0), 6.0, 24.0))
        theta = math.radians(float(rng.uniform(-75.0, 75.0)))
    spot = hoop + r * np.array([-math.cos(theta), math.sin(theta)])
    return _clamp_court(spot)


def _clamp_court(xy: np.ndarray) -> np.ndarray:
    return np.clip(
        xy,
        [_COURT_MARGIN, _COURT_MARGIN],
        [COURT_LENGTH_FT - _COURT_MARGIN, COURT_WIDTH_FT - _COURT_MARGIN],
    )


def _play_trajectories(rng: np.random.Generator, cfg: GenConfig, shooter_role: int):
    """Positions for one play in attack-the-high-hoop coordinates.

    Returns (players (T,10,2) with offense in 0..4 by role, ball (T,3),
    pass_frame or None, passer_role or None).
    """
    T = FRAMES_PER_PLAY
    hoop = np.array(HOOP_HIGH)
    u = np.arange(T) / (T - 1)
    ease = _smoothstep(u)[:, None]

    off_targets = np.stack([_sample_shot_spot(rng, role) for role in range(1, 6)])
    off = np.empty((T, 5, 2))
    for k in range(5):
        direction = rng.uniform(0, 2 * math.pi)
        radius = rng.uniform(4.0, 14.0)
        start = off_targets[k] + radius * np.array([math.cos(direction), math.sin(direction)])
        start = _clamp_court(start)
        path = start + (off_targets[k] - start) * ease
        off[:, k] = path + _ou_noise(rng, T, 2, cfg.noise_std)
    off = np.clip(
        off,
        [_COURT_MARGIN, _COURT_MARGIN],
        [COURT_LENGTH_FT - _COURT_MARGIN, COURT_WIDTH_FT - _COURT_MARGIN],
    )

    # Ball: rides with the holder; one optional pass into the shooter's hands.
    shooter = shooter_role - 1
    pass_frame = passer = None
    holder_pos = np.empty((T, 2))
    if rng.random() < 0.75:
        others = [k for k in range(5) if k != shooter]
        passer = others[int(rng.integers(0, 4))]
        pass_frame = SETUP_FRAMES + int(rng.integers(20, 61))
        flight = 8
        holder_pos[:pass_frame] = off[:pass_frame, passer]
        fu = np.linspace(0.0, 1.0, flight + 1)[1:, None]
        holder_pos[pass_frame : pass_frame + flight] = (
            off[pass_frame, passer] + (off[pass_frame + flight, shooter] - off[pass_frame, passer]) * fu[:flight]
        )
        holder_pos[pass_frame + flight :] = off[pass_frame + flight :, shooter]
    else:
        holder_pos[:] = off[:, shooter]

    dribble = _ou_noise(rng, T, 2, 0.22)
    radius = np.linalg.norm(dribble, axis=1)
    over = radius > 0.45
    dribble[over] *= (0.45 / radius[over])[:, None]
    ball_xy = holder_pos + dribble
    ball_xy[-1] = off[-1, shooter] + dribble[-1] * 0.3  # tucked in on the release
    ball_xy = np.clip(ball_xy, [1.0, 1.0], [COURT_LENGTH_FT - 1.0, COURT_WIDTH_FT - 1.0])

    defense = np.empty((T, 5, 2))
    for k in range(5):
        lag = int(rng.integers(3, 7))
        tight_start = rng.uniform(3.0, 9.0)
        tight_end = float(np.clip(rng.lognormal(math.log(3.5), 0.6), 0.8, 12.0))
        tight = tight_start + (tight_end - tight_start) * _smoothstep(u)
        mark = off[np.maximum(np.arange(T) - lag, 0), k]
        to_hoop = hoop - mark
        dist = np.linalg.norm(to_hoop, axis=1)
        unit = to_hoop / np.maximum(dist, 1e-9)[:, None]
        shade = np.minimum(tight, 0.8 * dist)
        defense[:, k] = mark + shade[:, None] * unit + _ou_noise(rng, T, 2, 0.3)
    defense = np.clip(
        defense,
        [_COURT_MARGIN, _COURT_MARGIN],
        [COURT_LENGTH_FT - _COURT_MARGIN, COURT_WIDTH_FT - _COURT_MARGIN],
    )
    # keep defenders at least 0.9 ft off the ball so the nearest player is
    # always offensive and possession never flips mid-play (the ball itself
    # stays >= 1 ft inside the court, so the push cannot leave it)
    rel = defense - ball_xy[:, None, :]
    d_ball = np.linalg.norm(rel, axis=2)
    crowding = d_ball < 0.9
    if crowding.any():
        unit = rel / np.maximum(d_ball, 1e-9)[:, :, None]
        unit[d_ball < 1e-9] = (1.0, 0.0)
        pushed = ball_xy[:, None, :] + 0.9 * unit
        defense = np.where(crowding[:, :, None], pushed, defense)

    phase = rng.uniform(0, 2 * math.pi)
    ball_z = 2.2 * np.abs(np.sin(0.35 * np.arange(T) + phase))
    if pass_frame is not None:
        arc = np.sin(np.linspace(0, math.pi, 9))[1:]
        ball_z[pass_frame : pass_frame + 8] = 4.0 + 2.0 * arc
    release = np.linspace(0.0, 1.0, 9)[1:]
    ball_z[-8:] = ball_z[-8] + (7.6 - ball_z[-8]) * release

    players = np.concatenate([off, defense], axis=1)
    ball = np.concatenate([ball_xy, ball_z[:, None]], axis=1)
    return players, ball, pass_frame, passer


def generate_games(cfg: GenConfig) -> tuple[FrameSequence, list[PlantedScene]]:
    """Generate cfg.n_plays plays as one continuous frame stream.

    Offense alternates between teams 1 and 2 each play, so under the
    possession rule every play is its own possession. Returns the frames and
    the per-play planted truth.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    T = FRAMES_PER_PLAY
    n = cfg.n_plays
    frames_per_quarter = int(round(QUARTER_SECONDS * cfg.fps))

    player_xy = np.empty((n * T, 10, 2))
    player_event = np.zeros((n * T, 10), dtype=np.int64)
    ball_xyz = np.empty((n * T, 3))
    scenes: list[PlantedScene] = []

    hoop = np.array(HOOP_HIGH)
    for p in range(n):
        offense_team = 1 + (p % 2)
        shooter_role = int(rng.integers(1, 6))
        players, ball, pass_frame, passer = _play_trajectories(rng, cfg, shooter_role)

        shot_xy = players[-1, shooter_role - 1].copy()
        dist_to_hoop = float(np.linalg.norm(shot_xy - hoop))
        min_dd = float(np.min(np.linalg.norm(players[-1, 5:] - shot_xy, axis=1)))
        prob = planted_shot_probability(dist_to_hoop, min_dd, shooter_role, cfg)
        made = bool(rng.random() < prob)

        if offense_team == 2:
            players = np.stack(
                [COURT_LENGTH_FT - players[..., 0], COURT_WIDTH_FT - players[..., 1]], axis=-1
            )
            ball = np.concatenate(
                [
                    COURT_LENGTH_FT - ball[:, :1],
                    COURT_WIDTH_FT - ball[:, 1:2],
                    ball[:, 2:],
                ],
                axis=1,
            )

        # slot order is (team, id): team 1 in slots 0..4, team 2 in 5..9
        base = p * T
        if offense_team == 1:
            player_xy[base : base + T] = players
        else:
            player_xy[base : base + T, 0:5] = players[:, 5:10]
            player_xy[base : base + T, 5:10] = players[:, 0:5]
        ball_xyz[base : base + T] = ball

        off_slot0 = 0 if offense_team == 1 else 5
        shooter_slot = off_slot0 + shooter_role - 1
        player_event[base + T - 1, shooter_slot] = EVENT_SHOT_MADE if made else EVENT_SHOT_MISSED
        if pass_frame is not None:
            player_event[base + pass_frame, off_slot0 + passer] = EVENT_PASS

        shot_global = base + T - 1
        quarter = shot_global // frames_per_quarter + 1
        clock = QUARTER_SECONDS - (shot_global % frames_per_quarter) / cfg.fps
        game_secs = max(0, 4 - quarter) * QUARTER_SECONDS + clock
        scenes.append(
            PlantedScene(
                play_index=p,
                shooter_role=shooter_role,
                shot_xy=(float(shot_xy[0]), float(shot_xy[1])),
                dist_to_hoop=dist_to_hoop,
                min_defender_dist=min_dd,
                probability=prob,
                outcome="made" if made else "missed",
                quarter=quarter,
                game_secs_remaining=game_secs,
                quarter_secs_remaining=clock,
            )
        )

    idx = np.arange(n * T)
    game_time = QUARTER_SECONDS - (idx % frames_per_quarter) / cfg.fps
    real_time = idx * (1000.0 / cfg.fps)
    team_row = np.tile(np.repeat([1, 2], 5), (n * T, 1))
    ids = np.tile(np.concatenate([101 + np.arange(5), 201 + np.arange(5)]), (n * T, 1))
    roles = np.tile(np.concatenate([1 + np.arange(5), 1 + np.arange(5)]), (n * T, 1))

    frames = FrameSequence(
        game_time=game_time,
        real_time=real_time,
        player_id=ids,
        player_team=team_row,
        player_role=roles,
        player_xy=player_xy,
        player_event=player_event,
        ball_id=np.full(n * T, TEAM_BALL, dtype=np.int64),
        ball_xyz=ball_xyz,
        ball_event=np.zeros(n * T, dtype=np.int64),
        parse_report=ValidationReport(frame_count=n * T),
    )
    return frames, scenes


TRUTH_COLUMNS = (
    "play_index",
    "shooter_role",
    "shot_x",
    "shot_y",
    "dist_to_hoop",
    "min_defender_dist",
    "probability",
    "outcome",
    "quarter",
    "game_secs_remaining",
    "quarter_secs_remaining",
)


def write_truth(scenes: list[PlantedScene]) -> bytes:
    df = pd.DataFrame(
        {
            "play_index": [s.play_index for s in scenes],
            "shooter_role": [s.shooter_role for s in scenes],
            "shot_x": [s.shot_xy[0] for s in scenes],
            "shot_y": [s.shot_xy[1] for s in scenes],
            "dist_to_hoop": [s.dist_to_hoop for s in scenes],
            "min_defender_dist": [s.min_defender_dist for s in scenes],
            "probability": [s.probability for s in scenes],
            "outcome": [s.outcome for s in scenes],
            "quarter": [s.quarter for s in scenes],
            "game_secs_remaining": [s.game_secs_remaining for s in scenes],
            "quarter_secs_remaining": [s.quarter_secs_remaining for s in scenes],
        }
    )
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format="%.9f")
    return buf.getvalue().encode()


def read_truth(data: bytes) -> list[PlantedScene]:
    df = pd.read_csv(io.BytesIO(data))
    return [
        PlantedScene(
            play_index=int(r.play_index),
            shooter_role=int(r.shooter_role),
            shot_xy=(float(r.shot_x), float(r.shot_y)),
            dist_to_hoop=float(r.dist_to_hoop),
            min_defender_dist=float(r.min_defender_dist),
            probability=float(r.probability),
            outcome=str(r.outcome),
            quarter=int(r.quarter),
            game_secs_remaining=float(r.game_secs_remaining),
            quarter_secs_remaining=float(r.quarter_secs_remaining),
        )
        for r in df.itertuples()
    ]
