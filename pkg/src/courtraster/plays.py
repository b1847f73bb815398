"""Possession segmentation and shot-play extraction.

A possession is the maximal frame run in which one team's player is nearest
the ball; it ends when the opposing team is nearest for 12 consecutive frames
(about half a second), with the new possession starting at that run's first
frame. A play is the 125-frame window (5 s at 25 fps) ending at, and
including, a shot-event frame; windows that cross a possession boundary or
contain a second shot are discarded.

Extracted plays are stored positionally: slots 0..4 are the offensive
players by role 1..5, slots 5..9 the defenders by role 1..5, slot 10 the
ball. Roles are frozen from the play's first frame.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .court import PLAY_FRAMES, POSSESSION_SWITCH_FRAMES
from .tracking import EVENT_SHOT_MADE, EVENT_SHOT_MISSED, Frame, FrameSequence

OFFENSE_SLOTS = slice(0, 5)
DEFENSE_SLOTS = slice(5, 10)
BALL_SLOT = 10

PLAYS_MAGIC = b"PLAY"
PLAYS_VERSION = 2


class DataError(Exception):
    """Inconsistent tracking content (e.g. duplicate roles on one team)."""


class PlaysFileError(Exception):
    """Malformed plays.bin container."""


@dataclass(frozen=True)
class Possession:
    start_frame: int
    end_frame: int  # inclusive
    offense_team: int
    owner_by_frame: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValueError("possession start after end")

    def __contains__(self, frame_index: int) -> bool:
        return self.start_frame <= frame_index <= self.end_frame


@dataclass
class Play:
    positions: np.ndarray  # (125, 11, 3) float32, slot order as module docstring
    shooter_role: int
    outcome: str  # "made" | "missed"
    shooter_id: int = -1
    offense_team: int = 0
    game_secs_remaining: float = 0.0
    quarter_secs_remaining: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float32)
        if self.positions.shape != (PLAY_FRAMES, 11, 3):
            raise ValueError(f"play positions must be (125, 11, 3), got {self.positions.shape}")
        if not 1 <= self.shooter_role <= 5:
            raise ValueError(f"shooter_role must be 1..5, got {self.shooter_role}")
        if self.outcome not in ("made", "missed"):
            raise ValueError(f"outcome must be made|missed, got {self.outcome!r}")

    @property
    def made(self) -> bool:
        return self.outcome == "made"

    @property
    def label(self) -> int:
        return 2 * (self.shooter_role - 1) + (0 if self.made else 1)

    @property
    def shooter_slot(self) -> int:
        return self.shooter_role - 1

    @property
    def shot_xy(self) -> np.ndarray:
        return self.positions[-1, self.shooter_slot, :2]


def label_play(play: Play) -> int:
    """Ten-class label: (shooter role 1..5) x (made, missed)."""
    return play.label


def nearest_owner(frame: Frame) -> int:
    """Player id of the player nearest the ball (2-D; z ignored).
    Ties break to the lowest player id."""
    ball = frame.ball
    if ball is None:
        raise DataError("frame has no ball record")
    players = frame.players
    if len(players) != 10:
        raise DataError(f"frame has {len(players)} players, expected 10")
    best = None
    for p in players:
        d = (p.x - ball.x) ** 2 + (p.y - ball.y) ** 2
        key = (d, p.player_id)
        if best is None or key < best[0]:
            best = (key, p.player_id)
    return best[1]


def _owner_slots(seq: FrameSequence) -> np.ndarray:
    """Per-frame slot index of the nearest player, lowest-id tie-break."""
    diff = seq.player_xy - seq.ball_xyz[:, None, :2]
    d2 = np.einsum("fsk,fsk->fs", diff, diff)
    min_d2 = d2.min(axis=1, keepdims=True)
    candidate_ids = np.where(d2 == min_d2, seq.player_id, np.iinfo(np.int64).max)
    winner_id = candidate_ids.min(axis=1, keepdims=True)
    return np.argmax((d2 == min_d2) & (seq.player_id == winner_id), axis=1)


def segment_possessions(
    frames, switch_frames: int = POSSESSION_SWITCH_FRAMES
) -> list[Possession]:
    """Partition the frame stream into possessions by the nearest-owner rule.

    Every frame index belongs to exactly one possession. The first
    possession's offense is the team nearest the ball at frame 0.
    """
    seq = frames if isinstance(frames, FrameSequence) else FrameSequence.from_frames(frames)
    n = len(seq)
    if n == 0:
        return []

    slots = _owner_slots(seq)
    rows = np.arange(n)
    owner_team = seq.player_team[rows, slots]
    owner_id = seq.player_id[rows, slots]

    possessions: list[Possession] = []
    current_team = int(owner_team[0])
    start = 0
    run_start = None
    for t in range(n):
        if owner_team[t] != current_team:
            if run_start is None:
                run_start = t
            if t - run_start + 1 == switch_frames:
                possessions.append(
                    Possession(start, run_start - 1, current_team, owner_id[start:run_start])
                )
                current_team = int(owner_team[t])
                start = run_start
                run_start = None
        else:
            run_start = None
    possessions.append(Possession(start, n - 1, current_team, owner_id[start:]))
    return possessions


def assign_roles(first_frame: Frame) -> dict[int, int]:
    """Roles frozen at the start of a play: player_id -> role from the
    given frame. Duplicate roles within one team are a data error."""
    roles: dict[int, int] = {}
    seen: set[tuple[int, int]] = set()
    for p in first_frame.players:
        key = (p.team, p.role)
        if key in seen:
            raise DataError(f"duplicate role {p.role} on team {p.team}")
        seen.add(key)
        roles[p.player_id] = p.role
    return roles


def find_shot_events(frames) -> list[tuple[int, int]]:
    """(frame index, player slot) for every shot event in the stream."""
    seq = frames if isinstance(frames, FrameSequence) else FrameSequence.from_frames(frames)
    mask = (seq.player_event == EVENT_SHOT_MADE) | (seq.player_event == EVENT_SHOT_MISSED)
    return [(int(f), int(s)) for f, s in zip(*np.nonzero(mask))]


def extract_shot_plays(frames, possessions: list[Possession] | None = None) -> list[Play]:
    """Cut a 125-frame play for every shot event, discarding windows that
    leave the shot's possession or contain another shot event."""
    seq = frames if isinstance(frames, FrameSequence) else FrameSequence.from_frames(frames)
    if possessions is None:
        possessions = segment_possessions(seq)
    shots = find_shot_events(seq)
    if not shots:
        return []

    shot_frames = np.array([f for f, _ in shots])
    poss_starts = np.array([p.start_frame for p in possessions])
    # quarter index per frame: the game clock only rises at quarter breaks
    rises = np.concatenate(([False], np.diff(seq.game_time) > 0))
    quarter_of = 1 + np.cumsum(rises)

    plays: list[Play] = []
    for f, s in shots:
        w0 = f - (PLAY_FRAMES - 1)
        if w0 < 0:
            continue
        pi = int(np.searchsorted(poss_starts, f, side="right")) - 1
        poss = possessions[pi]
        if w0 < poss.start_frame:
            continue
        in_window = np.sum((shot_frames >= w0) & (shot_frames <= f))
        if in_window != 1:
            continue

        role_map = assign_roles(seq[w0])
        shooter_id = int(seq.player_id[f, s])
        shooter_team = int(seq.player_team[f, s])
        if shooter_team != poss.offense_team:
            continue  # shot attributed to the non-possessing team: inconsistent
        shooter_role = role_map[shooter_id]

        # slot -> (team, role) from the first frame's assignment
        first_ids = seq.player_id[w0]
        first_teams = seq.player_team[w0]
        order = np.empty(10, dtype=np.int64)
        for slot in range(10):
            pid = int(first_ids[slot])
            team = int(first_teams[slot])
            role = role_map[pid]
            if not 1 <= role <= 5:
                raise DataError(f"player {pid} has role {role}, expected 1..5")
            dest = role - 1 if team == poss.offense_team else 5 + role - 1
            order[dest] = slot

        window = np.empty((PLAY_FRAMES, 11, 3), dtype=np.float32)
        window[:, :10, :2] = seq.player_xy[w0 : f + 1][:, order]
        window[:, :10, 2] = 0.0
        window[:, BALL_SLOT] = seq.ball_xyz[w0 : f + 1]

        made = int(seq.player_event[f, s]) == EVENT_SHOT_MADE
        quarter_clock = float(seq.game_time[f])
        quarter = int(quarter_of[f])
        plays.append(
            Play(
                positions=window,
                shooter_role=int(shooter_role),
                outcome="made" if made else "missed",
                shooter_id=shooter_id,
                offense_team=poss.offense_team,
                game_secs_remaining=max(0, 4 - quarter) * 720.0 + quarter_clock,
                quarter_secs_remaining=quarter_clock,
            )
        )
    return plays


def pack_plays(plays: list[Play], version: int = PLAYS_VERSION) -> bytes:
    """Serialize plays. Version 1 records are label u8, role u8, then
    125x11 (x, y, z) float32 triples; version 2 inserts two clock floats
    (game and quarter seconds remaining) after the role byte."""
    if version not in (1, 2):
        raise PlaysFileError(f"unsupported plays version {version}")
    out = bytearray()
    out += PLAYS_MAGIC
    out += struct.pack("<HI", version, len(plays))
    for p in plays:
        out += struct.pack("<BB", p.label, p.shooter_role)
        if version == 2:
            out += struct.pack(
                "<ff", np.float32(p.game_secs_remaining), np.float32(p.quarter_secs_remaining)
            )
        out += np.ascontiguousarray(p.positions, dtype="<f4").tobytes()
    return bytes(out)


def unpack_plays(data: bytes) -> list[Play]:
    if data[:4] != PLAYS_MAGIC:
        raise PlaysFileError(f"bad magic {data[:4]!r}")
    if len(data) < 10:
        raise PlaysFileError("truncated header")
    version, count = struct.unpack_from("<HI", data, 4)
    if version not in (1, 2):
        raise PlaysFileError(f"unsupported plays version {version}")
    offset = 10
    body = PLAY_FRAMES * 11 * 3 * 4
    plays = []
    for _ in range(count):
        if len(data) < offset + 2:
            raise PlaysFileError("truncated play record")
        label, role = struct.unpack_from("<BB", data, offset)
        offset += 2
        game_secs = quarter_secs = 0.0
        if version == 2:
            game_secs, quarter_secs = struct.unpack_from("<ff", data, offset)
            offset += 8
        if len(data) < offset + body:
            raise PlaysFileError("truncated play record")
        pos = np.frombuffer(data, dtype="<f4", count=PLAY_FRAMES * 11 * 3, offset=offset)
        offset += body
        if label != 2 * (role - 1) + (label % 2):
            raise PlaysFileError(f"label {label} inconsistent with role {role}")
        plays.append(
            Play(
                positions=pos.reshape(PLAY_FRAMES, 11, 3).copy(),
                shooter_role=int(role),
                outcome="missed" if label % 2 else "made",
                game_secs_remaining=float(game_secs),
                quarter_secs_remaining=float(quarter_secs),
            )
        )
    if offset != len(data):
        raise PlaysFileError("trailing bytes after last play record")
    return plays


def save_plays(path, plays: list[Play], version: int = PLAYS_VERSION) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_plays(plays, version))


def load_plays(path) -> list[Play]:
    with open(path, "rb") as fh:
        return unpack_plays(fh.read())
