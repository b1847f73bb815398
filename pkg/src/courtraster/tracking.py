"""Frame-by-frame tracking data: parsing, validation, and serialization.

File format is CSV with columns

    game_time, real_time, team, player, x, y, z, role, event

one row per tracked entity, rows of one frame contiguous and sharing the
(game_time, real_time) pair. A header row is optional and detected by a
non-numeric first field. Team tags: 1 and 2 for the teams, -1 for the ball,
-2 for referees. x spans the 94 ft court length, y the 50 ft width, z is
height in feet (players are on the floor). Role is 1..5 for players and 0
otherwise; event is an opaque integer code at this layer (see
:mod:`courtraster.plays` for the code table).

Parsing never raises on structurally bad frames: a frame missing its ball
or without exactly 5 players per team is quarantined into the attached
:class:`ValidationReport`. Malformed numeric fields raise :class:`ParseError`
with the offending row number.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .court import COURT_LENGTH_FT, COURT_WIDTH_FT, QUARTER_SECONDS

COLUMNS = ("game_time", "real_time", "team", "player", "x", "y", "z", "role", "event")

TEAM_BALL = -1
TEAM_REFEREE = -2

EVENT_NONE = 0
EVENT_SHOT_MADE = 1
EVENT_SHOT_MISSED = 2
EVENT_PASS = 3
EVENT_FOUL = 4
EVENT_REBOUND = 5

# Tracking noise allowance before a coordinate counts as off the court.
OUT_OF_COURT_TOLERANCE_FT = 2.0


class ParseError(Exception):
    """Malformed tracking input, located by 1-based row number."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class FrameError(Exception):
    """A frame violates the structural invariants (player/ball counts)."""


@dataclass(frozen=True)
class EntityRecord:
    team: int
    player_id: int
    x: float
    y: float
    z: float
    role: int
    event: int


@dataclass(frozen=True)
class Frame:
    game_time: float
    real_time: float
    records: tuple[EntityRecord, ...]

    @property
    def players(self) -> tuple[EntityRecord, ...]:
        return tuple(r for r in self.records if r.team > 0)

    @property
    def ball(self) -> EntityRecord | None:
        for r in self.records:
            if r.team == TEAM_BALL:
                return r
        return None

    @property
    def referees(self) -> tuple[EntityRecord, ...]:
        return tuple(r for r in self.records if r.team == TEAM_REFEREE)


@dataclass
class ValidationReport:
    frame_count: int = 0
    dropped_frames: int = 0
    violations: list[tuple[int, str, str]] = field(default_factory=list)

    def add(self, frame_index: int, rule: str, message: str) -> None:
        self.violations.append((frame_index, rule, message))

    @property
    def ok(self) -> bool:
        return not self.violations and self.dropped_frames == 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "frame_count": self.frame_count,
                "accepted_frames": self.frame_count - self.dropped_frames,
                "dropped_frames": self.dropped_frames,
                "violations": [
                    {"frame": f, "rule": r, "message": m} for f, r, m in self.violations
                ],
            },
            indent=2,
        )


class FrameSequence:
    """Columnar store of accepted frames.

    Player slots within a frame are ordered by (team, player_id), so slot
    0..4 is team 1 and 5..9 is team 2 whenever team ids are 1 and 2.
    Behaves as a sequence of :class:`Frame` (materialized lazily).
    """

    def __init__(
        self,
        game_time: np.ndarray,
        real_time: np.ndarray,
        player_id: np.ndarray,
        player_team: np.ndarray,
        player_role: np.ndarray,
        player_xy: np.ndarray,
        player_event: np.ndarray,
        ball_id: np.ndarray,
        ball_xyz: np.ndarray,
        ball_event: np.ndarray,
        ref_frame: np.ndarray | None = None,
        ref_id: np.ndarray | None = None,
        ref_xyz: np.ndarray | None = None,
        ref_event: np.ndarray | None = None,
        parse_report: ValidationReport | None = None,
    ):
        n = len(game_time)
        self.game_time = np.asarray(game_time, dtype=np.float64)
        self.real_time = np.asarray(real_time, dtype=np.float64)
        self.player_id = np.asarray(player_id, dtype=np.int64).reshape(n, 10)
        self.player_team = np.asarray(player_team, dtype=np.int64).reshape(n, 10)
        self.player_role = np.asarray(player_role, dtype=np.int64).reshape(n, 10)
        self.player_xy = np.asarray(player_xy, dtype=np.float64).reshape(n, 10, 2)
        self.player_event = np.asarray(player_event, dtype=np.int64).reshape(n, 10)
        self.ball_id = np.asarray(ball_id, dtype=np.int64)
        self.ball_xyz = np.asarray(ball_xyz, dtype=np.float64).reshape(n, 3)
        self.ball_event = np.asarray(ball_event, dtype=np.int64)
        empty_i = np.empty(0, dtype=np.int64)
        self.ref_frame = empty_i if ref_frame is None else np.asarray(ref_frame, dtype=np.int64)
        self.ref_id = empty_i if ref_id is None else np.asarray(ref_id, dtype=np.int64)
        self.ref_xyz = (
            np.empty((0, 3)) if ref_xyz is None else np.asarray(ref_xyz, dtype=np.float64)
        )
        self.ref_event = empty_i if ref_event is None else np.asarray(ref_event, dtype=np.int64)
        self.parse_report = parse_report

    def __len__(self) -> int:
        return len(self.game_time)

    def __getitem__(self, i: int) -> Frame:
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        i = i % len(self) if len(self) else 0
        records = [
            EntityRecord(
                team=int(self.player_team[i, s]),
                player_id=int(self.player_id[i, s]),
                x=float(self.player_xy[i, s, 0]),
                y=float(self.player_xy[i, s, 1]),
                z=0.0,
                role=int(self.player_role[i, s]),
                event=int(self.player_event[i, s]),
            )
            for s in range(10)
        ]
        records.append(
            EntityRecord(
                team=TEAM_BALL,
                player_id=int(self.ball_id[i]),
                x=float(self.ball_xyz[i, 0]),
                y=float(self.ball_xyz[i, 1]),
                z=float(self.ball_xyz[i, 2]),
                role=0,
                event=int(self.ball_event[i]),
            )
        )
        for k in np.flatnonzero(self.ref_frame == i):
            records.append(
                EntityRecord(
                    team=TEAM_REFEREE,
                    player_id=int(self.ref_id[k]),
                    x=float(self.ref_xyz[k, 0]),
                    y=float(self.ref_xyz[k, 1]),
                    z=float(self.ref_xyz[k, 2]),
                    role=0,
                    event=int(self.ref_event[k]),
                )
            )
        return Frame(
            game_time=float(self.game_time[i]),
            real_time=float(self.real_time[i]),
            records=tuple(records),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @staticmethod
    def from_frames(frames) -> "FrameSequence":
        """Build a columnar sequence from Frame objects; raises FrameError on
        frames that break the 10-player / 1-ball invariant."""
        rows = []
        for idx, fr in enumerate(frames):
            players = sorted(fr.players, key=lambda r: (r.team, r.player_id))
            if fr.ball is None:
                raise FrameError(f"frame {idx}: missing ball record")
            if len(players) != 10:
                raise FrameError(f"frame {idx}: expected 10 player records, got {len(players)}")
            if sum(1 for p in players if p.team == players[0].team) != 5:
                raise FrameError(f"frame {idx}: teams are not 5 players each")
            rows.append((fr, players, fr.ball, fr.referees))
        n = len(rows)
        seq = FrameSequence(
            game_time=np.array([r[0].game_time for r in rows], dtype=np.float64),
            real_time=np.array([r[0].real_time for r in rows], dtype=np.float64),
            player_id=np.array([[p.player_id for p in r[1]] for r in rows], dtype=np.int64).reshape(n, 10),
            player_team=np.array([[p.team for p in r[1]] for r in rows], dtype=np.int64).reshape(n, 10),
            player_role=np.array([[p.role for p in r[1]] for r in rows], dtype=np.int64).reshape(n, 10),
            player_xy=np.array(
                [[(p.x, p.y) for p in r[1]] for r in rows], dtype=np.float64
            ).reshape(n, 10, 2),
            player_event=np.array([[p.event for p in r[1]] for r in rows], dtype=np.int64).reshape(n, 10),
            ball_id=np.array([r[2].player_id for r in rows], dtype=np.int64),
            ball_xyz=np.array([(r[2].x, r[2].y, r[2].z) for r in rows], dtype=np.float64).reshape(n, 3),
            ball_event=np.array([r[2].event for r in rows], dtype=np.int64),
        )
        ref_frame, ref_id, ref_xyz, ref_event = [], [], [], []
        for idx, r in enumerate(rows):
            for ref in r[3]:
                ref_frame.append(idx)
                ref_id.append(ref.player_id)
                ref_xyz.append((ref.x, ref.y, ref.z))
                ref_event.append(ref.event)
        if ref_frame:
            seq.ref_frame = np.array(ref_frame, dtype=np.int64)
            seq.ref_id = np.array(ref_id, dtype=np.int64)
            seq.ref_xyz = np.array(ref_xyz, dtype=np.float64).reshape(-1, 3)
            seq.ref_event = np.array(ref_event, dtype=np.int64)
        return seq


def _has_header(first_line: str) -> bool:
    first_field = first_line.split(",")[0].strip()
    try:
        float(first_field)
        return False
    except ValueError:
        return bool(first_field)


def _slow_parse_rows(text: str) -> np.ndarray:
    """Row-by-row fallback that pinpoints the first malformed field."""
    out = []
    lines = text.splitlines()
    start = 1 if lines and _has_header(lines[0]) else 0
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1 and start == 1:
            continue
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(COLUMNS):
            raise ParseError(
                f"expected {len(COLUMNS)} fields, got {len(fields)}", row=lineno
            )
        try:
            out.append([float(f) for f in fields])
        except ValueError as exc:
            raise ParseError(str(exc), row=lineno) from None
    return np.array(out, dtype=np.float64).reshape(-1, len(COLUMNS))


def parse_tracking(data) -> FrameSequence:
    """Parse tracking CSV bytes (or text) into a FrameSequence.

    Rows sharing (game_time, real_time) group into one frame, in file order.
    Structurally invalid frames are quarantined into ``.parse_report``.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    else:
        text = str(data)

    report = ValidationReport()
    stripped = text.strip()
    if not stripped:
        return _empty_sequence(report)

    first_line = stripped.splitlines()[0]
    try:
        table = pd.read_csv(
            io.StringIO(text),
            header=0 if _has_header(first_line) else None,
            names=COLUMNS,
            dtype=np.float64,
            skip_blank_lines=True,
        ).to_numpy()
    except (ValueError, pd.errors.ParserError):
        table = _slow_parse_rows(text)  # raises ParseError with the row number
    if table.shape[0] == 0:
        return _empty_sequence(report)
    if not np.all(np.isfinite(table[:, :2])):
        bad = int(np.flatnonzero(~np.isfinite(table[:, :2]).all(axis=1))[0])
        raise ParseError("non-finite timestamp", row=bad + 1)

    gt, rt = table[:, 0], table[:, 1]
    changed = (gt[1:] != gt[:-1]) | (rt[1:] != rt[:-1])
    starts = np.concatenate(([0], np.flatnonzero(changed) + 1))
    ends = np.concatenate((starts[1:], [len(table)]))
    n_groups = len(starts)
    report.frame_count = n_groups

    row_frame = np.repeat(np.arange(n_groups), ends - starts)
    team = table[:, 2].astype(np.int64)
    is_player = team > 0
    is_ball = team == TEAM_BALL

    players_per = np.bincount(row_frame[is_player], minlength=n_groups)
    balls_per = np.bincount(row_frame[is_ball], minlength=n_groups)
    team_ids = np.unique(team[is_player]) if is_player.any() else np.array([], dtype=np.int64)
    ok = (players_per == 10) & (balls_per == 1)
    if len(team_ids) > 0:
        # exactly 5 per team within each frame
        lo = np.bincount(
            row_frame[is_player & (team == team_ids[0])], minlength=n_groups
        )
        ok &= lo == 5
    if len(team_ids) > 2:
        ok[:] = False

    for bad_idx in np.flatnonzero(~ok):
        rule = "missing_ball" if balls_per[bad_idx] != 1 else "player_count"
        report.add(
            int(bad_idx),
            rule,
            f"{players_per[bad_idx]} players, {balls_per[bad_idx]} ball records",
        )
    report.dropped_frames = int((~ok).sum())

    keep_frame = ok[row_frame]
    new_index = np.cumsum(ok) - 1  # old frame idx -> new frame idx

    prows = np.flatnonzero(is_player & keep_frame)
    order = np.lexsort((table[prows, 3], team[prows], row_frame[prows]))
    prows = prows[order]
    n_ok = int(ok.sum())

    brows = np.flatnonzero(is_ball & keep_frame)
    rrows = np.flatnonzero((team == TEAM_REFEREE) & keep_frame)

    seq = FrameSequence(
        game_time=gt[starts][ok],
        real_time=rt[starts][ok],
        player_id=table[prows, 3].astype(np.int64).reshape(n_ok, 10),
        player_team=team[prows].reshape(n_ok, 10),
        player_role=table[prows, 7].astype(np.int64).reshape(n_ok, 10),
        player_xy=table[np.ix_(prows, [4, 5])].reshape(n_ok, 10, 2),
        player_event=table[prows, 8].astype(np.int64).reshape(n_ok, 10),
        ball_id=table[brows, 3].astype(np.int64),
        ball_xyz=table[np.ix_(brows, [4, 5, 6])].reshape(n_ok, 3),
        ball_event=table[brows, 8].astype(np.int64),
        ref_frame=new_index[row_frame[rrows]],
        ref_id=table[rrows, 3].astype(np.int64),
        ref_xyz=table[np.ix_(rrows, [4, 5, 6])].reshape(-1, 3),
        ref_event=table[rrows, 8].astype(np.int64),
        parse_report=report,
    )
    return seq


def _empty_sequence(report: ValidationReport) -> FrameSequence:
    z = np.empty(0, dtype=np.float64)
    return FrameSequence(
        game_time=z,
        real_time=z.copy(),
        player_id=np.empty((0, 10), dtype=np.int64),
        player_team=np.empty((0, 10), dtype=np.int64),
        player_role=np.empty((0, 10), dtype=np.int64),
        player_xy=np.empty((0, 10, 2)),
        player_event=np.empty((0, 10), dtype=np.int64),
        ball_id=np.empty(0, dtype=np.int64),
        ball_xyz=np.empty((0, 3)),
        ball_event=np.empty(0, dtype=np.int64),
        parse_report=report,
    )


def write_tracking(frames) -> bytes:
    """Serialize frames to CSV bytes. Floats carry 6 decimals, so
    parse_tracking(write_tracking(f)) reproduces coordinates to 1e-6 ft
    and integer fields exactly. Within a frame the order is players
    (by team then id), ball, then referees."""
    if not isinstance(frames, FrameSequence):
        frames = FrameSequence.from_frames(frames)
    n = len(frames)
    header = ",".join(COLUMNS) + "\n"
    if n == 0:
        return header.encode()

    n_ref = len(frames.ref_frame)
    total = n * 11 + n_ref
    cols = np.empty((total, len(COLUMNS)), dtype=np.float64)

    p = cols[: n * 10]
    p[:, 0] = np.repeat(frames.game_time, 10)
    p[:, 1] = np.repeat(frames.real_time, 10)
    p[:, 2] = frames.player_team.reshape(-1)
    p[:, 3] = frames.player_id.reshape(-1)
    p[:, 4:6] = frames.player_xy.reshape(-1, 2)
    p[:, 6] = 0.0
    p[:, 7] = frames.player_role.reshape(-1)
    p[:, 8] = frames.player_event.reshape(-1)

    b = cols[n * 10 : n * 11]
    b[:, 0] = frames.game_time
    b[:, 1] = frames.real_time
    b[:, 2] = TEAM_BALL
    b[:, 3] = frames.ball_id
    b[:, 4:7] = frames.ball_xyz
    b[:, 7] = 0.0
    b[:, 8] = frames.ball_event

    if n_ref:
        r = cols[n * 11 :]
        r[:, 0] = frames.game_time[frames.ref_frame]
        r[:, 1] = frames.real_time[frames.ref_frame]
        r[:, 2] = TEAM_REFEREE
        r[:, 3] = frames.ref_id
        r[:, 4:7] = frames.ref_xyz
        r[:, 7] = 0.0
        r[:, 8] = frames.ref_event

    # stable sort: frame index major, then players < ball < referees
    frame_key = np.concatenate(
        (np.repeat(np.arange(n), 10), np.arange(n), frames.ref_frame)
    )
    rank = np.concatenate(
        (np.zeros(n * 10, dtype=np.int64), np.ones(n, dtype=np.int64), np.full(n_ref, 2, dtype=np.int64))
    )
    within = np.concatenate(
        (np.tile(np.arange(10), n), np.zeros(n, dtype=np.int64), np.arange(n_ref))
    )
    order = np.lexsort((within, rank, frame_key))
    cols = cols[order]

    df = pd.DataFrame(
        {
            "game_time": cols[:, 0],
            "real_time": cols[:, 1],
            "team": cols[:, 2].astype(np.int64),
            "player": cols[:, 3].astype(np.int64),
            "x": cols[:, 4],
            "y": cols[:, 5],
            "z": cols[:, 6],
            "role": cols[:, 7].astype(np.int64),
            "event": cols[:, 8].astype(np.int64),
        }
    )
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format="%.6f")
    return buf.getvalue().encode()


def validate(frames, quarter_length: float = QUARTER_SECONDS) -> ValidationReport:
    """Report-only checks: coordinates on the court (within tolerance),
    game clock non-increasing within a quarter, ball present.

    Accepts a FrameSequence (vectorized) or any iterable of Frame.
    """
    if isinstance(frames, FrameSequence):
        return _validate_columnar(frames, quarter_length)

    report = ValidationReport()
    prev_gt = None
    lo_x, hi_x = -OUT_OF_COURT_TOLERANCE_FT, COURT_LENGTH_FT + OUT_OF_COURT_TOLERANCE_FT
    lo_y, hi_y = -OUT_OF_COURT_TOLERANCE_FT, COURT_WIDTH_FT + OUT_OF_COURT_TOLERANCE_FT
    i = -1
    for i, fr in enumerate(frames):
        report.frame_count += 1
        if fr.ball is None:
            report.add(i, "missing_ball", "no ball record in frame")
        for rec in fr.records:
            if not (lo_x <= rec.x <= hi_x and lo_y <= rec.y <= hi_y):
                report.add(
                    i,
                    "out_of_court",
                    f"entity {rec.player_id} at ({rec.x:.1f}, {rec.y:.1f})",
                )
        if prev_gt is not None and fr.game_time > prev_gt:
            if not math.isclose(fr.game_time, quarter_length):
                report.add(
                    i,
                    "clock_not_monotone",
                    f"game_time rose {prev_gt:.2f} -> {fr.game_time:.2f}",
                )
        prev_gt = fr.game_time
    return report


def _validate_columnar(seq: FrameSequence, quarter_length: float) -> ValidationReport:
    report = ValidationReport(frame_count=len(seq))
    lo_x, hi_x = -OUT_OF_COURT_TOLERANCE_FT, COURT_LENGTH_FT + OUT_OF_COURT_TOLERANCE_FT
    lo_y, hi_y = -OUT_OF_COURT_TOLERANCE_FT, COURT_WIDTH_FT + OUT_OF_COURT_TOLERANCE_FT

    x = seq.player_xy[:, :, 0]
    y = seq.player_xy[:, :, 1]
    bad = (x < lo_x) | (x > hi_x) | (y < lo_y) | (y > hi_y)
    for f, s in zip(*np.nonzero(bad)):
        report.add(
            int(f),
            "out_of_court",
            f"entity {int(seq.player_id[f, s])} at ({x[f, s]:.1f}, {y[f, s]:.1f})",
        )
    bx, by = seq.ball_xyz[:, 0], seq.ball_xyz[:, 1]
    for f in np.flatnonzero((bx < lo_x) | (bx > hi_x) | (by < lo_y) | (by > hi_y)):
        report.add(int(f), "out_of_court", f"ball at ({bx[f]:.1f}, {by[f]:.1f})")

    if len(seq) > 1:
        gt = seq.game_time
        rising = gt[1:] > gt[:-1]
        resets = np.isclose(gt[1:], quarter_length)
        for f in np.flatnonzero(rising & ~resets):
            report.add(
                int(f + 1),
                "clock_not_monotone",
                f"game_time rose {gt[f]:.2f} -> {gt[f + 1]:.2f}",
            )
    return report
