import pytest

from courtraster import GenConfig, generate_games
from courtraster.plays import extract_shot_plays
from courtraster.raster import orient_play
from courtraster.tracking import EntityRecord, Frame, FrameSequence


@pytest.fixture(scope="session")
def small_game():
    """60 plays with truth, shared across tests (generation is pure)."""
    frames, scenes = generate_games(GenConfig(n_plays=60, seed=424242))
    return frames, scenes


@pytest.fixture(scope="session")
def small_plays(small_game):
    frames, scenes = small_game
    plays = [orient_play(p) for p in extract_shot_plays(frames)]
    assert len(plays) == len(scenes)
    return plays, scenes


def make_frame(game_time, real_time, players_xy, ball_xyz, roles=None, events=None, ids=None):
    """Build one Frame from 10 player positions plus the ball."""
    roles = roles if roles is not None else [1, 2, 3, 4, 5, 1, 2, 3, 4, 5]
    events = events if events is not None else [0] * 10
    ids = ids if ids is not None else [101, 102, 103, 104, 105, 201, 202, 203, 204, 205]
    records = [
        EntityRecord(
            team=1 if k < 5 else 2,
            player_id=ids[k],
            x=float(players_xy[k][0]),
            y=float(players_xy[k][1]),
            z=0.0,
            role=roles[k],
            event=events[k],
        )
        for k in range(10)
    ]
    records.append(
        EntityRecord(team=-1, player_id=-1, x=float(ball_xyz[0]), y=float(ball_xyz[1]),
                     z=float(ball_xyz[2]), role=0, event=0)
    )
    return Frame(game_time=game_time, real_time=real_time, records=tuple(records))


def scripted_owner_game(owner_slots, events=None):
    """FrameSequence whose nearest-owner slot per frame follows a script.

    Players stand on a fixed grid; the ball sits 0.1 ft from the scripted
    slot's player each frame. ``events`` maps frame -> (slot, code).
    """
    base = [(10.0 + 8.0 * k, 10.0) for k in range(5)] + [(10.0 + 8.0 * k, 40.0) for k in range(5)]
    frames = []
    events = events or {}
    for t, slot in enumerate(owner_slots):
        ev = [0] * 10
        if t in events:
            s, code = events[t]
            ev[s] = code
        bx, by = base[slot]
        frames.append(
            make_frame(
                game_time=720.0 - t / 25.0,
                real_time=40.0 * t,
                players_xy=base,
                ball_xyz=(bx + 0.1, by, 2.0),
                events=ev,
            )
        )
    return FrameSequence.from_frames(frames)
