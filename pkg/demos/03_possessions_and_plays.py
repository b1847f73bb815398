"""Possession segmentation and 5-second play extraction.

Run: python demos/03_possessions_and_plays.py
"""

import numpy as np

from courtraster import GenConfig, generate_games, nearest_owner, segment_possessions
from courtraster.plays import extract_shot_plays
from courtraster.raster import orient_play

frames, scenes = generate_games(GenConfig(n_plays=40, seed=11))

owner0 = nearest_owner(frames[0])
print(f"first frame: player {owner0} is nearest the ball")

possessions = segment_possessions(frames)
print(f"{len(possessions)} possessions over {len(frames)} frames")
for p in possessions[:5]:
    frames_held = p.end_frame - p.start_frame + 1
    print(f"  team {p.offense_team}: frames {p.start_frame}..{p.end_frame} ({frames_held / 25:.1f}s)")

plays = [orient_play(p) for p in extract_shot_plays(frames, possessions)]
print(f"\nextracted {len(plays)} plays of exactly 125 frames each")
recovered = sum(
    p.shooter_role == s.shooter_role and p.outcome == s.outcome
    for p, s in zip(plays, scenes)
)
print(f"shooter role and outcome recovered for {recovered}/{len(scenes)} plays")

labels = np.array([p.label for p in plays])
print(f"ten-class labels present: {sorted(set(labels.tolist()))}")
