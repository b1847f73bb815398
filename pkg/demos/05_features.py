"""The 198-entry hand-crafted feature vector for one play.

Run: python demos/05_features.py
"""

from courtraster import GenConfig, extract_features, generate_games
from courtraster.features import feature_names
from courtraster.plays import extract_shot_plays
from courtraster.raster import orient_play

frames, scenes = generate_games(GenConfig(n_plays=5, seed=21))
play = orient_play(extract_shot_plays(frames)[0])
truth = scenes[0]

fv = extract_features(play)
names = feature_names()
print(f"play 0: role {play.shooter_role} shot, {play.outcome}; "
      f"planted p(make) = {truth.probability:.3f}")
print(f"feature vector: {len(fv.values)} finite values\n")

show = [
    "ball_x", "ball_y", "ball_z",
    f"pos_off{play.shooter_role}_x", f"pos_off{play.shooter_role}_y",
    f"hoop_dist_off{play.shooter_role}",
    "defenders_in_cone", "defenders_within_6ft", "players_near_shooter",
    f"poss_time_off{play.shooter_role}",
    f"speed_off{play.shooter_role}_w4",
]
for name in show:
    idx = names.index(name)
    print(f"  [{idx:3d}] {name:24s} = {fv.values[idx]:8.3f}")

print(f"\ntruth check: recorded shot distance {truth.dist_to_hoop:.2f} ft, "
      f"closest defender {truth.min_defender_dist:.2f} ft")
