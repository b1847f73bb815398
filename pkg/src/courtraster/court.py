"""Court geometry and capture constants shared across the pipeline."""

COURT_LENGTH_FT = 94.0
COURT_WIDTH_FT = 50.0

# Hoop centers, 5.25 ft in from each baseline along the court's long axis.
HOOP_LOW = (5.25, 25.0)
HOOP_HIGH = (88.75, 25.0)

FPS = 25
QUARTER_SECONDS = 720.0

# Frames of opposing-team ball proximity that end a possession (~0.5 s).
POSSESSION_SWITCH_FRAMES = 12

# Fixed play length: 5 seconds at 25 fps, shot frame included as the last frame.
PLAY_FRAMES = 125
