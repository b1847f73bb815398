"""Parse, validate, and round-trip the tracking CSV format.

Run: python demos/01_tracking_io.py
"""

from courtraster import parse_tracking, validate, write_tracking

SAMPLE = """\
game_time,real_time,team,player,x,y,z,role,event
693,514200,1,101,21.5,33.6,0.0,1,0
693,514200,1,102,24.1,14.1,0.0,2,1
693,514200,1,103,5.4,9.6,0.0,3,0
693,514200,1,104,3.9,45.6,0.0,4,0
693,514200,1,105,10.4,3.5,0.0,5,0
693,514200,2,201,13.6,31.6,0.0,1,0
693,514200,2,202,20.4,15.4,0.0,2,0
693,514200,2,203,7.7,13.3,0.0,3,0
693,514200,2,204,6.0,38.6,0.0,4,0
693,514200,2,205,13.9,13.2,0.0,5,0
693,514200,-1,-1,25.1,14.0,3.4,0,0
693,514200,-2,1,16.9,49.2,0.0,0,0
693,514200,-2,3,78.9,0.5,0.0,0,0
693,514200,-2,2,26.0,3.1,0.0,0,0
"""

frames = parse_tracking(SAMPLE.encode())
frame = frames[0]
print(f"parsed {len(frames)} frame(s); clock {frame.game_time:.0f}s left in the quarter")
print(f"  players: {len(frame.players)}, referees: {len(frame.referees)}")
ball = frame.ball
print(f"  ball at ({ball.x}, {ball.y}) height {ball.z} ft")
shooters = [r for r in frame.players if r.event in (1, 2)]
print(f"  shot event on player {shooters[0].player_id} (role {shooters[0].role})")

report = validate(frames)
print(f"validation: {len(report.violations)} violations in {report.frame_count} frames")

round_tripped = parse_tracking(write_tracking(frames))
back = round_tripped[0].ball
print(f"round trip: ball position error {abs(back.x - ball.x):.2e} ft")
