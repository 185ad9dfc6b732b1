"""Record a teleoperation session to a tape and replay it bit for bit.

An operator (scripted here) drives through an obstacle-free world while the
session records every submitted command.  Replaying the tape against a
fresh session reproduces the exact same emitted commands, which is the
property that makes tapes useful for regression tests and incident review.
"""

import math

from safer.config import SaferConfig
from safer.teleop import TeleopSession, load_tape, replay_session, save_tape
from safer.world import WorldModel

cfg = SaferConfig()
world = WorldModel(bounds=(-50.0, -50.0, 50.0, 50.0), spawn=(0.0, 0.0, 0.0))

live = TeleopSession(world, cfg, method="nosafety", seed=5, record=True)
emitted_live = []
for tick in range(100):
    live.submit(0.8, 0.4 * math.sin(tick / 10.0))
    frame = live.step()
    emitted_live.append((frame["emitted"]["v"], frame["emitted"]["omega"]))

save_tape("/tmp/demo_tape.json", live, seed=5, method="nosafety")
print(f"recorded {len(live.tape_entries)} operator commands over 100 ticks")

tape = load_tape("/tmp/demo_tape.json")
frames, _replayed = replay_session(tape, world, cfg, ticks=100)
emitted_replay = [(f["emitted"]["v"], f["emitted"]["omega"]) for f in frames]

identical = emitted_live == emitted_replay
print(f"replayed emitted commands identical to live run: {identical}")
final = frames[-1]["pose"]
print(f"final pose: x={final['x']:.3f} y={final['y']:.3f} theta={final['theta']:.3f}")
