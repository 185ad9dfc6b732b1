"""Walk the safety gate through its three stages.

A robot drives straight at a wall under a full-throttle operator command.
While the wall is far away the gate passes the command through (Maintain).
Once the expanded look-ahead predicts trouble it hands the cycle to the
corrective planner (Avoid).  If even the planner cannot find a safe motion
it emits maximum braking (Brake, sigma = 1).
"""

from safer.config import SaferConfig
from safer.control import SafetyController, Simulator
from safer.kinematics import ControlCommand, RobotState
from safer.world import Segment, WorldModel

cfg = SaferConfig()
world = WorldModel(
    segments=(Segment(3.0, -5.0, 3.0, 5.0),),  # a wall 3 m ahead
    bounds=(-10.0, -10.0, 10.0, 10.0),
    spawn=(0.0, 0.0, 0.0),
)
sim = Simulator(world, cfg, spawn=RobotState(0.0, 0.0, 0.0, 0.0, 0.0))
controller = SafetyController("dwa", cfg)
full_throttle = ControlCommand(cfg.limits.v_max, 0.0, kind="upstream-reference")

print(f"{'tick':>4}  {'x':>6}  {'v':>5}  {'wall gap':>8}  stage")
last_stage = None
for tick in range(120):
    scan = sim.sense()
    record = controller.decide(sim.state, scan, full_throttle)
    gap = 3.0 - sim.state.x
    if record.stage != last_stage or tick % 20 == 0:
        print(
            f"{tick:>4}  {sim.state.x:6.2f}  {sim.state.v:5.2f}"
            f"  {gap:8.2f}  {record.stage}"
        )
        last_stage = record.stage
    collided = sim.apply(record.emitted)
    if collided:
        print("contact!  (the gate should prevent ever reaching this line)")
        break
    if abs(sim.state.v) < 1e-9 and tick > 40:
        print(f"\nrobot stopped {gap:.2f} m short of the wall; no contact.")
        break
