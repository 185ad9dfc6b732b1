"""A miniature deterministic training run, entirely in one process.

Two simulated workers drive the corridor course and stream experience to
an in-process trainer through loopback transports; the trainer interleaves
gradient updates and broadcasts new policy weights.  Because everything is
single-threaded and seeded, rerunning this script reproduces the same
final weights bit for bit.  A full-quality run takes tens of thousands of
steps; this one is deliberately tiny so it finishes in under a minute.
"""

from safer.config import SaferConfig
from safer.scenarios import load_scenario
from safer.server import TrainerCore
from safer.worker import LoopbackHub, WorkerSession, run_lockstep

cfg = SaferConfig()
cfg.sac.hidden = (32, 32)
cfg.sac.batch_size = 64
cfg.schedule.min_buffer_before_training = 256
cfg.schedule.updates_per_ingested_batch = 2
cfg.schedule.publish_every = 50

scenario = load_scenario("scenarios/training_course.json")
core = TrainerCore(cfg, seed=0)
hub = LoopbackHub(core)
workers = [
    WorkerSession(f"worker-{i}", scenario, cfg, hub.transport(),
                  seed=i, episodes=10**6, ship_every=16)
    for i in range(2)
]

events = run_lockstep(core, workers, total_steps=3000)
print(f"env steps: {sum(w.steps for w in workers)}")
print(f"gradient updates: {core.step}")
print(f"policy versions published: {core.version}")
print(f"replay buffer size: {len(core.buffer)}")
print(f"last losses: { {k: round(v, 4) for k, v in core.last_losses.items()} }")

core.checkpoint("/tmp/demo_checkpoint.json")
print("checkpoint written to /tmp/demo_checkpoint.json")
