"""Evaluate the baseline safety methods on the tight-doorway scenario.

Runs a handful of seeded trials for the braking-only baseline and for the
full dynamic-window planner, then prints the aggregated CSV rows the
evaluation harness produces.  Methods that need a trained policy (rl,
safer) additionally take a checkpoint; see the README.
"""

import json

from safer.config import SaferConfig
from safer.harness import run_trials, write_csv
from safer.scenarios import load_scenario

cfg = SaferConfig()
scenario = load_scenario("scenarios/tight_doorway.json")

rows = []
for method in ("aeb", "dwa"):
    row, episodes = run_trials(method, scenario, n_trials=5, seed=42, cfg=cfg)
    rows.append(row)
    print(f"{method}: {json.dumps(row)}")

write_csv("/tmp/demo_results.csv", rows)
print("\nCSV written to /tmp/demo_results.csv")
