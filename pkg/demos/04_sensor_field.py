"""Find the hottest spot in a drifting temperature field from sensor logs.

A small network of fixed thermometers samples a room whose warm region
moves over the day.  Between sensors the field is inverse-distance
interpolated; the optimizer hunts the (negated) maximum while the field
drifts underneath it.  The log files here are generated on the fly, with
the same shape a real export would have.

Run:  python demos/04_sensor_field.py
"""

import tempfile
from pathlib import Path

import numpy as np

from dynabo import EngineConfig, Mode, PsoConfig, TrainConfig, WarmupConfig, run
from dynabo.problems.sensor import (
    ingest_sensor_csv,
    make_sensor_problem,
    write_synthetic_fixture,
)

workdir = Path(tempfile.mkdtemp(prefix="sensor_demo_"))
readings = workdir / "readings.csv"
coords = workdir / "coords.csv"
write_synthetic_fixture(readings, coords, n_sensors=6, n_epochs=150, seed=3,
                        corrupt_rows=2)

table = ingest_sensor_csv(readings, coords)
print(f"ingested {len(table.readings)} readings from {len(table.sensors)} sensors")
print(f"  dropped malformed rows: {table.dropped_rows}")

problem = make_sensor_problem(table, first_n_epochs=120)
lo, hi = problem.spatial_bounds.lower, problem.spatial_bounds.upper
print(f"search box: x in [{lo[0]:.1f}, {hi[0]:.1f}], y in [{lo[1]:.1f}, {hi[1]:.1f}]")
print(f"epoch horizon: {problem.horizon[0]:.0f} .. {problem.horizon[1]:.0f}")
print()

cfg = EngineConfig(
    mode=Mode.ABO_FIXED,
    budget=20,
    warmup=WarmupConfig(lhd=3),
    fixed_interval=(problem.horizon[1] - problem.horizon[0]) / 25,
    train=TrainConfig(restarts=2, max_iters=60),
    pso=PsoConfig(particles=16, iterations=25),
    seed=0,
)
trace = run(problem, cfg)

# ground truth for comparison: the hottest single reading in the kept epochs
hottest = max(
    temp
    for epoch in problem.metadata["epochs"]
    for temp in table.readings_at(int(epoch))[1]
)
found = -trace.scored_values.min()
print(f"hottest interpolated temperature found: {found:.2f}")
print(f"hottest raw sensor reading in the horizon: {hottest:.2f}")
inc = trace.incumbents[-1]
print(f"final incumbent at ({inc.x[0]:.1f}, {inc.x[1]:.1f}), epoch ~{inc.t:.0f}")
