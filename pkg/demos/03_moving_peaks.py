"""The moving-peaks landscape, raw and wrapped as an optimization target.

A set of smooth peaks wanders around a box: heights and widths jitter
inside clamped ranges, locations take fixed-length steps whose direction
blends fresh noise with the previous heading.  The first part steps the
raw landscape and watches a peak drift.  The second builds a broad-peaked
two-dimensional variant, freezes its change schedule into a time-varying
problem, and runs the optimizer against it.  The standard benchmark
presets are available as ``make_mpb_scenario(1)`` and ``(2)``.

Run:  python demos/03_moving_peaks.py
"""

import numpy as np

from dynabo import Box, EngineConfig, Mode, Problem, PsoConfig, TrainConfig, WarmupConfig, run
from dynabo.problems import MpbConfig, mpb_eval, mpb_init, mpb_step

config = MpbConfig(peaks=5, dims=2, lower=0.0, upper=100.0, shift_severity=3.0, alpha=0.5)
state = mpb_init(config, seed=42)

print("peak 0 wandering (x, y, height):")
for step in range(6):
    loc = state.locations[0]
    print(f"  step {step}: ({loc[0]:6.2f}, {loc[1]:6.2f})  h={state.heights[0]:5.2f}")
    state = mpb_step(state)
print()

# broad peaks (tiny width factors) so a small budget has gradients to follow
wide = MpbConfig(
    peaks=5, dims=2, lower=0.0, upper=50.0,
    height_range=(30.0, 70.0), width_range=(0.005, 0.02),
    shift_severity=1.5, alpha=0.3,
)
states = [mpb_init(wide, seed=7)]
for _ in range(40):
    states.append(mpb_step(states[-1]))


def evaluate(x, t: float) -> float:
    idx = int(np.clip(np.floor(t), 0, len(states) - 1))
    return mpb_eval(states[idx], x)


problem = Problem(
    "broad_peaks", Box(np.zeros(2), np.full(2, 50.0)), (0.0, 40.0), evaluate
)
target = np.mean([min(mpb_eval(s, c) for c in s.locations) for s in states])
print(f"broad 2d landscape: 5 peaks, 40 changes; "
      f"mean value at the tallest peak {target:.1f}")

cfg = EngineConfig(
    mode=Mode.ABO_FIXED,
    budget=18,
    warmup=WarmupConfig(lhd=3),
    fixed_interval=problem.horizon[1] / 22,
    train=TrainConfig(restarts=2, max_iters=50),
    pso=PsoConfig(particles=20, iterations=30),
    seed=7,
)
trace = run(problem, cfg)
values = trace.scored_values
print(f"scored {len(values)} points while the landscape drifted; "
      f"best found {values.min():.1f}")
inc = trace.incumbents[-1]
print(f"final incumbent at ({inc.x[0]:.1f}, {inc.x[1]:.1f}), t={inc.t:.1f}: {inc.y:.1f}")
