"""Workload generation walkthrough: rate profiles, arrival modes, trace files.

Run:  python3 demos/01_workload_shapes.py
"""

import numpy as np

from elastidebt import (
    RateProfile,
    Segment,
    default_profile,
    generate_trace,
    parse_trace,
    serialize_trace,
)

# --- 1. a constant-rate profile in both arrival modes -----------------------

flat = RateProfile(segments=[Segment(0.0, 60.0, base_rate=2.0)], arrival_mode="deterministic")
trace = generate_trace(flat, 10.0, seed=0)
print("deterministic 2 req/s for 10 s ->", len(trace), "arrivals")
print("  first five:", [r.arrival_time for r in trace.requests[:5]])

flat.arrival_mode = "poisson"
for seed in (1, 2):
    trace = generate_trace(flat, 10.0, seed=seed)
    print(f"poisson     2 req/s for 10 s, seed {seed} -> {len(trace)} arrivals")

# --- 2. the bundled six-hour diurnal profile with its surge ------------------

prof = default_profile()
print("\ndefault profile rate curve (req/s):")
for hour in range(7):
    t = hour * 3600.0
    print(f"  t = {hour}h  rate = {prof.rate_at(min(t, 21599.0)):5.1f}")

trace = generate_trace(prof, 21600.0, seed=42)
times = np.array([r.arrival_time for r in trace.requests])
print(f"full trace: {len(trace)} requests, mean rate {len(trace) / 21600:.1f} req/s")
per_hour = np.histogram(times, bins=6, range=(0, 21600))[0]
print("  arrivals per hour:", per_hour.tolist())

# --- 3. trace files round-trip exactly ---------------------------------------

text = serialize_trace(generate_trace(flat, 5.0, seed=7))
print("\nserialized trace snippet:")
print("  " + "\n  ".join(text.splitlines()[:3]))
back = parse_trace(text)
print("round-trip equal:", back.requests == parse_trace(text).requests)
