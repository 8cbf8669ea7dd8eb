"""Bounded data whose trace at the origin never settles.

A sum of annuli at rapidly growing scales makes u(0, t) visit 1, 2, 1, 2
at times t_k, within a bound that halves at every step.  We also splice
the oscillating tail onto constant data outside a ball of radius R: on a
compact window the spliced solution approaches the original as R grows.

    python demos/oscillations.py
"""
import numpy as np

from heatgrowth.longtime import build_oscillating_data, shadow_sweep, trace_at_origin
from heatgrowth.measures import constant

mu, spec = build_oscillating_data([1, 2, 1, 2])
values = trace_at_origin(mu, spec.t)
print(" k  target    t_k          u(0, t_k)   bound")
for k, (b, t, v, e) in enumerate(zip(spec.b, spec.t, values, spec.error_bounds), start=1):
    print(f"{k:2d}  {b:5.1f}   {t:10.3e}   {v:9.6f}   {e:.4f}")

osc, _ = build_oscillating_data([1, 2])
R, d, hist = shadow_sweep(constant(1), osc, np.linspace(-1, 1, 5), np.linspace(0.2, 1, 5), 0.01, R_max=64)
print("\nsplice radius sweep:", ", ".join(f"R={r:g}: {x:.2e}" for r, x in hist))
print(f"first radius within 0.01: {R}")
