"""Where does a solution with Gaussian-growth data blow up?

Data e^{|x|^2/4} e^{-|x|} has maximal time T = 1.  At that moment the
solution stays finite exactly on the open ball |x| < 2 and blows up
everywhere else.  We print the verdict along a line and watch u(x, t)
approach T at one point on each side.

    python demos/blowup_map.py
"""
import numpy as np

from heatgrowth.blowup import blowup_time, classify_point
from heatgrowth.kernel import evaluate
from heatgrowth.measures import ExpQuadDensity, Modifier

mu = ExpQuadDensity(1, 0.25, modifier=Modifier.exp_decay(1.0))
T = blowup_time(mu)
print(f"maximal time T = {T}")

print("\n   x   verdict     limit at T")
for x in np.linspace(-3, 3, 13):
    c = classify_point(mu, [x])
    lim = "" if c.limit is None else f"{c.limit:.6f}"
    print(f"{x:5.1f}   {c.verdict:10s}  {lim}")

print("\n  T - t      u(1, t)        u(3, t)")
for k in range(1, 6):
    t = T * (1 - 10.0 ** -k)
    a, b = evaluate(mu, [1.0], t).value, evaluate(mu, [3.0], t).value
    print(f"  1e-{k}   {a:12.6f}   {b:12.4g}")
