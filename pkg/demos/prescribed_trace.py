"""Solutions with a prescribed value at x = 0.

Any real-analytic gamma(t) is the origin trace of the even series
sum_k gamma^(k)(t) x^(2k)/(2k)!.  For gamma = e^t that is e^t cosh x.
The initial data of gamma = 1 - 2t + t^2 changes sign, even though
gamma itself is nonnegative.

    python demos/prescribed_trace.py
"""
import math

from heatgrowth.trace import (
    build_trace_solution,
    eval_trace_solution,
    initial_data_of_trace,
    verify_trace,
)

exp_series = build_trace_solution((1.0,), C=2, tau=2, T=2, periodic=True)
print("   x     t     series          e^t cosh x")
for x, t in [(0, 0.5), (1, 0), (2, 0.5), (3, 1)]:
    v = eval_trace_solution(exp_series, x, t)
    print(f"{x:4d} {t:5.1f}  {v.value:.12f}  {math.exp(t) * math.cosh(x):.12f}")
print("max heat residual:", verify_trace(exp_series, [0, 0.5, 1], [-3, -1, 0, 1, 3]))

d = initial_data_of_trace(build_trace_solution([1, -2, 2], C=2, tau=1))
print("\nu0 coefficients of x^0, x^2, x^4:", d.coeffs)
print(f"u0(2) = {d(2.0):.6f}; smallest sampled value {d.min_value:.4f} at x = {d.argmin}")
