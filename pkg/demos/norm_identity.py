"""The weighted L1 norm of the solution is a norm of the data.

For nonnegative data, ||u(t)||_{L1_delta} = ||mu||_{M_{delta/(1+4 delta t)}},
so the norm at the index eps/(1 - 4 eps t) is conserved.  We compare the
direct quadrature of the left side with the closed form on the right, then
ask for a weight too weak for u(2), which grows like exp(|x|^2 / 2).

    python demos/norm_identity.py
"""
from heatgrowth.errors import IndexTooSmall
from heatgrowth.kernel import l1eps_norm_of_solution
from heatgrowth.measures import ExpQuadDensity, meps_norm

mu = ExpQuadDensity(1, 0.1)
for t, delta in [(0.5, 0.2), (1.0, 0.5), (2.0, 0.6)]:
    direct = l1eps_norm_of_solution(mu, t, delta, method="quadrature")
    data = meps_norm(mu, delta / (1 + 4 * delta * t))
    print(f"t={t:4.1f} delta={delta:4.2f}   solution {direct:.14f}   data {data:.14f}")

try:
    l1eps_norm_of_solution(mu, 2.0, 0.05, method="quadrature")
except IndexTooSmall as exc:
    print("delta=0.05 at t=2:", exc)
