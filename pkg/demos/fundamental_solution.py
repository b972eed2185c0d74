"""Approximate u_1 for p = 3, N = 1, f = s^1.5 ln(s+1) and watch its mass drain.

The run starts from the Barenblatt profile at a small time and compares the
absorbing solution with the pure-diffusion one it must stay below.
"""
from plap import PowerLog
from plap.exact import eval_barenblatt, fundamental_params, support_radius
from plap.nonlinearity import no_absorption
from plap.solver import RadialGrid, SolveConfig, dirac_initial, discrete_mass, solve

p, N, k, eps = 3.0, 1, 1.0, 1e-3
params = fundamental_params(p, N, k)
grid = RadialGrid(N, 1.25 * support_radius(params, 1.0), 400)
u0 = dirac_initial(params, grid, eps)
times = (0.01, 0.1, 0.5, 1.0)
cfg = SolveConfig(h=0.01, T=1.0, growth=0.05, record_times=times)

absorbing = solve(u0, PowerLog(1.5, 1.0), p, cfg)
free = solve(u0, no_absorption(), p, cfg)
print(f"{'t':>6} {'mass':>10} {'absorbed':>10} {'u(0,t)':>10} {'v(0,t)':>10} {'Barenblatt':>10}")
for a, b in zip(absorbing.snapshots, free.snapshots):
    exact = float(eval_barenblatt(params, 0.0, a.t + eps))
    print(
        f"{a.t:6.2f} {discrete_mass(a):10.6f} {absorbing.absorbed_at(a.t):10.6f}"
        f" {a.values[0]:10.6f} {b.values[0]:10.6f} {exact:10.6f}"
    )
