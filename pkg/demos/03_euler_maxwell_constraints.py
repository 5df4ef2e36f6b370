"""Euler-Maxwell in 2-D TE mode: constraints, stiffness and the magnetic error.

The splitting treats the eps-stiff rotation and relaxation exactly, so the
Gauss law and div B = 0 hold to round-off for any eps, and the step size
is set by the transport CFL rather than by eps.
"""

import numpy as np

from emrelax import (DopingProfile, PeriodicGrid, PressureLaw, RelaxationConfig, integrate,
                     solve_equilibrium, stable_dt, well_prepared_initial_data)
from emrelax.laws import cosine_series

grid = PeriodicGrid(2, 64)
law = PressureLaw()
eq = solve_equilibrium(DopingProfile(1.0, [((1, 0), 0.2)]), law, grid, B_e=[0.3])
n0 = eq.n_e + 1e-2 * cosine_series(grid, 0, [((0, 1), 1.0), ((1, 1), 0.5)])

for eps in (0.5, 0.1, 0.02):
    state = well_prepared_initial_data(eq, n0, law, system="em", velocity="rest")
    dt = stable_dt(grid, law, state.n, state.u, state.B, epsilon=eps)
    traj = integrate(state, eq, law, RelaxationConfig(eps, 5e-4, t_end=0.25))
    G = traj.fields["B"][-1] - traj.B_ref
    print(f"eps={eps:4.2f}  stable dt {dt:.1e}  steps {traj.steps}  "
          f"gauss drift {traj.drift_E:.1e}  div B {traj.drift_B:.1e}  "
          f"|B - B_e| {np.abs(G).max():.2e}")
