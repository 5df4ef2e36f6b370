"""Steady states for a cosine doping profile.

Solve for the equilibrium density, check it against the linearised answer
for a tiny doping ripple, and look at how the pressure law changes the
profile.
"""

import numpy as np

from emrelax import DopingProfile, PeriodicGrid, PressureLaw, equilibrium_residuals, solve_equilibrium

grid = PeriodicGrid(1, 128)
x = grid.coords[0]

# A ripple of amplitude a in b gives n_e ~ 1 + a/2 cos x for the isothermal law
# (the enthalpy is log n, so the linearised operator is -lap + 1 acting on mode 1).
ripple = DopingProfile(1.0, [((1,), 1e-3)])
eq = solve_equilibrium(ripple, PressureLaw(), grid)
n_lin = 1 + 5e-4 * np.cos(x)
print("relative error vs linearised:", grid.l2_norm(eq.n_e - n_lin) / grid.l2_norm(n_lin))

# Larger doping contrast, several pressure laws.
prof = DopingProfile(1.0, [((1,), 0.4), ((3,), 0.1)])
for gamma in (1.0, 1.4, 2.0, 3.0):
    law = PressureLaw(1.0, gamma)
    eq = solve_equilibrium(prof, law, grid)
    res = equilibrium_residuals(eq, eq.b, law)
    print(f"gamma={gamma:3.1f}  min n_e {eq.n_e.min():.4f}  max n_e {eq.n_e.max():.4f}  "
          f"max residual {max(res):.1e}")

# Stiffer pressure flattens the density: more of the doping contrast is
# balanced by the electric field, so max|E_e| grows with gamma.
for gamma in (1.0, 3.0):
    eq = solve_equilibrium(prof, PressureLaw(1.0, gamma), grid)
    print(f"gamma={gamma:3.1f}  max|E_e| {np.abs(eq.E_e).max():.4f}")
