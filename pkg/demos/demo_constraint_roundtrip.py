"""Conformal method end to end: data -> solve -> initial data -> residuals.

Defocusing physics data on the flat torus (the only regime the exact
conformal reduction supports there: with psi constant the scalar
coefficient h vanishes, and 2 V - ((n-1)/n) tau^2 < 0 keeps the integral
identity satisfiable).  The reconstructed initial data set is fed to the
original Hamiltonian and momentum constraints; the defects shrink at
spectral rate under grid refinement, which is the parametrization's
"if and only if" made measurable.
"""

import numpy as np

from lichlab.conformal import (
    PhysicsData,
    Potential,
    classify,
    coefficients,
    constraint_residuals,
    normalize,
    reconstruct,
)
from lichlab.geometry import ScalarField, Torus
from lichlab.harness import scalar_from_recipe, tensor_from_recipe
from lichlab.solver import SolveOptions, solve_system


def physics_data(g):
    return PhysicsData(
        psi=ScalarField.constant(g, 1.0),
        pi=scalar_from_recipe(g, "lorentz(amp=0.02, c=1.05, axis=1, offset=1.0)"),
        tau=scalar_from_recipe(g, "lorentz(amp=0.015, c=1.05, axis=0, offset=1.0)"),
        sigma=tensor_from_recipe(g, "constant_tensor(xy=0.1)"),
        potential=Potential.constant(0.0))


print("grid      sup u     |W|_max    hamiltonian   momentum")
prev = None
for N in (16, 32, 64):
    g = Torus(3, N)
    D = physics_data(g)
    if N == 16:
        _, B = coefficients(D)
        print(f"regime: {classify(B)} (B in [{B.values.min():.3f}, "
              f"{B.values.max():.3f}])\n")
    C = normalize(D)
    sol = solve_system(C, SolveOptions(coercivity_check="weak",
                                       tol_residual=1e-11, max_outer=100))
    ids = reconstruct(sol.u, sol.W, D)
    ham, mom = constraint_residuals(ids, D.potential)
    line = (f"{N:>3}^3   {np.max(sol.u.values):.6f}  "
            f"{np.max(np.abs(sol.W.values)):.3e}  {ham:.3e}    {mom:.3e}")
    if prev:
        line += f"   (x{prev[0] / ham:.0f}, x{prev[1] / mom:.0f})"
    print(line)
    prev = (ham, mom)

print("\nboth defects fall much faster than the factor-3-per-doubling bar;")
print("the conformal pair really does parametrize constraint solutions.")
