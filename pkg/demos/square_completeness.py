"""Three illuminations {1, x1, x2} on the unit square.

At omega = 0 the solutions are close to 1, x1, x2 and the determinant map is
bounded below. Away from zero frequency the fields oscillate, but a uniform
grid of frequencies still certifies completeness, both without absorption
(where the grid must avoid the Dirichlet spectrum) and with sigma = 1.
"""

import numpy as np

from multifreq.constraints import ZetaMap, certify_complete
from multifreq.fem import CoefficientSet, solve_helmholtz, standard_illuminations
from multifreq.mesh import generate_rectangle, interior_region
from multifreq.spectrum import AdmissibleRange, admissible_subinterval, estimate_spectrum_covering
from multifreq.sweep import Problem, find_min_n

mesh = generate_rectangle(32, 32)
bump = {"type": "bump", "center": [0.5, 0.5], "radius": 0.25, "amplitude": 0.3, "base": 1.0}
region = interior_region(mesh, 0.15)
zeta = ZetaMap("zeta_det")

static = CoefficientSet.build(mesh, a=bump)
fields = [solve_helmholtz(mesh, static, 0.0, p) for p in standard_illuminations()]
C0 = certify_complete(zeta, {0.0: fields}, region, mesh).achieved_C
print(f"omega = 0: C0 = {C0:.4f}")

for sigma in (0.0, 1.0):
    coeffs = CoefficientSet.build(mesh, a=bump, sigma=sigma)
    rng = AdmissibleRange(1.0, 4.0)
    spec = None
    if coeffs.lossless:
        spec = estimate_spectrum_covering(mesh, coeffs, rng.M, 10)
        rng = admissible_subinterval(rng, spec)
        print(f"first eigenvalues {np.round(spec.eigenvalues[:3], 3)}; "
              f"range shrunk to [{rng.k_min:.3f}, {rng.k_max:.3f}]")
    problem = Problem(mesh, coeffs, standard_illuminations(), zeta, region, spectrum=spec)
    n, rep = find_min_n(problem, rng, C0 / 2)
    print(f"sigma = {sigma}: n = {n}, C = {rep.achieved_C:.4f}, complete = {rep.complete}")
