"""Why one frequency is not enough, and two are.

On the unit disk with a = eps = 1 and boundary value 1 the solution is
J0(omega r) / J0(omega). Each frequency above the first Bessel zero carries
a nodal circle where the field vanishes, so no single measurement can be
non-vanishing everywhere. Two frequencies whose nodal circles sit at
different radii cover each other's blind spot.
"""

import numpy as np

from multifreq.constraints import ZetaMap, certify_complete
from multifreq.fem import CoefficientSet, Illumination, solve_helmholtz
from multifreq.mesh import generate_disk, interior_region
from multifreq.spectrum import AdmissibleRange, estimate_spectrum_covering
from multifreq.sweep import Problem, find_min_n

J01 = 2.4048255576957724

mesh = generate_disk(5)
coeffs = CoefficientSet.build(mesh)
region = interior_region(mesh, 0.1)
zeta = ZetaMap("zeta_modulus")

# nodal circles at r = 0.7 and r = 0.5
w1, w2 = J01 / 0.7, J01 / 0.5
for w in (w1, w2):
    u = solve_helmholtz(mesh, coeffs, w, Illumination.one())
    rep = certify_complete(zeta, {w: [u]}, region, mesh)
    print(f"omega = {w:.4f}: min |u| on the region = {rep.achieved_C:.4f}")

# let the sweep find the smallest uniform grid that works
spec = estimate_spectrum_covering(mesh, coeffs, w2, 4)
problem = Problem(mesh, coeffs, [Illumination.one()], zeta, region, spectrum=spec)
n, rep = find_min_n(problem, AdmissibleRange(w1, w2), C_target=0.1)
print(f"K^({n}) = {rep.frequencies_used} certifies C = {rep.achieved_C:.4f}")

# each frequency wins around the nodal circle of the other
r = np.hypot(*mesh.vertices[region.vertices].T)
for w in rep.frequencies_used:
    sel = rep.cover == w
    print(f"  omega = {w:.4f} wins on {sel.sum()} vertices, r in [{r[sel].min():.2f}, {r[sel].max():.2f}]")
