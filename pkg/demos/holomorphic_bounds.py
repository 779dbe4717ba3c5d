"""How small can a holomorphic function get on a segment?

For g holomorphic on the unit disk with |g(0)| = 1 and |g| <= D, the maximum
of |g| over [theta, (1+theta)/2] is bounded below by D^(-C/(1-theta)).
Random polynomials give an empirical worst case and a calibrated constant.
"""

from multifreq.sweep import MommBoundInput, empirical_momm, momm_constant

for D in (2.0, 4.0, 8.0):
    res = empirical_momm(theta=0.5, D=D, trials=200, degree=10, seed=0)
    bound = momm_constant(MommBoundInput(1.0, D, 0.5, res.calibrated_C_tilde))
    print(f"D = {D:3.0f}: worst ratio {res.worst_ratio:.4f}, "
          f"C_tilde {res.calibrated_C_tilde:.4f}, bound {bound:.4f}")
