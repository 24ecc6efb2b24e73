"""Closed-form gains for the one-tap controller.

For eigenratio 0.113 and tau = 0.1 the optimal rates are about 0.893
without memory and 0.779 with one tap. The tap weight theta0 depends on the
ratio only, while eps1 and eps2 scale with 1 / lambdaN.
"""

import numpy as np

from memconsensus import ControlParams, Spectrum, convergence_rate, gains_m1, r0_star

tau = 0.1
ratio = 0.113

for lambdaN in (1.0, 4.0, 5.917):
    lambda2 = ratio * lambdaN
    rep = gains_m1(lambda2, lambdaN, tau)
    p = rep.params
    print(
        f"lambdaN={lambdaN:<6} r0*={r0_star(lambda2, lambdaN):.4f} r1*={rep.r_star:.4f} "
        f"eps1={p.eps1:.3f} eps2={p.eps2:.3f} theta=({p.theta[0]:.3f}, {p.theta[1]:.3f})"
    )

# The optimum balances the slowest and the fastest mode. Check it on a
# spectrum with interior eigenvalues too: they never set the rate.
lam = np.linspace(0.6, 5.917, 6)
s = Spectrum.from_eigenvalues(np.r_[0.0, lam])
rep = gains_m1(s.lambda2, s.lambdaN, tau)
print(f"six-eigenvalue spectrum: rate {convergence_rate(rep.params, s):.6f}, r1* {rep.r_star:.6f}")

# Nudge the gains a little in any direction and the rate only gets worse.
for scale in (0.95, 1.05):
    q = ControlParams.one_tap(tau, rep.params.eps1 * scale, rep.params.eps2, rep.params.theta[0])
    print(f"eps1 x {scale}: rate {convergence_rate(q, s):.6f}")
