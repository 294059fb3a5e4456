# Split-step evolution of the truncated cubic NLS from a loop sample.
import numpy as np

from gibbsframes import loops, nls

c = loops.sample_wiener_loops(32, 1, seed=4, kind="complex")[0]
s = nls.NlsState(c, 0.0, beta=1.0)
print("initial invariants", s.invariants())

for h in (1e-3, 5e-4):
    traj, rep = nls.evolve(s, h, int(1.0 / h), record_every=int(0.25 / h))
    print(f"h={h:g}  H1 rel drift {rep.h1_relative:.1e}  H2 drift {rep.h2:.1e}  H3 drift {rep.h3:.2e}")
    print("   times", [round(t.t, 3) for t in traj])

# plane wave: only the phase moves, at rate A^2
pw = nls.NlsState.plane_wave(0.7, 4)
out, _ = nls.evolve(pw, 1e-2, 100, record_every=100)
print("plane wave phase", np.angle(out[-1].coeffs[4]), "exact", -0.49)

# curvature, torsion rate and the transport term along x
f = nls.time_derivative_fields(s, eps=0.05)
print("kappa mean", f.kappa.mean(), "sigma_t mean", f.sigma_t.mean())
