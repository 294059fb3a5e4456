# Brownian loops as random Fourier series, and their Gibbs reweighting.
import numpy as np

from gibbsframes import loops

n = 64
c = loops.sample_wiener_loops(n, 5000, seed=1)
h1, h2, h3 = loops.invariants_batch(c, beta=1.0)

# E[H1] is twice the partial zeta sum
print("mean H1", h1.mean(), "expected", 2 * np.sum(1.0 / np.arange(1, n + 1) ** 2))
print("real loops have no area: max |H2| =", np.abs(h2).max())

# a single loop on a grid
u = loops.evaluate_field(c[0], 8 * n)
print("field range", u.real.min(), u.real.max())

# focusing-sign Gibbs ensemble restricted to the ball H1 <= K
ens = loops.gibbs_ensemble(n, 20000, lam=-1.0, K=20.0, seed=2)
print("acceptance", ens.acceptance, "ess", ens.ess)
bound, t = loops.fourier_bound(20.0)
print("rejection", 1 - ens.acceptance, "<= bound", bound)

# the low modes carry the norm: tail beyond |j| >= 4
for m in (2, 3, 4):
    print(m, loops.tail_frequency(m, 4.0, 200000, seed=3), loops.tail_bound(m, 4.0))
