# Wasserstein distances of frame angles to the uniform sphere, and the tests around them.
import numpy as np

from gibbsframes import frames, transport

F1, G1 = transport.reference_cdfs()
cfg = frames.FrameConfig(epsilon=1e-2, h=1e-3, T=6.0, seed=5)
s_grid = [0.3, 0.9, 1.5, 3.0, 6.0]
th, ph = frames.simulate_angles(cfg, 4000, s_grid)

print("s     W1 theta  W1 phi   bound   chi2 p   KS phi p")
for j, s in enumerate(s_grid):
    S = transport.SphereSampleSet(th[:, j], ph[:, j], s)
    b = transport.sphere_w1_bound(S)
    wt = transport.w1_cdf(transport.EmpiricalCdf(th[:, j]), F1)
    wp = transport.w1_cdf(transport.EmpiricalCdf(ph[:, j]), G1)
    c = transport.chi2_independence(S)
    k = transport.ks_test(ph[:, j], G1)
    print(f"{s:<5} {wt:.4f}    {wp:.4f}   {b.total:.4f}  {c.p_value:.1e}  {k.p_value:.1e}")

# sampling floor at this N
print("fluctuation bound theta", transport.fluctuation_bound(F1, 4000), "phi", transport.fluctuation_bound(G1, 4000))

# concentration constant fitted on independent replicas at s = 6
reps = [transport.w1_cdf(transport.EmpiricalCdf(frames.simulate_angles(
    frames.FrameConfig(epsilon=1e-2, h=1e-2, T=6.0, seed=100 + r), 200, [6.0])[0][:, 0]), F1) for r in range(100)]
print("fitted alpha", transport.concentration_probe(reps, 200).alpha)
