# Stochastic moving frames driven by Brownian bridges, projected to the sphere.
import numpy as np

from gibbsframes import frames

cfg = frames.FrameConfig(epsilon=1e-2, h=1e-3, T=10.0, seed=0)
path = frames.simulate_frame_path(cfg, record_every=500)
X = path.rotations[-1]
print("steps", cfg.steps, "h_eff", cfg.h_eff)
print("orthogonality defect at T", frames.rotation_defect(X))

# angles of y = X e3 over many paths
s_grid = [0.3, 1.0, 3.0, 6.0]
th, ph = frames.simulate_angles(cfg, 2000, s_grid)
y1 = np.abs(np.sin(ph) * np.cos(th))
for j, s in enumerate(s_grid):
    # |y1| is uniform on [0, 1] for the uniform sphere
    print(f"s={s:4}  median |y1| {np.median(y1[:, j]):.3f}  mean cos(phi) {np.cos(ph[:, j]).mean():+.3f}")

# strong error of the geometric Euler-Maruyama step
study = frames.strong_error_study(eps=1.0, T=2 * np.pi, paths=40, seed=1)
print("hs", study.hs, "errors", study.errors, "order", round(study.order, 3))
