"""Moving frames on SO(3): the stochastic frame equation and its deterministic twin.

Frames are stored as ``X = [T; N; B]`` (rows).  The stochastic frame is
driven by two Brownian bridges ``P`` and ``Q`` of period ``2 pi``; its
curvature is ``kappa = sqrt(P^2 + Q^2)`` and its torsion comes from the
regularized phase ``sigma_eps = arctan(P Q / (P^2 + eps^2))``.  The
rotated point is ``y_s = X_s y0``.

The stepper is geometric Euler-Maruyama: each step multiplies ``X`` on the
left by the Rodrigues exponential of a skew increment, so ``X`` stays in
SO(3) to roundoff without any re-orthogonalization.

Step grid: a requested step ``h`` is replaced by ``2 pi / round(2 pi / h)``
so that ``s = 2 pi`` is a grid node and the bridges pin exactly.
"""

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _fourier
from .streams import stream

TWO_PI = 2.0 * np.pi
POLE_TOL = 1e-12
SKEW_TOL = 1e-12
_SERIES_CUTOFF = 1e-8

# the (2,3) torsion generator: G[1,2] = 1, G[2,1] = -1
_E12 = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_G = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])


# ---------------------------------------------------------------- coefficients

def sigma_eps(P, Q, eps):
    """Regularized phase ``arctan(P Q / (P^2 + eps^2))``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    return np.arctan(P * Q / (P * P + eps * eps))


def f_coefficients(P, Q, eps):
    """``(f1, f2, f3)`` in ``d sigma_eps = f1 dP + f2 dQ + f3 ds``.

    ``f1`` and ``f2`` are the partial derivatives of ``sigma_eps``.  ``f3``
    is kept in its closed form, which equals the full Laplacian of
    ``sigma_eps`` (not half of it).
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    e2 = eps * eps
    a = e2 + P * P
    D = a * a + P * P * Q * Q
    f1 = (e2 - P * P) * Q / D
    f2 = P * a / D
    f3 = (
        -2.0 * P**3 * Q * a / D**2
        - 2.0 * P * Q * D / D**2
        - (e2 - P * P) * Q * (2.0 * P * Q * Q + 4.0 * P * a) / D**2
    )
    return f1, f2, f3


@dataclass(frozen=True)
class SdeCoefficients:
    f1: float
    f2: float
    f3: float
    kappa: float
    A: np.ndarray  # Ito drift matrix, with +(f1^2 + f2^2)/2 on the diagonal
    B: np.ndarray
    C: np.ndarray
    A_strat: np.ndarray  # skew drift used by the stepper


def coefficient_matrices(P, Q, eps):
    f1, f2, f3 = (float(v) for v in f_coefficients(P, Q, eps))
    kappa = math.hypot(P, Q)
    corr = 0.5 * (f1 * f1 + f2 * f2)
    A = np.array([[0.0, kappa, 0.0], [-kappa, corr, f3], [0.0, -f3, corr]])
    A_strat = kappa * _E12 + f3 * _G
    return SdeCoefficients(f1, f2, f3, kappa, A, f1 * _G, f2 * _G, A_strat)


# ---------------------------------------------------------------- rotations

def is_skew(M, tol=SKEW_TOL):
    return bool(np.max(np.abs(M + M.T)) <= tol)


def rotation_defect(X):
    """``(||X^T X - I||_F, |det X - 1|)``."""
    X = np.asarray(X, dtype=float)
    return float(np.linalg.norm(X.T @ X - np.eye(3))), float(abs(np.linalg.det(X) - 1.0))


def frobenius_distance(X, Y):
    return float(np.linalg.norm(np.asarray(X) - np.asarray(Y)))


def rodrigues_exp(omega):
    """``exp(Omega)`` of a skew 3x3 matrix in closed form."""
    M = np.asarray(omega, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("skew matrix has non-finite entries")
    if not is_skew(M):
        raise ValueError("matrix is not skew-symmetric")
    M = 0.5 * (M - M.T)
    w = math.sqrt(M[0, 1] ** 2 + M[0, 2] ** 2 + M[1, 2] ** 2)
    if w < _SERIES_CUTOFF:
        s, c = 1.0 - w * w / 6.0, 0.5 - w * w / 24.0
    else:
        s = math.sin(w) / w
        c = 2.0 * math.sin(0.5 * w) ** 2 / (w * w)
    return np.eye(3) + s * M + c * (M @ M)


def random_rotation(rng):
    """Haar-distributed rotation (QR of a Gaussian matrix with sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def lie_increment(coeffs, dW1, dW2, h, d1, d2):
    """``(A_strat - d1 B - d2 C) h + B dW1 + C dW2`` with ``d = W(2 pi) / 2 pi``."""
    return (coeffs.A_strat - d1 * coeffs.B - d2 * coeffs.C) * h + coeffs.B * dW1 + coeffs.C * dW2


def gem_step(X, coeffs, dW1, dW2, h, d1, d2):
    if not all(np.isfinite(v) for v in (dW1, dW2, h, d1, d2)):
        raise ValueError("non-finite increment")
    M = lie_increment(coeffs, dW1, dW2, h, d1, d2)
    if not is_skew(M, 0.0):
        raise AssertionError("g-EM exponent is not skew")
    return rodrigues_exp(M) @ X


# ---------------------------------------------------------------- bridges

def effective_step(h):
    """Largest step ``<= h``-ish that divides ``2 pi`` exactly: ``2 pi / round(2 pi / h)``."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    return TWO_PI / max(1, round(TWO_PI / h))


def pin_steps(h):
    return max(1, round(TWO_PI / h))


def steps_for(T, h_eff):
    return int(math.ceil(T / h_eff - 1e-9))


@dataclass(frozen=True)
class BridgePaths:
    s: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    dP: np.ndarray
    dQ: np.ndarray
    w_pin: tuple  # (W1(2 pi), W2(2 pi))
    h: float


def _bridge_from_increments(dW, h, n_steps, periodic):
    """Bridge values and increments on ``n_steps`` steps from Brownian increments.

    ``dW`` has shape ``(2, n)`` with ``n >= n_pin``; only the first
    ``n_steps`` columns are used unless ``periodic`` is set.
    """
    n_pin = pin_steps(h)
    d = dW[:, :n_pin].sum(axis=1) / TWO_PI
    if periodic:
        base = dW[:, :n_pin] - d[:, None] * h
        reps = -(-n_steps // n_pin)
        inc = np.tile(base, (1, reps))[:, :n_steps]
    else:
        inc = dW[:, :n_steps] - d[:, None] * h
    nodes = np.zeros((2, n_steps + 1))
    np.cumsum(inc, axis=1, out=nodes[:, 1:])
    if n_steps >= n_pin:
        # the pin is exactly zero, not a rounded cumulative sum
        nodes[:, n_pin] = 0.0
        if periodic:
            nodes[:, n_pin::n_pin] = 0.0
    return nodes, inc, d


def _draw_increments(rng, h, n_steps):
    n = max(n_steps, pin_steps(h))
    return rng.standard_normal((2, n)) * math.sqrt(h)


def brownian_bridge_paths(rng, h, T, periodic=False):
    """Two independent bridges ``P(s) = W1(s) - s W1(2 pi)/2 pi`` on ``[0, T]``.

    For ``T > 2 pi`` the formula is applied literally (the paths leave the pin)
    unless ``periodic`` is set, in which case they repeat with period ``2 pi``.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    h = effective_step(h)
    n_steps = steps_for(T, h)
    dW = _draw_increments(rng, h, n_steps)
    nodes, inc, d = _bridge_from_increments(dW, h, n_steps, periodic)
    return BridgePaths(
        s=np.arange(n_steps + 1) * h,
        P=nodes[0], Q=nodes[1], dP=inc[0], dQ=inc[1],
        w_pin=(float(d[0] * TWO_PI), float(d[1] * TWO_PI)),
        h=h,
    )


# ---------------------------------------------------------------- hot loop

@numba.njit(cache=True)
def _torsion_terms(P, Q, e2):
    a = e2 + P * P
    D = a * a + P * P * Q * Q
    D2 = D * D
    f1 = (e2 - P * P) * Q / D
    f2 = P * a / D
    f3 = (-2.0 * P * P * P * Q * a - 2.0 * P * Q * D - (e2 - P * P) * Q * (2.0 * P * Q * Q + 4.0 * P * a)) / D2
    return f1, f2, f3


@numba.njit(cache=True)
def _run_frames(P, Q, dP, dQ, h, eps, record, X0, out):
    """Advance ``X`` along the bridge nodes; store ``X`` at the sorted ``record`` steps.

    The increment is ``[[0,a,0],[-a,0,c],[0,-c,0]]`` with ``a = kappa h`` and
    ``c = f3 h + f1 dP + f2 dQ``; its square is written out by hand.
    """
    e2 = eps * eps
    x00, x01, x02 = X0[0, 0], X0[0, 1], X0[0, 2]
    x10, x11, x12 = X0[1, 0], X0[1, 1], X0[1, 2]
    x20, x21, x22 = X0[2, 0], X0[2, 1], X0[2, 2]
    r = 0
    nrec = record.shape[0]
    last = record[nrec - 1] if nrec > 0 else -1
    for m in range(last + 1):
        while r < nrec and record[r] == m:
            out[r, 0, 0] = x00; out[r, 0, 1] = x01; out[r, 0, 2] = x02
            out[r, 1, 0] = x10; out[r, 1, 1] = x11; out[r, 1, 2] = x12
            out[r, 2, 0] = x20; out[r, 2, 1] = x21; out[r, 2, 2] = x22
            r += 1
        if m == last:
            break
        p = P[m]
        q = Q[m]
        f1, f2, f3 = _torsion_terms(p, q, e2)
        a = math.sqrt(p * p + q * q) * h
        c = f3 * h + f1 * dP[m] + f2 * dQ[m]
        w2 = a * a + c * c
        w = math.sqrt(w2)
        if w < 1e-8:
            sa = 1.0 - w2 / 6.0
            ca = 0.5 - w2 / 24.0
        else:
            sa = math.sin(w) / w
            sh = math.sin(0.5 * w)
            ca = 2.0 * sh * sh / w2
        # R = I + sa M + ca M^2, M^2 = [[-a^2,0,ac],[0,-a^2-c^2,0],[ac,0,-c^2]]
        r00 = 1.0 - ca * a * a
        r01 = sa * a
        r02 = ca * a * c
        r10 = -sa * a
        r11 = 1.0 - ca * w2
        r12 = sa * c
        r20 = ca * a * c
        r21 = -sa * c
        r22 = 1.0 - ca * c * c
        y00 = r00 * x00 + r01 * x10 + r02 * x20
        y01 = r00 * x01 + r01 * x11 + r02 * x21
        y02 = r00 * x02 + r01 * x12 + r02 * x22
        y10 = r10 * x00 + r11 * x10 + r12 * x20
        y11 = r10 * x01 + r11 * x11 + r12 * x21
        y12 = r10 * x02 + r11 * x12 + r12 * x22
        y20 = r20 * x00 + r21 * x10 + r22 * x20
        y21 = r20 * x01 + r21 * x11 + r22 * x21
        y22 = r20 * x02 + r21 * x12 + r22 * x22
        x00, x01, x02 = y00, y01, y02
        x10, x11, x12 = y10, y11, y12
        x20, x21, x22 = y20, y21, y22
    return out


def integrate_frames(P, Q, dP, dQ, h, eps, record_steps, X0=None):
    """Rotations at ``record_steps`` (sorted step indices) along given bridge data."""
    record = np.ascontiguousarray(record_steps, dtype=np.int64)
    if record.size and (np.any(np.diff(record) < 0) or record[0] < 0 or record[-1] > dP.size):
        raise ValueError("record steps must be sorted and within the path")
    X0 = np.eye(3) if X0 is None else np.ascontiguousarray(X0, dtype=float)
    out = np.zeros((record.size, 3, 3))
    if record.size:
        _run_frames(np.ascontiguousarray(P), np.ascontiguousarray(Q), np.ascontiguousarray(dP),
                    np.ascontiguousarray(dQ), float(h), float(eps), record, X0, out)
    return out


def integrate_frames_reference(P, Q, dP, dQ, h, eps, record_steps, X0=None):
    """Same as ``integrate_frames`` through ``gem_step``; slow, for cross-checking."""
    X = np.eye(3) if X0 is None else np.array(X0, dtype=float)
    record = list(record_steps)
    out = []
    m = 0
    for target in record:
        while m < target:
            coeffs = coefficient_matrices(P[m], Q[m], eps)
            # bridge increments already contain the -d h drift
            X = gem_step(X, coeffs, dP[m], dQ[m], h, 0.0, 0.0)
            m += 1
        out.append(X.copy())
    return np.array(out)


# ---------------------------------------------------------------- paths

@dataclass(frozen=True)
class FrameConfig:
    epsilon: float = 1e-2
    h: float = 1e-3
    T: float = 10.0
    seed: int = 0
    y0: tuple = (0.0, 0.0, 1.0)
    periodic_bridge: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        y0 = np.asarray(self.y0, dtype=float)
        if y0.shape != (3,) or abs(np.linalg.norm(y0) - 1.0) > 1e-12:
            raise ValueError(f"y0 must be a unit 3-vector, got {self.y0}")

    @property
    def h_eff(self):
        return effective_step(self.h)

    @property
    def steps(self):
        return steps_for(self.T, self.h_eff)


@dataclass(frozen=True)
class FramePath:
    times: np.ndarray
    rotations: np.ndarray  # (records, 3, 3)
    points: np.ndarray  # (records, 3)
    thetas: np.ndarray
    phis: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def tangents(self):
        return self.rotations[:, 0, :]

    @property
    def binormals(self):
        return self.rotations[:, 2, :]


def spherical_angles(points):
    """Longitude in ``[-pi, pi)`` and colatitude in ``[0, pi]``; ``theta = 0`` at the poles."""
    y = np.asarray(points, dtype=float)
    phi = np.arccos(np.clip(y[..., 2], -1.0, 1.0))
    theta = np.arctan2(y[..., 1], y[..., 0])
    theta = np.where(theta >= np.pi, -np.pi, theta)
    theta = np.where(np.hypot(y[..., 0], y[..., 1]) < POLE_TOL, 0.0, theta)
    return theta, phi


def _record_grid(steps, record_every):
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    grid = np.arange(0, steps + 1, record_every)
    if grid[-1] != steps:
        grid = np.append(grid, steps)
    return grid


def simulate_frame_path(config, rng=None, record_every=1, path_id=0, X0=None):
    """One frame path; the stream defaults to ``(config.seed, "frame", path_id)``."""
    rng = stream(config.seed, "frame", path_id) if rng is None else rng
    h = config.h_eff
    n = config.steps
    dW = _draw_increments(rng, h, n)
    nodes, inc, _ = _bridge_from_increments(dW, h, n, config.periodic_bridge)
    record = _record_grid(n, record_every)
    rots = integrate_frames(nodes[0], nodes[1], inc[0], inc[1], h, config.epsilon, record, X0)
    points = rots @ np.asarray(config.y0, dtype=float)
    theta, phi = spherical_angles(points)
    return FramePath(record * h, rots, points, theta, phi, {"h_eff": h, "path_id": path_id})


def simulate_angles(config, paths, s_grid, start=0):
    """``(thetas, phis)`` of shape ``(paths, len(s_grid))``; path ``i`` uses stream ``start + i``."""
    s_grid = np.asarray(s_grid, dtype=float)
    h = config.h_eff
    steps = np.rint(s_grid / h).astype(np.int64)
    order = np.argsort(steps, kind="stable")
    n = max(int(steps.max()) if steps.size else 0, 1)
    y0 = np.asarray(config.y0, dtype=float)
    thetas = np.zeros((paths, s_grid.size))
    phis = np.zeros((paths, s_grid.size))
    for i in range(paths):
        dW = _draw_increments(stream(config.seed, "frame", start + i), h, n)
        nodes, inc, _ = _bridge_from_increments(dW, h, n, config.periodic_bridge)
        rots = integrate_frames(nodes[0], nodes[1], inc[0], inc[1], h, config.epsilon, steps[order])
        th, ph = spherical_angles(rots @ y0)
        thetas[i, order] = th
        phis[i, order] = ph
    return thetas, phis


def sphere_frame(path):
    """``{y, y', y x y'}`` along a path, with ``y'`` from forward differences."""
    y = path.points
    dy = np.diff(y, axis=0) / np.diff(path.times)[:, None]
    y = y[:-1]
    return y, dy, np.cross(y, dy)


# ---------------------------------------------------------------- convergence

@dataclass(frozen=True)
class StrongErrorStudy:
    hs: np.ndarray
    errors: np.ndarray  # (E sup |y_h - y_ref|^2)^(1/2)
    order: float
    h_ref: float
    paths: int


def strong_error_study(eps, T, paths, seed, base_steps=628, levels=(0, 1, 2), ref_level=5):
    """Strong error of ``y`` against a fine reference with shared noise.

    Level ``l`` uses ``base_steps * 2**l`` steps per ``2 pi``; coarse increments
    are sums of the reference increments.  The error is the supremum over
    the coarse nodes of ``|y_h - y_ref|``.
    """
    n_ref = base_steps * 2**ref_level
    h_ref = TWO_PI / n_ref
    coarse = min(levels)
    n_T = steps_for(T, TWO_PI / (base_steps * 2**coarse)) * 2 ** (ref_level - coarse)
    sq = {l: np.zeros(paths) for l in levels}
    hs = np.array([TWO_PI / (base_steps * 2**l) for l in levels])
    for p in range(paths):
        rng = stream(seed, "strong", p)
        dW_ref = rng.standard_normal((2, max(n_T, n_ref))) * math.sqrt(h_ref)
        ys = {}
        for l in (*levels, ref_level):
            f = 2 ** (ref_level - l)
            h = TWO_PI / (base_steps * 2**l)
            width = dW_ref.shape[1] // f
            dW = dW_ref[:, : width * f].reshape(2, width, f).sum(axis=-1)
            n = n_T // f
            nodes, inc, _ = _bridge_from_increments(dW, h, n, False)
            rots = integrate_frames(nodes[0], nodes[1], inc[0], inc[1], h, eps, np.arange(n + 1))
            ys[l] = rots[:, :, 2]
        for l in levels:
            f = 2 ** (ref_level - l)
            diff = ys[l] - ys[ref_level][::f]
            sq[l][p] = np.max(np.sum(diff * diff, axis=1))
    errors = np.array([math.sqrt(sq[l].mean()) for l in levels])
    order = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    return StrongErrorStudy(hs, errors, order, h_ref, paths)


# ---------------------------------------------------------------- deterministic frames

def curvature_torsion(state, eps, x):
    """``kappa`` and ``tau = f1 P_x + f2 Q_x`` of a truncated field at points ``x``."""
    coeffs = state.coeffs
    k = _fourier.modes(state.n)
    u = _fourier.evaluate_at(coeffs, x)
    ux = _fourier.evaluate_at(1j * k * coeffs, x)
    f1, f2, _ = f_coefficients(u.real, u.imag, eps)
    return np.abs(u), f1 * ux.real + f2 * ux.imag


def serret_frenet_deterministic(state, eps, x_grid, X0=None, curvature=None):
    """Frame along ``x_grid`` by midpoint exponential steps of ``[[0,k,0],[-k,0,t],[0,-t,0]]``.

    ``curvature`` overrides the field with a callable ``x -> (kappa, tau)``.
    """
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("x_grid must be increasing with at least two points")
    mids = 0.5 * (x[1:] + x[:-1])
    if curvature is None:
        kap, tau = curvature_torsion(state, eps, mids)
    else:
        kap, tau = curvature(mids)
        kap = np.broadcast_to(kap, mids.shape)
        tau = np.broadcast_to(tau, mids.shape)
    X = np.eye(3) if X0 is None else np.array(X0, dtype=float)
    rots = np.zeros((x.size, 3, 3))
    rots[0] = X
    for i, dx in enumerate(np.diff(x)):
        X = rodrigues_exp((kap[i] * _E12 + tau[i] * _G) * dx) @ X
        rots[i + 1] = X
    points = rots[:, :, 2]
    theta, phi = spherical_angles(points)
    return FramePath(x, rots, points, theta, phi, {"eps": eps})
