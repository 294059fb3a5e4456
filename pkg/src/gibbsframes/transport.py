"""One-dimensional transport distances, goodness of fit and concentration diagnostics.

All Wasserstein distances are on the real line: ``W1 = int |F - G|`` and
``W2^2 = int_0^1 (F^-1 - G^-1)^2``.  Distances between samples on the
sphere are bounded by one-dimensional pieces in longitude and colatitude.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, stats

TWO_PI = 2.0 * np.pi
KS_TERMS = 20


# ---------------------------------------------------------------- CDFs

class EmpiricalCdf:
    """Right-continuous step function ``F_N(t) = #{x_i <= t} / N``."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        self.sorted_samples = x

    @property
    def n(self):
        return self.sorted_samples.size

    def __call__(self, t):
        return np.searchsorted(self.sorted_samples, t, side="right") / self.n

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.ceil(u * self.n).astype(int) - 1, 0, self.n - 1)
        return self.sorted_samples[idx]


@dataclass(frozen=True)
class ReferenceCdf:
    name: str
    cdf: Callable
    antiderivative: Callable  # any primitive of the CDF
    quantile: Callable
    support: tuple

    def __call__(self, t):
        return self.cdf(t)


def _longitude_cdf(t):
    return np.clip((np.asarray(t, dtype=float) + np.pi) / TWO_PI, 0.0, 1.0)


def _colatitude_cdf(t):
    t = np.clip(np.asarray(t, dtype=float), 0.0, np.pi)
    return 0.5 * (1.0 - np.cos(t))


LONGITUDE = ReferenceCdf(
    "longitude",
    _longitude_cdf,
    lambda t: (np.asarray(t, dtype=float) + np.pi) ** 2 / (4.0 * np.pi),
    lambda u: TWO_PI * np.asarray(u, dtype=float) - np.pi,
    (-np.pi, np.pi),
)
COLATITUDE = ReferenceCdf(
    "colatitude",
    _colatitude_cdf,
    lambda t: 0.5 * (np.asarray(t, dtype=float) - np.sin(t)),
    lambda u: np.arccos(np.clip(1.0 - 2.0 * np.asarray(u, dtype=float), -1.0, 1.0)),
    (0.0, np.pi),
)


def reference_cdfs():
    """Longitude and colatitude CDFs of the uniform measure on the sphere."""
    return LONGITUDE, COLATITUDE


def uniform_reference(a, b):
    a, b = float(a), float(b)
    L = b - a
    return ReferenceCdf(
        f"uniform[{a:g},{b:g}]",
        lambda t: np.clip((np.asarray(t, dtype=float) - a) / L, 0.0, 1.0),
        lambda t: (np.asarray(t, dtype=float) - a) ** 2 / (2.0 * L),
        lambda u: a + L * np.asarray(u, dtype=float),
        (a, b),
    )


def normal_reference(loc=0.0, scale=1.0):
    dist = stats.norm(loc, scale)
    return ReferenceCdf(
        f"normal({loc:g},{scale:g})",
        dist.cdf,
        lambda t: (np.asarray(t) - loc) * dist.cdf(t) + scale**2 * dist.pdf(t),
        dist.ppf,
        (-np.inf, np.inf),
    )


# ---------------------------------------------------------------- Wasserstein

def _w1_two_steps(F, G):
    pts = np.concatenate([F.sorted_samples, G.sorted_samples])
    pts.sort(kind="mergesort")
    widths = np.diff(pts)
    left = pts[:-1]
    return float(np.sum(np.abs(F(left) - G(left)) * widths))


def _w1_step_vs_reference(F, G, support):
    lo, hi = support
    x = F.sorted_samples
    if x[0] < lo or x[-1] > hi:
        raise ValueError(f"samples fall outside the support {support}")
    # infinite tails: F_N is 0 left of x[0] and 1 right of x[-1]
    tails = 0.0
    if not np.isfinite(lo):
        tails += integrate.quad(lambda t: float(G(t)), -np.inf, x[0])[0]
        lo = x[0]
    if not np.isfinite(hi):
        tails += integrate.quad(lambda t: 1.0 - float(G(t)), x[-1], np.inf)[0]
        hi = x[-1]
    knots = np.concatenate([[lo], x, [hi]])
    a, b = knots[:-1], knots[1:]
    level = np.arange(F.n + 1) / F.n  # F_N on [a_i, b_i)
    # G crosses the level at t*, clipped to the piece
    t_star = np.clip(G.quantile(level), a, b)
    prim = G.antiderivative
    below = level * (t_star - a) - (prim(t_star) - prim(a))
    above = (prim(b) - prim(t_star)) - level * (b - t_star)
    return float(np.sum(below + above) + tails)


def w1_cdf(F, G, support=None):
    """``int |F - G|`` over the support.

    Exact when either side is an empirical CDF and the other is empirical
    or a ``ReferenceCdf``; adaptive quadrature otherwise.
    """
    if isinstance(F, EmpiricalCdf) and isinstance(G, EmpiricalCdf):
        return _w1_two_steps(F, G)
    if isinstance(G, EmpiricalCdf) and not isinstance(F, EmpiricalCdf):
        F, G = G, F
    if isinstance(F, EmpiricalCdf) and isinstance(G, ReferenceCdf):
        return _w1_step_vs_reference(F, G, support or G.support)
    if support is None:
        raise ValueError("a support interval is required for general CDFs")
    lo, hi = support
    brk = None
    if isinstance(F, EmpiricalCdf):
        brk = F.sorted_samples[(F.sorted_samples > lo) & (F.sorted_samples < hi)][:500]
    val, _ = integrate.quad(lambda t: abs(float(F(t)) - float(G(t))), lo, hi, limit=500, points=brk)
    return float(val)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def w2_cdf(F, G):
    """``(int_0^1 (F^-1(u) - G^-1(u))^2 du)^(1/2)`` by quantile coupling."""
    if isinstance(G, EmpiricalCdf) and not isinstance(F, EmpiricalCdf):
        F, G = G, F
    if not isinstance(F, EmpiricalCdf):
        raise ValueError("at least one side must be an empirical CDF")
    if isinstance(G, EmpiricalCdf):
        u = np.union1d(np.arange(F.n + 1) / F.n, np.arange(G.n + 1) / G.n)
        mid = 0.5 * (u[1:] + u[:-1])
        return float(math.sqrt(np.sum((F.quantile(mid) - G.quantile(mid)) ** 2 * np.diff(u))))
    # F^-1 is constant on each ((i-1)/N, i/N]; integrate the smooth side with Gauss-Legendre
    edges = np.arange(F.n + 1) / F.n
    half = 0.5 / F.n
    centers = 0.5 * (edges[1:] + edges[:-1])
    u = centers[:, None] + half * _GL_NODES[None, :]
    diff = F.sorted_samples[:, None] - G.quantile(u)
    pieces = np.sum(half * _GL_WEIGHTS * diff**2, axis=1)
    # quantiles of bounded references are often singular at u = 0 and 1
    x = F.sorted_samples
    for i in {0, F.n - 1}:
        pieces[i] = integrate.quad(lambda v: (x[i] - float(G.quantile(v))) ** 2, edges[i], edges[i + 1])[0]
    return float(math.sqrt(np.sum(pieces)))


# ---------------------------------------------------------------- sphere

@dataclass(frozen=True)
class SphereSampleSet:
    thetas: np.ndarray
    phis: np.ndarray
    s: float = float("nan")

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float).ravel()
        ph = np.asarray(self.phis, dtype=float).ravel()
        if th.shape != ph.shape:
            raise ValueError("thetas and phis must have equal lengths")
        if np.any(th < -np.pi) or np.any(th >= np.pi):
            raise ValueError("longitudes must lie in [-pi, pi)")
        if np.any(ph < 0) or np.any(ph > np.pi):
            raise ValueError("colatitudes must lie in [0, pi]")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "phis", ph)

    def __len__(self):
        return self.thetas.size


class SphereBound(NamedTuple):
    total: float
    theta_term: float
    phi_term: float
    conditional_term: float
    strips: int


def sphere_w1_bound(samples, strips=None):
    """Longitude, colatitude and conditional terms bounding W1 to the uniform sphere.

    The conditional term ``int int |G(phi | theta) - G(phi)| dF1 dphi`` is
    estimated on ``ceil(N^(1/3))`` equal longitude strips; empty strips add 0.
    """
    N = len(samples)
    if N < 100:
        raise ValueError(f"need at least 100 samples, got {N}")
    F1, G1 = reference_cdfs()
    theta_term = w1_cdf(EmpiricalCdf(samples.thetas), F1)
    G_all = EmpiricalCdf(samples.phis)
    phi_term = w1_cdf(G_all, G1)
    strips = strips or int(math.ceil(N ** (1.0 / 3.0) - 1e-9))
    which = np.minimum(((samples.thetas + np.pi) / TWO_PI * strips).astype(int), strips - 1)
    cond = 0.0
    for k in range(strips):
        sel = samples.phis[which == k]
        if sel.size:
            cond += w1_cdf(EmpiricalCdf(sel), G_all) / strips
    return SphereBound(theta_term + phi_term + cond, theta_term, phi_term, cond, strips)


# ---------------------------------------------------------------- fluctuation

def fluctuation_bound(F, N, max_doublings=60):
    """``N^(-1/2) int sqrt(F (1 - F))``, bounding ``E W1(F_N, F)``."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if isinstance(F, EmpiricalCdf):
        x = F.sorted_samples
        level = np.arange(1, F.n) / F.n
        return float(np.sum(np.sqrt(level * (1 - level)) * np.diff(x)) / math.sqrt(N))
    integrand = lambda t: math.sqrt(max(float(F(t)) * (1.0 - float(F(t))), 0.0))
    lo, hi = F.support
    if np.isfinite(lo) and np.isfinite(hi):
        val, _ = integrate.quad(integrand, lo, hi, limit=200)
        return float(val / math.sqrt(N))
    # grow the window by doubling; each new shell is integrated on its own
    center = float(F.quantile(0.5))
    with warnings.catch_warnings():
        # far shells are ~0 and trip quad's roundoff diagnostics
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _shell_integral(integrand, lo, hi, center, max_doublings) / math.sqrt(N)


def _shell_integral(integrand, lo, hi, center, max_doublings):
    total, _ = integrate.quad(integrand, max(lo, center - 1.0), min(hi, center + 1.0))
    R = 1.0
    for _ in range(max_doublings):
        shell = 0.0
        if center - R > lo:
            shell += integrate.quad(integrand, max(lo, center - 2 * R), center - R)[0]
        if center + R < hi:
            shell += integrate.quad(integrand, center + R, min(hi, center + 2 * R))[0]
        total += shell
        if shell <= 1e-12 * max(total, 1.0):
            return float(total)
        R *= 2.0
    raise ValueError("the fluctuation integral diverges (heavy tails)")


# ---------------------------------------------------------------- KS

def kolmogorov_sf(lam, terms=KS_TERMS):
    """``P[K > lam]`` for the limiting Kolmogorov distribution."""
    lam = float(lam)
    if lam <= 0:
        return 1.0
    k = np.arange(1, terms + 1)
    if lam >= 1.0:
        return float(np.clip(2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam)), 0.0, 1.0))
    # Jacobi form converges fast for small lam
    cdf = math.sqrt(TWO_PI) / lam * np.sum(np.exp(-((2 * k - 1) ** 2) * np.pi**2 / (8.0 * lam * lam)))
    return float(np.clip(1.0 - cdf, 0.0, 1.0))


def ks_statistic(samples, F0):
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    F = np.asarray(F0(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


class KsResult(NamedTuple):
    statistic: float
    p_value: float
    n: int


def ks_test(samples, F0):
    n = np.size(samples)
    if n < 10:
        raise ValueError(f"KS test needs at least 10 samples, got {n}")
    D = ks_statistic(samples, F0)
    return KsResult(D, kolmogorov_sf(math.sqrt(n) * D), n)


# ---------------------------------------------------------------- independence

class Chi2Result(NamedTuple):
    statistic: float
    p_value: float
    dof: int
    shape: tuple


def _merge_smallest(table, axis):
    """Merge the line with the smallest marginal into its smaller neighbour."""
    marg = table.sum(axis=1 - axis)
    i = int(np.argmin(marg))
    if i == 0:
        j = 1
    elif i == marg.size - 1:
        j = i - 1
    else:
        j = i - 1 if marg[i - 1] <= marg[i + 1] else i + 1
    lines = np.moveaxis(table, axis, 0).copy()
    lines[min(i, j)] += lines[max(i, j)]
    lines = np.delete(lines, max(i, j), axis=0)
    return np.moveaxis(lines, 0, axis)


def chi2_independence(samples, bins_theta=8, bins_phi=8, min_expected=5.0):
    """Pearson chi-square test that longitude and colatitude are independent.

    Bins have equal probability under the uniform sphere; adjacent bins are
    merged until every expected count reaches ``min_expected``.
    """
    F1, G1 = reference_cdfs()
    te = F1.quantile(np.linspace(0, 1, bins_theta + 1))
    pe = G1.quantile(np.linspace(0, 1, bins_phi + 1))
    te[-1], pe[-1] = np.inf, np.inf
    table, _, _ = np.histogram2d(samples.thetas, samples.phis, bins=[te, pe])
    while True:
        if table.shape[0] < 2 or table.shape[1] < 2:
            raise ValueError("degenerate binning: fewer than two classes in a margin")
        N = table.sum()
        expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / N
        if expected.min() >= min_expected:
            break
        rows, cols = table.sum(axis=1), table.sum(axis=0)
        table = _merge_smallest(table, 0 if rows.min() * cols.max() <= cols.min() * rows.max() else 1)
    stat = float(np.sum((table - expected) ** 2 / expected))
    dof = (table.shape[0] - 1) * (table.shape[1] - 1)
    return Chi2Result(stat, float(stats.chi2.sf(stat, dof)), dof, table.shape)


# ---------------------------------------------------------------- concentration

class ConcentrationProbe(NamedTuple):
    eps: np.ndarray
    frequency: np.ndarray
    alpha: float
    bound: np.ndarray  # 2 exp(-N alpha eps^2 / 2) at the fitted alpha


def concentration_probe(replica_w1, N, eps_grid=None):
    """Exceedance frequencies of ``|W - mean W|`` and the largest majorizing ``alpha``."""
    w = np.asarray(replica_w1, dtype=float)
    if w.size < 100:
        raise ValueError(f"need at least 100 replicas, got {w.size}")
    dev = np.abs(w - w.mean())
    dev[dev <= 1e-12 * max(abs(w.mean()), 1e-300)] = 0.0  # rounding in the mean
    if eps_grid is None:
        top = dev.max()
        eps_grid = np.linspace(top / 50, top, 50) if top > 0 else np.array([1.0])
    eps = np.asarray(eps_grid, dtype=float)
    freq = np.array([np.mean(dev > e) for e in eps])
    hit = freq > 0
    if not hit.any():
        alpha = math.inf
        bound = np.zeros_like(eps)
    else:
        alpha = float(np.min(-2.0 * np.log(freq[hit] / 2.0) / (N * eps[hit] ** 2)))
        bound = np.minimum(2.0 * np.exp(-N * alpha * eps**2 / 2.0), 2.0)
    return ConcentrationProbe(eps, freq, alpha, bound)


def holder_estimate(values, p=2.0, period=TWO_PI, min_lag=1, max_lag=None):
    """Log-log slope of the mean ``L^p`` increment against dyadic lags.

    ``values`` holds one or more fields sampled on a uniform periodic grid
    (last axis).  Lags run over ``min_lag * 2^i`` grid cells up to ``max_lag``
    (default: an eighth of the grid).
    """
    u = np.atleast_2d(np.asarray(values))
    M = u.shape[-1]
    if M < 256:
        raise ValueError(f"need at least 256 grid points, got {M}")
    if np.allclose(u, u[..., :1]):
        raise ValueError("field is constant; no increments to fit")
    max_lag = max_lag or M // 8
    lags = []
    k = min_lag
    while k <= max_lag:
        lags.append(k)
        k *= 2
    if len(lags) < 2:
        raise ValueError("need at least two lags")
    norms = [np.mean(np.mean(np.abs(np.roll(u, -k, axis=-1) - u) ** p, axis=-1) ** (1.0 / p)) for k in lags]
    x = np.log(np.array(lags) * period / M)
    return float(np.polyfit(x, np.log(norms), 1)[0])
