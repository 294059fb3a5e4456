"""Truncated Brownian loops, Gibbs reweighting and the NLS invariants.

A loop with ``n`` modes is ``u(theta) = sum_{0<|j|<=n} c_j exp(i j theta)``
with ``c_j = z_j / |j|``.  The default ``kind="real"`` pairs the modes as
``z_{-j} = conj(z_j)``, which makes ``u`` real valued; ``kind="complex"``
draws every ``z_j`` as an independent standard complex Gaussian so that
``u = P + iQ`` has two independent real components.

Integrals are taken against ``dtheta / 2pi``:

* ``H1 = sum |c_j|^2``
* ``H2 = -int P Q' = -1/2 sum j |c_j|^2``
* ``H3 = 1/2 sum j^2 |c_j|^2 + beta/4 int |u|^4``
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _fourier
from .streams import stream

KINDS = ("real", "complex")


class EmptyEnsembleError(RuntimeError):
    """Raised when every proposal falls outside the L2 ball."""


@dataclass(frozen=True)
class LoopSample:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        n = _fourier.order_of(c)
        if n < 1:
            raise ValueError("a loop needs at least one mode")
        if not np.all(np.isfinite(c)):
            raise ValueError("loop coefficients must be finite")
        if c[n] != 0:
            raise ValueError("the zero mode is absent from a loop sample")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return (self.coeffs.size - 1) // 2

    @classmethod
    def from_modes(cls, modes, n=None):
        """Build from a ``{j: c_j}`` mapping."""
        n = n or max(abs(j) for j in modes)
        c = np.zeros(2 * n + 1, dtype=complex)
        for j, value in modes.items():
            if j == 0:
                raise ValueError("mode 0 is not part of a loop sample")
            c[j + n] = value
        return cls(c)

    def as_dict(self):
        return {int(j): complex(v) for j, v in zip(_fourier.modes(self.n), self.coeffs) if j != 0}


@dataclass(frozen=True)
class InvariantReport:
    h1: float
    h2: float
    h3: float
    beta: float


@dataclass(frozen=True)
class GibbsEnsemble:
    samples: tuple
    weights: np.ndarray
    lam: float
    K: float
    acceptance: float
    proposals: int
    ess: float
    kind: str = "real"
    ids: tuple = ()  # proposal index of each retained sample

    @property
    def beta(self):
        return -self.lam

    def coeff_matrix(self):
        return np.stack([s.coeffs for s in self.samples])


def _draw_z(n, rng, kind):
    if kind == "real":
        g = rng.standard_normal((2, n))
        z_pos = (g[0] + 1j * g[1]) / math.sqrt(2.0)
        z_neg = np.conj(z_pos)
    elif kind == "complex":
        g = rng.standard_normal((4, n))
        z_pos = (g[0] + 1j * g[1]) / math.sqrt(2.0)
        z_neg = (g[2] + 1j * g[3]) / math.sqrt(2.0)
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return z_pos, z_neg


def _loop_coeffs(z_pos, z_neg):
    n = z_pos.size
    j = np.arange(1, n + 1)
    c = np.zeros(2 * n + 1, dtype=complex)
    c[n + 1:] = z_pos / j
    c[:n] = (z_neg / j)[::-1]
    return c


def sample_wiener_loop(n, rng, kind="real"):
    if n < 1:
        raise ValueError(f"need n >= 1 modes, got {n}")
    z_pos, z_neg = _draw_z(n, rng, kind)
    return LoopSample(_loop_coeffs(z_pos, z_neg))


def sample_wiener_loops(n, count, seed, kind="real", start=0):
    """Coefficient matrix of ``count`` loops, one stream per sample index."""
    out = np.zeros((count, 2 * n + 1), dtype=complex)
    for row in range(count):
        z_pos, z_neg = _draw_z(n, stream(seed, "loop", start + row), kind)
        out[row] = _loop_coeffs(z_pos, z_neg)
    return out


def evaluate_field(sample, grid_points):
    """``u(2 pi m / M)`` for ``m = 0..M-1``."""
    if grid_points < 1:
        raise ValueError(f"grid needs at least one point, got {grid_points}")
    coeffs = sample.coeffs if isinstance(sample, LoopSample) else sample
    return _fourier.to_grid(coeffs, grid_points)


def quartic_potential(coeffs, m=None):
    """``int |u|^4 dtheta/2pi``, exact for ``m >= 4n + 1``."""
    coeffs = np.asarray(coeffs)
    n = _fourier.order_of(coeffs)
    m = m or _fourier.quartic_grid_size(n)
    u = _fourier.to_grid(coeffs, m)
    return np.mean(np.abs(u) ** 4, axis=-1)


def invariants_batch(coeffs, beta, m=None):
    """``(H1, H2, H3)`` arrays along the last axis of a coefficient array."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = _fourier.order_of(coeffs)
    j = _fourier.modes(n)
    power = np.abs(coeffs) ** 2
    h1 = power.sum(axis=-1)
    # pair +j with -j so a conjugate-symmetric (real) field gives exactly 0
    h2 = -0.5 * (j[n + 1:] * (power[..., n + 1:] - power[..., :n][..., ::-1])).sum(axis=-1)
    h3 = 0.5 * (j**2 * power).sum(axis=-1)
    if beta != 0:
        h3 = h3 + 0.25 * beta * quartic_potential(coeffs, m)
    return h1, h2, h3


def invariants(sample, beta, m=None):
    coeffs = sample.coeffs if isinstance(sample, LoopSample) else sample
    h1, h2, h3 = invariants_batch(coeffs, beta, m)
    return InvariantReport(float(h1), float(h2), float(h3), float(beta))


def area_quadrature(coeffs, m):
    """``-int P Q' dtheta/2pi`` by the trapezoid rule with spectral Q'."""
    u = _fourier.to_grid(coeffs, m)
    return -np.mean(u.real * _fourier.spectral_derivative(u.imag), axis=-1)


def gibbs_ensemble(n, proposals, lam, K, seed, kind="real", m=None):
    """Wiener loops restricted to ``H1 <= K`` and weighted by ``exp(lam V)``.

    ``V = int |u|^4 dtheta/2pi``; ``lam = -beta``.  Weights are self-normalized,
    so the partition function is never needed.
    """
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    coeffs = sample_wiener_loops(n, proposals, seed, kind)
    h1 = (np.abs(coeffs) ** 2).sum(axis=-1)
    keep = h1 <= K
    if not keep.any():
        raise EmptyEnsembleError(f"no proposal out of {proposals} satisfies H1 <= {K}")
    kept = coeffs[keep]
    logw = lam * quartic_potential(kept, m)
    if not np.all(np.isfinite(logw)):
        raise FloatingPointError("log-weights overflowed; reduce |lambda|")
    w = np.exp(logw - logw.max())
    w /= w.sum()
    return GibbsEnsemble(
        samples=tuple(LoopSample(c) for c in kept),
        weights=w,
        lam=float(lam),
        K=float(K),
        acceptance=float(keep.mean()),
        proposals=int(proposals),
        ess=float(1.0 / np.sum(w**2)),
        kind=kind,
        ids=tuple(int(i) for i in np.flatnonzero(keep)),
    )


def fourier_bound(K, t_grid=None):
    """Chernoff bound on ``P[sum_{j != 0} gamma_j^2 / j^2 >= K]``.

    The free parameter ``t`` in ``(0, 1/2)`` is optimized over a grid.
    Returns ``(bound, t_best)``.
    """
    if t_grid is None:
        t_grid = np.linspace(1e-4, 0.5 - 1e-4, 4000)
    t = np.asarray(t_grid, dtype=float)
    x = np.pi * np.sqrt(2.0 * t)
    values = np.exp(-t * K) * x / np.sin(x)
    best = int(np.argmin(values))
    return float(values[best]), float(t[best])


def tail_bound(m, K):
    """``exp(m - K m^2 / 4)`` bounding ``P[sum_{|j|>=m} gamma_j^2/j^2 >= K]``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    return math.exp(m - K * m * m / 4.0)


def tail_frequency(m, K, trials, seed, n_max=256, chunk=20_000):
    """Empirical frequency of ``sum_{m<=|j|<=n_max} gamma_j^2/j^2 >= K``.

    ``gamma_j^2 + gamma_{-j}^2`` is drawn directly as ``2 Exp(1)``.
    """
    inv_j2 = 1.0 / np.arange(m, n_max + 1) ** 2
    hits = 0
    done = 0
    block = 0
    while done < trials:
        size = min(chunk, trials - done)
        rng = stream(seed, "tail", block)
        s = 2.0 * rng.standard_exponential((size, inv_j2.size)) @ inv_j2
        hits += int(np.count_nonzero(s >= K))
        done += size
        block += 1
    return hits / trials


def truncated_moment(k, bound):
    """``E[gamma^(2k); gamma^2 <= bound]`` for a standard normal."""
    return 2.0**k * special.gamma(k + 0.5) / math.sqrt(math.pi) * special.gammainc(k + 0.5, bound / 2.0)


def truncated_moment_approx(k, j, K):
    """Heuristic closed form for ``E[gamma^(2k); gamma^2 <= K j^2]``.

    No error bound is known; used for diagnostics only.
    """
    a = j * j * K / 2.0
    full = math.factorial(2 * k) / (2**k * math.factorial(k))
    return full * math.exp(-(a ** (k - 0.5)) * math.exp(-a) / special.gamma(k + 0.5))


def pairing_statistic(sample, h_prime):
    """``int u h' dtheta/2pi = sum_j c_j d_{-j}`` for ``h' = sum d_j e^{ij theta}``."""
    coeffs = sample.coeffs if isinstance(sample, LoopSample) else np.asarray(sample)
    d = np.asarray(h_prime, dtype=complex)
    if np.sum(np.abs(d) ** 2) > 1.0 + 1e-12:
        raise ValueError("h' must satisfy sum |h'_j|^2 <= 1")
    n = _fourier.order_of(coeffs)
    nh = _fourier.order_of(d)
    r = min(n, nh)
    c = coeffs[..., n - r:n + r + 1]
    d_rev = d[nh - r:nh + r + 1][::-1]
    return (c * d_rev).sum(axis=-1)
