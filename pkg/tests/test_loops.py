import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gibbsframes import loops as L
from gibbsframes.streams import stream


def direct_field(coeffs, theta):
    n = (len(coeffs) - 1) // 2
    return sum(c * np.exp(1j * j * theta) for j, c in zip(range(-n, n + 1), coeffs))


def brute_quartic(coeffs):
    """``int |u|^4`` as the sum over ``j1 + j2 = j3 + j4`` of ``c c conj(c) conj(c)``."""
    n = (len(coeffs) - 1) // 2
    idx = range(-n, n + 1)
    c = dict(zip(idx, coeffs))
    total = 0.0
    for j1, j2, j3 in itertools.product(idx, repeat=3):
        j4 = j1 + j2 - j3
        if -n <= j4 <= n:
            total += c[j1] * c[j2] * np.conj(c[j3]) * np.conj(c[j4])
    return total.real


coeff_arrays = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                       min_size=2 * n + 1, max_size=2 * n + 1)
).map(lambda v: np.array(v))


def test_mode_statistics():
    rng = np.random.default_rng(5)
    z_pos, z_neg = L._draw_z(10**6, rng, "real")
    assert np.allclose(z_neg, np.conj(z_pos))
    p = np.abs(z_pos) ** 2
    assert abs(p.mean() - 1) < 0.01
    assert abs(p.var() - 1) < 0.02
    assert abs(z_pos.mean()) < 3 * math.sqrt(1 / 10**6) * 1.5


def test_coefficients_mean_zero():
    c = L.sample_wiener_loops(4, 20000, seed=1)
    sd = np.sqrt(np.mean(np.abs(c) ** 2, axis=0) / c.shape[0])
    assert np.all(np.abs(c.mean(axis=0)) <= 3 * np.sqrt(2) * sd + 1e-15)


def test_samples_are_real_fields():
    s = L.sample_wiener_loop(10, stream(3, "t"))
    assert s.coeffs[10] == 0
    assert np.max(np.abs(L.evaluate_field(s, 64).imag)) < 1e-12


def test_mean_h1():
    n = 64
    c = L.sample_wiener_loops(n, 20000, seed=2)
    h1 = L.invariants_batch(c, 0.0)[0]
    exact = 2 * sum(1 / j**2 for j in range(1, n + 1))
    assert exact == pytest.approx(3.2588610028, abs=1e-9)
    assert abs(h1.mean() - exact) < 4 * h1.std() / math.sqrt(h1.size)


def test_streams_are_index_keyed():
    a = L.sample_wiener_loops(5, 6, seed=9)
    b = L.sample_wiener_loops(5, 3, seed=9, start=3)
    assert np.array_equal(a[3:], b)


def test_loop_sample_validation():
    with pytest.raises(ValueError):
        L.LoopSample(np.array([0, 1, 0], dtype=complex))
    with pytest.raises(ValueError):
        L.LoopSample.from_modes({0: 1.0})
    with pytest.raises(ValueError):
        L.LoopSample(np.array([np.nan, 0, 1], dtype=complex))
    s = L.LoopSample.from_modes({1: 2.0, -2: 1j})
    assert s.as_dict() == {-2: 1j, -1: 0j, 1: 2 + 0j, 2: 0j}


def test_field_examples():
    one = L.LoopSample.from_modes({1: 1.0})
    assert np.allclose(L.evaluate_field(one, 4), [1, 1j, -1, -1j], atol=1e-15)
    zero = L.LoopSample(np.zeros(5, dtype=complex))
    assert np.all(L.evaluate_field(zero, 8) == 0)
    with pytest.raises(ValueError):
        L.evaluate_field(one, 0)


@settings(max_examples=40, deadline=None)
@given(coeff_arrays, st.integers(0, 5))
def test_grid_matches_direct_sum(c, extra):
    n = (c.size - 1) // 2
    m = 2 * n + 1 + extra
    theta = 2 * np.pi * np.arange(m) / m
    assert np.allclose(L.evaluate_field(c, m), direct_field(c, theta), atol=1e-10)
    # fewer points than modes is still exact (aliasing is folded)
    m_small = max(1, n)
    theta = 2 * np.pi * np.arange(m_small) / m_small
    assert np.allclose(L.evaluate_field(c, m_small), direct_field(c, theta), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(coeff_arrays)
def test_parseval(c):
    n = (c.size - 1) // 2
    u = L.evaluate_field(c, 2 * n + 1)
    assert np.mean(np.abs(u) ** 2) == pytest.approx(np.sum(np.abs(c) ** 2), abs=1e-12 * max(1, np.sum(np.abs(c) ** 2)))


@settings(max_examples=25, deadline=None)
@given(coeff_arrays)
def test_quartic_potential_matches_convolution(c):
    assert L.quartic_potential(c) == pytest.approx(brute_quartic(c), rel=1e-10, abs=1e-10)


def test_single_mode_invariants():
    r = L.invariants(L.LoopSample.from_modes({1: 1.0}), 0.0)
    assert (r.h1, r.h3) == (1.0, 0.5)
    assert r.h2 == -0.5  # -int P Q' for P = cos, Q = sin


def test_real_sample_has_zero_area():
    s = L.sample_wiener_loop(16, stream(4, "t"))
    assert L.invariants(s, 1.0).h2 == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 40))
def test_area_matches_quadrature(seed, n):
    c = L.sample_wiener_loops(n, 1, seed, kind="complex")[0]
    h2 = L.invariants(c, 0.0).h2
    assert h2 == pytest.approx(L.area_quadrature(c, 2 * n + 1), abs=1e-10)
    assert h2 == pytest.approx(L.area_quadrature(c, 4 * n + 7), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 40), st.floats(0.0, 5.0))
def test_half_area_bound_holds(seed, n, beta):
    # sharp form of the area inequality: H2^2 <= H1 H3 / 2 for beta >= 0
    c = L.sample_wiener_loops(n, 1, seed, kind="complex")[0]
    r = L.invariants(c, beta)
    assert r.h2**2 <= r.h1 * r.h3 / 2 * (1 + 1e-12)


def test_quarter_area_bound_fails_for_single_mode():
    # H2^2 = 1/4 while H1 H3 / 4 = (1/2 + beta/4) / 4: the quarter constant is too strong
    r = L.invariants(L.LoopSample.from_modes({1: 1.0}), 1.0)
    assert r.h2**2 > r.h1 * r.h3 / 4


def test_quarter_area_bound_on_real_loops():
    c = L.sample_wiener_loops(64, 500, seed=3)
    h1, h2, h3 = L.invariants_batch(c, 1.0)
    assert np.all(h2**2 <= h1 * h3 / 4)


def test_free_ensemble_uniform():
    ens = L.gibbs_ensemble(8, 50, 0.0, math.inf, seed=1)
    assert np.allclose(ens.weights, 1 / 50)
    assert ens.acceptance == 1.0 and ens.ess == pytest.approx(50)
    assert ens.ids == tuple(range(50))


def test_ensemble_ball_and_weights():
    ens = L.gibbs_ensemble(16, 400, -1.0, 3.0, seed=2)
    h1 = L.invariants_batch(ens.coeff_matrix(), 0.0)[0]
    assert np.all(h1 <= 3.0)
    assert ens.weights.sum() == pytest.approx(1.0)
    assert np.all(ens.weights >= 0)
    v = L.quartic_potential(ens.coeff_matrix())
    w = np.exp(-v)
    assert np.allclose(ens.weights, w / w.sum())
    assert 0 < ens.acceptance < 1


def test_empty_ensemble():
    with pytest.raises(L.EmptyEnsembleError):
        L.gibbs_ensemble(16, 50, 0.0, 1e-6, seed=1)
    with pytest.raises(ValueError):
        L.gibbs_ensemble(16, 50, 0.0, 0.0, seed=1)


def test_acceptance_matches_constraint_probability():
    K = 4.0
    ens = L.gibbs_ensemble(64, 20000, 0.0, K, seed=3)
    # independent oracle: gamma_j^2 + gamma_-j^2 = chi-square(2)
    rng = np.random.default_rng(77)
    s = rng.chisquare(2, size=(200000, 64)) @ (1.0 / np.arange(1, 65) ** 2)
    p = np.mean(s <= K)
    se = math.sqrt(p * (1 - p) / 20000)
    assert abs(ens.acceptance - p) < 4 * se
    bound, t = L.fourier_bound(K)
    assert 0 < t < 0.5
    assert 1 - ens.acceptance <= bound


def test_tail_bound_values():
    assert L.tail_bound(4, 4) == pytest.approx(math.exp(-12))
    assert L.tail_bound(1, 1e-12) >= 1
    with pytest.raises(ValueError):
        L.tail_bound(0, 1)


def test_tail_frequency_small_case():
    # m = 1, K = 2: compare with an independent direct draw
    f = L.tail_frequency(1, 2.0, 200000, seed=1, n_max=64)
    rng = np.random.default_rng(2)
    s = rng.chisquare(2, size=(200000, 64)) @ (1.0 / np.arange(1, 65) ** 2)
    assert abs(f - np.mean(s >= 2.0)) < 0.01


def test_sign_flip_symmetry():
    n, count = 8, 10000
    a = L.sample_wiener_loops(n, count, seed=11, kind="complex")
    b = L.sample_wiener_loops(n, count, seed=12, kind="complex")
    # negate the real parts of the odd positive modes: flips a fixed subset of the gammas
    flip = b.copy()
    sel = np.arange(n + 1, 2 * n + 1, 2)
    flip[:, sel] = -flip[:, sel].real + 1j * flip[:, sel].imag
    for stat in (lambda c: L.invariants_batch(c, 0.0)[0], L.quartic_potential, lambda c: L.evaluate_field(c, 4)[:, 0].real):
        assert stats.ks_2samp(stat(a), stat(flip)).pvalue > 0.001


def test_truncated_moment():
    g2 = np.random.default_rng(4).standard_normal(10**6) ** 2
    for k, bound in [(1, 1.0), (2, 3.0), (3, 10.0)]:
        mc = np.mean(np.where(g2 <= bound, g2**k, 0.0))
        assert L.truncated_moment(k, bound) == pytest.approx(mc, rel=0.03)
    assert L.truncated_moment(2, 1e9) == pytest.approx(3.0)
    assert math.isfinite(L.truncated_moment_approx(2, 1, 4.0))


def test_pairing_statistic():
    s = L.sample_wiener_loop(6, stream(8, "t"))
    assert L.pairing_statistic(s, np.zeros(13)) == 0
    d = np.zeros(3, dtype=complex)
    d[0] = 1.0  # d_{-1} = 1 picks out c_1
    assert L.pairing_statistic(s, d) == pytest.approx(s.coeffs[7])
    with pytest.raises(ValueError):
        L.pairing_statistic(s, np.ones(3))


def test_pairing_statistic_is_sub_gaussian():
    c = L.sample_wiener_loops(8, 100000, seed=21)
    d = np.zeros(17, dtype=complex)
    d[[7, 9]] = 1 / math.sqrt(2)
    x = L.pairing_statistic(c, d).real
    sigma2 = x.var()
    for lam in (0.5, 1.0, 2.0):
        assert np.mean(np.exp(lam * (x - x.mean()))) <= math.exp(lam**2 * sigma2 / 2) * 1.05
    assert stats.kurtosis(x) == pytest.approx(0.0, abs=0.1)
