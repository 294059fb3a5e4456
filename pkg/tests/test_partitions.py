import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gibbsframes import partitions as P


def brute_partitions(k):
    """Every multiset of positive parts summing to k, by exhaustive search."""
    found = set()
    for length in range(1, k + 1):
        for combo in itertools.product(range(1, k + 1), repeat=length):
            if sum(combo) == k:
                found.add(tuple(sorted(combo, reverse=True)))
    return found


def brute_decompositions(rows):
    k = sum(rows)
    out = set()
    for left in itertools.product(*[range(2 * r + 1) for r in rows]):
        if sum(left) == k:
            out.add((left, tuple(2 * r - l for r, l in zip(rows, left))))
    return out


def brute_jk(k, alphas):
    """Dense J(k) entries from the Gaussian moment of each index multiset."""
    n = len(alphas)
    entries = {}
    for bra in itertools.combinations_with_replacement(range(n), k):
        for ket in itertools.combinations_with_replacement(range(n), k):
            counts = {}
            for j in bra + ket:
                counts[j] = counts.get(j, 0) + 1
            if all(c % 2 == 0 for c in counts.values()):
                val = 1.0
                for j, c in counts.items():
                    val *= alphas[j] ** (c // 2) * math.prod(range(1, c, 2))  # (c-1)!!
                entries[(bra, ket)] = val
    return entries


def test_small_partitions():
    assert [p.rows for p in P.enumerate_partitions(1)] == [(1,)]
    assert [p.rows for p in P.enumerate_partitions(2)] == [(2,), (1, 1)]
    assert len(P.enumerate_partitions(4)) == 5


@pytest.mark.parametrize("k", range(1, 9))
def test_partitions_match_brute_force(k):
    got = [p.rows for p in P.enumerate_partitions(k)]
    assert len(got) == len(set(got))
    assert set(got) == brute_partitions(k)
    assert got == sorted(got, reverse=True)


def test_partition_counts_known_sequence():
    # p(k) for k = 1..20
    expected = [1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490, 627]
    assert [len(P.enumerate_partitions(k)) for k in range(1, 21)] == expected


@pytest.mark.parametrize("k", [0, 21, -3])
def test_partition_bounds(k):
    with pytest.raises(ValueError):
        P.enumerate_partitions(k)


def test_partition_rejects_bad_rows():
    with pytest.raises(ValueError):
        P.Partition((1, 2))
    with pytest.raises(ValueError):
        P.Partition((2, 0))


def test_gaussian_moments():
    assert P.gaussian_even_moment(0) == 1
    assert P.gaussian_even_moment(2) == 3
    assert P.gaussian_even_moment(3) == 15
    assert isinstance(P.gaussian_even_moment(30), int)
    with pytest.raises(OverflowError):
        P.gaussian_even_moment(31)
    with pytest.raises(ValueError):
        P.gaussian_even_moment(-1)


def test_sixth_moment_monte_carlo():
    g = np.random.default_rng(11).standard_normal(10**7)
    assert abs(np.mean(g**6) - P.gaussian_even_moment(3)) / 15 < 0.01


@given(st.integers(0, 29))
def test_moment_ratio(m):
    assert P.gaussian_even_moment(m + 1) == (2 * m + 1) * P.gaussian_even_moment(m)


def _pairs(decs):
    return {(d.left, d.right) for d in decs}


def test_decomposition_examples():
    assert _pairs(P.enumerate_even_decompositions(P.Partition((1,)))) == {((1,), (1,))}
    assert _pairs(P.enumerate_even_decompositions(P.Partition((2,)))) == {((2,), (2,))}
    assert _pairs(P.enumerate_even_decompositions(P.Partition((1, 1)))) == {
        ((1, 1), (1, 1)), ((2, 0), (0, 2)), ((0, 2), (2, 0))
    }


@pytest.mark.parametrize("k", range(1, 7))
def test_decompositions_match_brute_force(k):
    for p in P.enumerate_partitions(k):
        decs = P.enumerate_even_decompositions(p)
        got = [(d.left, d.right) for d in decs]
        assert len(got) == len(set(got))
        assert set(got) == brute_decompositions(p.rows)
        assert [d.left for d in decs] == sorted((d.left for d in decs), reverse=True)


def test_zero_row_padding():
    p = P.Partition((2, 1))
    base = P.enumerate_even_decompositions(p)
    padded = P.enumerate_even_decompositions(p, max_zero_rows=3)
    assert len(base) == len(padded)
    for d in padded:
        assert d.left[-3:] == (0, 0, 0) and d.right[-3:] == (0, 0, 0)
    with pytest.raises(ValueError):
        P.enumerate_even_decompositions(p, max_zero_rows=4)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8).flatmap(lambda k: st.sampled_from(P.enumerate_partitions(k))))
def test_decomposition_invariants(p):
    for d in P.enumerate_even_decompositions(p):
        assert len(d.left) == len(d.right) == len(p.rows)
        assert sum(d.left) == sum(d.right) == p.k
        for l, r, k in zip(d.left, d.right, p.rows):
            assert l + r == 2 * k
            assert l % 2 == r % 2
        odd_l, odd_r = d.odd_rows()
        assert odd_l == odd_r


def test_jk_k1_is_covariance():
    terms = P.assemble_jk(1, [2.0, 5.0])
    assert {(t.bra_indices, t.ket_indices): t.coefficient for t in terms} == {((0,), (0,)): 2.0, ((1,), (1,)): 5.0}
    assert sum(t.coefficient for t in terms if t.is_diagonal) == 7.0


def test_jk_k2_displayed_terms():
    alphas = [0.5, 1.5, 2.0]
    table = {(t.bra_indices, t.ket_indices): t.coefficient for t in P.assemble_jk(2, alphas)}
    for j, a in enumerate(alphas):
        assert table[((j, j), (j, j))] == 3 * a * a
    for j, m in itertools.permutations(range(3), 2):
        assert table[((j, j), (m, m))] == pytest.approx(alphas[j] * alphas[m])
        lo, hi = min(j, m), max(j, m)
        assert table[((lo, hi), (lo, hi))] == pytest.approx(alphas[j] * alphas[m])


@pytest.mark.parametrize("k", [1, 2, 3])
def test_jk_matches_dense_enumeration(k):
    alphas = [0.3, 1.1, 0.7, 2.2]
    table = {(t.bra_indices, t.ket_indices): t.coefficient for t in P.assemble_jk(k, alphas)}
    dense = brute_jk(k, alphas)
    assert set(table) == set(dense)
    for key, val in dense.items():
        assert table[key] == pytest.approx(val, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.lists(st.floats(0.1, 3.0), min_size=3, max_size=5))
def test_jk_hermitian_and_consistent(k, alphas):
    terms = P.assemble_jk(k, alphas)
    table = {(t.bra, t.ket): t.coefficient for t in terms}
    for t in terms:
        assert table[(t.ket, t.bra)] == t.coefficient
        assert t.coefficient > 0
        assert sum(m for _, m in t.bra) == k and sum(m for _, m in t.ket) == k
        assert t.coefficient == pytest.approx(P.jk_entry(k, alphas, t.bra_indices, t.ket_indices), rel=1e-12)


def test_jk_errors():
    with pytest.raises(ValueError):
        P.assemble_jk(1, [])
    with pytest.raises(ValueError):
        P.assemble_jk(1, [1.0, -1.0])
    with pytest.raises(ValueError):
        P.assemble_jk(3, [1.0, 1.0])


def test_oracle_examples():
    assert P.jk_monte_carlo_oracle(1, [2.0], (0,), (0,), samples=10**6, seed=1) == pytest.approx(2.0, rel=0.01)
    assert P.jk_monte_carlo_oracle(2, [1.0], (0, 0), (0, 0), samples=10**6, seed=2) == pytest.approx(3.0, rel=0.02)
    assert P.jk_monte_carlo_oracle(3, [1.0], (0,) * 3, (0,) * 3, samples=10**6, seed=3) == pytest.approx(15.0, rel=0.05)
    with pytest.raises(ValueError):
        P.jk_monte_carlo_oracle(1, [1.0], (0,), (0,), samples=1000)


def test_jk_table_rows():
    rows = P.jk_table(P.assemble_jk(2, [1.0, 2.0]))
    assert ("0,0", "0,0", 3.0) in rows
    assert ("0,1", "0,1", 2.0) in rows
