"""Partitions, even decompositions and the k-point density matrix.

For a centered Gaussian vector ``u = sum_j sqrt(alpha_j) gamma_j phi_j``
the matrix ``J(k) = E |u^k><u^k|`` is sparse in the product basis: an
entry with bra multiplicities ``l_j`` and ket multiplicities ``r_j`` is
nonzero exactly when every ``l_j + r_j`` is even.  Writing
``l_j + r_j = 2 k_j`` turns the row lengths ``k_j`` into a partition of
``k`` and ``(l, r)`` into one of its even decompositions.

Basis indices are 0-based throughout.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .streams import as_generator

MAX_PARTITION_SIZE = 20
MAX_MOMENT_ORDER = 30


@dataclass(frozen=True)
class Partition:
    rows: tuple

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        if not rows or any(r < 1 for r in rows):
            raise ValueError(f"partition rows must be positive: {self.rows}")
        if any(a < b for a, b in zip(rows, rows[1:])):
            raise ValueError(f"partition rows must be non-increasing: {self.rows}")
        object.__setattr__(self, "rows", rows)

    @property
    def k(self):
        return sum(self.rows)

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class EvenDecomposition:
    left: tuple
    right: tuple
    parent: Partition

    def odd_rows(self):
        return (sum(x % 2 for x in self.left), sum(x % 2 for x in self.right))


@dataclass(frozen=True)
class DensityTerm:
    """One nonzero entry ``<bra| J(k) |ket>`` of the k-point matrix.

    ``bra`` and ``ket`` are sorted ``(index, multiplicity)`` pairs; the
    entry is the same for every ordering of the tensor factors.
    """

    bra: tuple
    ket: tuple
    coefficient: float

    @property
    def bra_indices(self):
        return _expand(self.bra)

    @property
    def ket_indices(self):
        return _expand(self.ket)

    @property
    def is_diagonal(self):
        return self.bra == self.ket


def _expand(pairs):
    return tuple(j for j, mult in pairs for _ in range(mult))


def enumerate_partitions(k):
    """All partitions of ``k`` in lexicographically descending order.

    >>> [p.rows for p in enumerate_partitions(3)]
    [(3,), (2, 1), (1, 1, 1)]
    """
    if not 1 <= k <= MAX_PARTITION_SIZE:
        raise ValueError(f"k must lie in [1, {MAX_PARTITION_SIZE}], got {k}")

    def descend(remaining, cap):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in descend(remaining - first, first):
                yield (first,) + rest

    return [Partition(rows) for rows in descend(k, k)]


def gaussian_even_moment(m):
    """``E gamma^(2m) = (2m)! / (2^m m!)`` for a standard normal, exactly."""
    if m < 0:
        raise ValueError(f"moment order must be non-negative, got {m}")
    if m > MAX_MOMENT_ORDER:
        raise OverflowError(f"moment order {m} exceeds guard {MAX_MOMENT_ORDER}")
    return math.factorial(2 * m) // (2**m * math.factorial(m))


def _split_rows(rows):
    """Yield ``(l, r)`` with ``l_j + r_j = 2 rows_j`` and ``sum l = sum rows``.

    ``rows`` may be in any order; ``l`` comes out lexicographically descending.
    """
    k = sum(rows)
    # tails[j]: the most that rows j.. can still absorb
    tails = [2 * sum(rows[j:]) for j in range(len(rows) + 1)]

    def descend(j, budget, acc):
        if j == len(rows):
            if budget == 0:
                yield tuple(acc), tuple(2 * kr - lr for kr, lr in zip(rows, acc))
            return
        for lj in range(min(2 * rows[j], budget), -1, -1):
            if budget - lj <= tails[j + 1]:
                yield from descend(j + 1, budget - lj, acc + [lj])

    yield from descend(0, k, [])


def enumerate_even_decompositions(p, max_zero_rows=0):
    """Pairs ``(l, r)`` with ``l_j + r_j = 2 k_j`` and ``sum l = sum r = k``.

    Output is ordered lexicographically descending in ``l``.  Zero rows
    (at most ``k``) can only carry ``l_j = r_j = 0``; they pad the tuples
    without creating new decompositions.
    """
    if not 0 <= max_zero_rows <= p.k:
        raise ValueError(f"max_zero_rows must lie in [0, {p.k}], got {max_zero_rows}")
    pad = (0,) * max_zero_rows
    return [EvenDecomposition(left + pad, right + pad, p) for left, right in _split_rows(p.rows)]


def _distinct_permutations(rows):
    return sorted(set(itertools.permutations(rows)), reverse=True)


def assemble_jk(k, alphas):
    """Sparse expansion of ``J(k)`` over the basis indexed by ``alphas``.

    Each term's coefficient is ``prod_j alpha_j^(k_j) * prod_j (2k_j)!/(2^k_j k_j!)``
    for the row lengths ``k_j`` attached to basis index ``j``.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size == 0:
        raise ValueError("alphas must be non-empty")
    if not np.all(np.isfinite(alphas)) or np.any(alphas <= 0):
        raise ValueError("alphas must be finite and positive")
    if alphas.size < k:
        raise ValueError(f"need at least k={k} basis vectors, got {alphas.size}")

    terms = {}
    for part in enumerate_partitions(k):
        n = len(part)
        moment = math.prod(gaussian_even_moment(r) for r in part.rows)
        for subset in itertools.combinations(range(alphas.size), n):
            for rows in _distinct_permutations(part.rows):
                weight = math.prod(float(alphas[j]) ** r for j, r in zip(subset, rows))
                for left, right in _split_rows(rows):
                    bra = tuple((j, m) for j, m in zip(subset, left) if m)
                    ket = tuple((j, m) for j, m in zip(subset, right) if m)
                    if (bra, ket) in terms:
                        raise AssertionError(f"duplicate term {(bra, ket)} for rows {rows}")
                    terms[(bra, ket)] = DensityTerm(bra, ket, weight * moment)
    return sorted(terms.values(), key=lambda t: (t.bra_indices, t.ket_indices))


def jk_entry(k, alphas, bra, ket):
    """Closed-form entry ``<bra| J(k) |ket>`` for index sequences of length k."""
    if len(bra) != k or len(ket) != k:
        raise ValueError("bra and ket must each list k indices")
    alphas = np.asarray(alphas, dtype=float)
    counts = {}
    for j in list(bra) + list(ket):
        counts[j] = counts.get(j, 0) + 1
    if any(c % 2 for c in counts.values()):
        return 0.0
    return math.prod(alphas[j] ** (c // 2) * gaussian_even_moment(c // 2) for j, c in counts.items())


def jk_monte_carlo_oracle(k, alphas, bra, ket, samples=10**6, seed=0, chunk=250_000):
    """Monte Carlo estimate of ``E prod (sqrt(alpha) gamma)`` over bra and ket indices."""
    if samples < 10**5:
        raise ValueError(f"oracle needs at least 1e5 samples, got {samples}")
    if len(bra) != k or len(ket) != k:
        raise ValueError("bra and ket must each list k indices")
    alphas = np.asarray(alphas, dtype=float)
    rng = as_generator(seed)
    powers = {}
    for j in list(bra) + list(ket):
        powers[j] = powers.get(j, 0) + 1
    cols = sorted(powers)
    scale = math.prod(math.sqrt(alphas[j]) ** powers[j] for j in cols)
    total = 0.0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        g = rng.standard_normal((size, len(cols)))
        prod = np.ones(size)
        for c, j in enumerate(cols):
            prod *= g[:, c] ** powers[j]
        total += prod.sum()
        done += size
    return scale * total / samples


def jk_table(terms):
    """Rows ``(bra, ket, coefficient)`` with comma-joined index lists."""
    return [
        (",".join(map(str, t.bra_indices)), ",".join(map(str, t.ket_indices)), t.coefficient)
        for t in terms
    ]
