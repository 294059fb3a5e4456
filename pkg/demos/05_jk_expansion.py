# Sparse k-point matrix of a Gaussian field, checked against Monte Carlo.
from gibbsframes import partitions

alphas = [0.4, 0.9, 1.3, 2.1]
for k in (1, 2, 3):
    terms = partitions.assemble_jk(k, alphas)
    print(f"k={k}: {len(terms)} nonzero terms, partitions {[p.rows for p in partitions.enumerate_partitions(k)]}")

terms = partitions.assemble_jk(2, alphas)
for t in terms[:6]:
    mc = partitions.jk_monte_carlo_oracle(2, alphas, t.bra_indices, t.ket_indices, samples=10**6, seed=1)
    print(t.bra_indices, t.ket_indices, t.coefficient, round(mc, 4))

for row in partitions.jk_table(terms)[:5]:
    print(*row, sep="\t")
