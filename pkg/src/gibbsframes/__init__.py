"""Gibbs ensembles of the periodic cubic NLS and their stochastic moving frames."""

from .frames import (
    FrameConfig,
    FramePath,
    SdeCoefficients,
    brownian_bridge_paths,
    coefficient_matrices,
    f_coefficients,
    gem_step,
    rodrigues_exp,
    serret_frenet_deterministic,
    sigma_eps,
    simulate_angles,
    simulate_frame_path,
    spherical_angles,
    strong_error_study,
)
from .loops import (
    EmptyEnsembleError,
    GibbsEnsemble,
    InvariantReport,
    LoopSample,
    evaluate_field,
    gibbs_ensemble,
    invariants,
    pairing_statistic,
    sample_wiener_loop,
    tail_bound,
    tail_frequency,
)
from .nls import NlsState, evolve, split_step, time_derivative_fields
from .partitions import (
    DensityTerm,
    EvenDecomposition,
    Partition,
    assemble_jk,
    enumerate_even_decompositions,
    enumerate_partitions,
    gaussian_even_moment,
    jk_monte_carlo_oracle,
)
from .streams import stream
from .transport import (
    EmpiricalCdf,
    SphereSampleSet,
    chi2_independence,
    concentration_probe,
    fluctuation_bound,
    holder_estimate,
    ks_test,
    reference_cdfs,
    sphere_w1_bound,
    w1_cdf,
    w2_cdf,
)

__version__ = "0.1.0"
