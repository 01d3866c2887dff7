"""Entropy and Kullback-Leibler divergence for Bayesian networks.

Discrete, Gaussian and conditional linear Gaussian networks are supported,
with conversions between local and global distributions, junction-tree
inference for the discrete parts, and Monte Carlo cross-checks.
"""

from .entropy import EntropyReport, entropy_clgbn, entropy_discrete, entropy_gbn, entropy_mvn
from .fitting import Dataset, FitError, FitSummary, FittedNetwork, fit_mle
from .globals import (
    CholeskyFactor,
    GaussianGlobal,
    JointTable,
    MixtureGlobal,
    build_factor,
    build_inverse_factor,
    compose_clgbn,
    compose_discrete,
    compose_gbn,
    decompose_clgbn,
    decompose_discrete,
    decompose_gbn,
)
from .io import bundled_network, load_network, read_dataset, save_network, write_dataset
from .junction import JunctionTree, build_junction_tree, calibrate, query_marginal
from .kl import (
    KlReport,
    TraceBounds,
    kl_clgbn,
    kl_discrete,
    kl_gbn_bounds,
    kl_gbn_empirical,
    kl_gbn_sparse,
    kl_mvn,
    kl_tables,
)
from .linalg import SpectralFactor, invert_lower_triangular
from .network import (
    ClgLocal,
    Cpt,
    CycleError,
    Dag,
    GaussianLocal,
    Network,
    NetworkError,
    Variable,
    extract_subnetworks,
    partial_order,
    shared_total_order,
    total_order,
    validate_network,
)
from .sampling import McEstimate, SampleBatch, mc_entropy, mc_kl, sample_network

__version__ = "0.1.0"
