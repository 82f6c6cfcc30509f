"""Spectral clustering with an emulated quantum pipeline.

The package runs classical spectral clustering exactly, emulates the quantum
variant by injecting the bounded errors each quantum subroutine is allowed to
make, and evaluates the asymptotic cost formulas of both algorithms.
"""

from qspectral.clustering import (
    ClusteringConfig,
    ClusteringResult,
    check_well_clusterable,
    clustering_accuracy,
    kmeans,
    kmeanspp_init,
    qmeans,
)
from qspectral.config import ConfigError, RunConfig, load_config, parse_config_text
from qspectral.costmodel import (
    CostReport,
    classical_cost,
    eta,
    kappa,
    mu,
    mu_normalized_incidence,
    quantum_cost,
)
from qspectral.datasets import DataMatrix, load_csv, make_circles, rescale_min_norm, save_csv
from qspectral.graph import (
    IncidenceView,
    SimilarityGraph,
    build_adjacency,
    estimate_sq_distance,
    incidence_row,
    normalized_laplacian,
)
from qspectral.noise import NoiseProfile, bounded_uniform, keyed_rng
from qspectral.pipeline import PipelineError, export_plotdata, run_pipeline, run_sweep
from qspectral.spectral import (
    Embedding,
    SpectralModel,
    eigendecompose,
    estimate_singular_values,
    project_classical,
    project_quantum,
    select_k_lowest,
)

__version__ = "0.1.0"
