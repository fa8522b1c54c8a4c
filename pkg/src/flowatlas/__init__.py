"""flowatlas: latent-trajectory analytics for flow-field embedding sequences."""

from .dataset import CaseParams, DatasetHandle, filter_cases, load_dataset
from .embedfile import read_embedding_file, write_embedding_file
from .projection import (
    ProjectionResult,
    ProjectionSpec,
    fit_pca_2d,
    import_external_projection,
)
from .clustering import ClusterModel, cluster_projection, dbscan, select_centroids
from .trajectory import (
    DissimilarityResult,
    Trajectory,
    build_trajectory,
    compare_embedding_variants,
    convergence_radius,
    mean_convergence_radius,
    top_k_similar,
    trajectory_dissimilarity,
)

__version__ = "0.1.0"

__all__ = [
    "CaseParams", "DatasetHandle", "filter_cases", "load_dataset",
    "read_embedding_file", "write_embedding_file",
    "ProjectionResult", "ProjectionSpec", "fit_pca_2d", "import_external_projection",
    "ClusterModel", "cluster_projection", "dbscan", "select_centroids",
    "DissimilarityResult", "Trajectory", "build_trajectory",
    "compare_embedding_variants", "convergence_radius", "mean_convergence_radius",
    "top_k_similar", "trajectory_dissimilarity",
    "__version__",
]
