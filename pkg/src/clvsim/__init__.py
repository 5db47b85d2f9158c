"""Subject classification by clustering variables around latent components.

Pipeline: correlation distance between variables, Ward agglomeration,
resultant vectors at a tree cut, then two-means over the subjects. The
``datagen`` and ``experiment`` modules provide the synthetic two-group
generator and the Monte-Carlo grid used to validate it.
"""

__version__ = "0.1.0"

from .classify import Classification, classify, congruence, kmeans_two
from .clv import (
    ClusterCut,
    Dendrogram,
    DistanceMatrix,
    RVMatrix,
    correlation_distance_matrix,
    cut_tree,
    extract_rvs,
    ward_linkage,
)
from .datagen import Dataset, GeneratorParams, generate_dataset
from .errors import (
    CLVError,
    DatasetFormatError,
    DegenerateInputError,
    DegenerateVariableError,
    InvalidArgumentError,
)
from .experiment import GridConfig, ReplicateResult, compare_anova, descriptive_scan, run_grid, run_replicate
from .stats import TestResult, anova_oneway, mann_whitney_u, pearson_test
