"""gfreq: subgraph-type frequency estimation for undirected graphs.

Estimates the normalized distribution of connected 4- and 5-node induced
subgraph types, with an exact enumeration oracle, uniform-subset and
random-walk sampling baselines, and a trainable node-selection model that
samples subgraphs through learned Bernoulli keep probabilities.
"""

from .errors import ConfigError, DataError, GfreqError, NumericError, ParseError
from .graph import (
    Graph,
    connected_components,
    degree_sequence,
    induced_subgraph,
    largest_connected_component,
    parse_edge_list,
    serialize_edge_list,
)
from .canon import (
    CanonicalCode,
    TypeRegistry,
    alias_of,
    canonical_code,
    classify_connected,
    connected_codes,
    registry_index,
)
from .exact import (
    FrequencyDistribution,
    brute_force_distribution,
    enumerate_connected,
    exact_distribution,
)
from .baselines import combined_baseline_distribution, mhrw_sample, naive_sample
from .model import (
    GnnsParams,
    ModelConfig,
    estimate_distribution,
    gradient_check,
    init_params,
    sample_subgraph,
)
from .training import TrainConfig, load_checkpoint, save_checkpoint, train
from .dataset import (
    DatasetSplit,
    double_edge_swap,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .metrics import mse
from .bench import BenchConfig, run_benchmark
from .kernels import using_numba

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "GfreqError",
    "NumericError",
    "ParseError",
    "Graph",
    "connected_components",
    "degree_sequence",
    "induced_subgraph",
    "largest_connected_component",
    "parse_edge_list",
    "serialize_edge_list",
    "CanonicalCode",
    "TypeRegistry",
    "alias_of",
    "canonical_code",
    "classify_connected",
    "connected_codes",
    "registry_index",
    "FrequencyDistribution",
    "brute_force_distribution",
    "enumerate_connected",
    "exact_distribution",
    "combined_baseline_distribution",
    "mhrw_sample",
    "naive_sample",
    "GnnsParams",
    "ModelConfig",
    "estimate_distribution",
    "gradient_check",
    "init_params",
    "sample_subgraph",
    "TrainConfig",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "DatasetSplit",
    "double_edge_swap",
    "generate_dataset",
    "load_dataset",
    "save_dataset",
    "mse",
    "BenchConfig",
    "run_benchmark",
    "using_numba",
    "__version__",
]
