"""Infinite latent position cluster model for binary multiplex networks.

Joint MCMC inference on latent node coordinates, cluster allocations, the
number of clusters, and view-specific logit parameters, with posterior
post-processing and a simulation harness.
"""

__version__ = "0.1.0"

from .multiplex import (
    Multiplex,
    MultiplexFormatError,
    average_geodesic,
    density,
    geodesic_distances,
    load_multiplex,
    save_multiplex,
)
from .model import (
    LogitParams,
    PriorConfig,
    alpha_lower_bound,
    alpha_ref_min,
    edge_prob,
    log_likelihood,
    logit_prior_logdensity,
    squared_distances,
)
from .dpmix import (
    MixtureState,
    canonical_labels,
    escobar_mixture_weight,
    label_full_conditional,
    mixture_logdensity,
    resample_labels,
    update_base_mean,
    update_component_params,
    update_concentration,
)
from .sampler import (
    ChainTrace,
    MCMCConfig,
    align_to_reference,
    classical_mds,
    initialize,
    procrustes_correlation,
    procrustes_guard,
    propose_latent_coordinate,
    run_chain,
    update_logit_params,
)
from .postprocess import (
    ClusterSummary,
    PosteriorSimilarity,
    adjusted_rand_index,
    estimate_partition_vi,
    posterior_similarity,
    procrustes_align_trace,
    relabel_and_estimate,
    summarize_trace,
    vi_lower_bound,
)
from .simulate import (
    GroundTruth,
    ScenarioSpec,
    empirical_edge_rates,
    generate,
    load_truth,
    save_truth,
)
from .traceio import TraceWriter, read_trace, write_trace

__all__ = [
    "Multiplex", "MultiplexFormatError", "average_geodesic", "density",
    "geodesic_distances", "load_multiplex", "save_multiplex",
    "LogitParams", "PriorConfig", "alpha_lower_bound", "alpha_ref_min",
    "edge_prob", "log_likelihood", "logit_prior_logdensity", "squared_distances",
    "MixtureState", "canonical_labels", "escobar_mixture_weight",
    "label_full_conditional", "mixture_logdensity", "resample_labels",
    "update_base_mean", "update_component_params", "update_concentration",
    "ChainTrace", "MCMCConfig", "align_to_reference", "classical_mds",
    "initialize", "procrustes_correlation", "procrustes_guard",
    "propose_latent_coordinate", "run_chain", "update_logit_params",
    "ClusterSummary", "PosteriorSimilarity", "adjusted_rand_index",
    "estimate_partition_vi", "posterior_similarity", "procrustes_align_trace",
    "relabel_and_estimate", "summarize_trace", "vi_lower_bound",
    "GroundTruth", "ScenarioSpec", "empirical_edge_rates", "generate",
    "load_truth", "save_truth",
    "TraceWriter", "read_trace", "write_trace",
]
