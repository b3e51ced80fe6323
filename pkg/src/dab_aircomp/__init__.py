"""Reduced-dimension aggregation beamforming for MIMO over-the-air computation."""

from .aircomp import (
    AggregationBeamformer,
    DesignEvaluation,
    LinkBudget,
    RankDeficiencyError,
    closed_form_mse,
    denoising_factor,
    empirical_mse,
    evaluate_design,
    p2_objective,
    zero_forcing_precoders,
)
from .channel import (
    ArrayGeometry,
    ChannelRealization,
    ClusterModel,
    ClusterSpec,
    SystemDims,
    analytic_rank,
    build_covariance,
    decompose_cluster,
    device_rng,
    path_loss_gain,
    sample_channels,
    spectral_rank,
)
from .dab import DegenerateChannelError, design_disjoint, design_overlapping, design_reference
from .estimators import DisjointDAB, OverlappingDAB, ReferenceBeamformer
from .numerics import DimensionError

__version__ = "0.1.0"
