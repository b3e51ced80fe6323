"""Input validation helpers shared by the estimators and functional API."""

import numpy as np

from .channel import ChannelRealization
from .numerics import DimensionError


def check_complex_matrix(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf")
    return M.astype(complex, copy=False)


def check_beamformer(A):
    return check_complex_matrix(A, "beamformer")


def iter_channels(channels):
    """Yield ``(index, H)`` pairs.

    ``channels`` may hold :class:`ChannelRealization` objects (indexed by
    ``(cluster, device)``) or bare matrices (indexed by position).
    """
    if isinstance(channels, ChannelRealization):
        channels = [channels]
    if isinstance(channels, np.ndarray) and channels.ndim == 2:
        channels = [channels]
    n = 0
    for i, ch in enumerate(channels):
        n += 1
        if isinstance(ch, ChannelRealization):
            yield ch.index, ch.channel
        else:
            yield (0, i), check_complex_matrix(ch, "channel")
    if n == 0:
        raise ValueError("at least one channel is required")


def check_realizations(channels, n_clusters=None):
    """Validate and group realizations by cluster.

    Returns
    -------
    list of list of ChannelRealization
        One list per cluster, devices in input order.
    """
    channels = list(channels)
    if not channels:
        raise ValueError("at least one channel realization is required")
    for ch in channels:
        if not isinstance(ch, ChannelRealization):
            raise TypeError(f"expected ChannelRealization, got {type(ch).__name__}")
    if n_clusters is None:
        n_clusters = max(ch.cluster_index for ch in channels) + 1
    groups = [[] for _ in range(n_clusters)]
    for ch in channels:
        if not 0 <= ch.cluster_index < n_clusters:
            raise ValueError(f"cluster index {ch.cluster_index} outside [0, {n_clusters})")
        groups[ch.cluster_index].append(ch)
    for g, grp in enumerate(groups):
        if not grp:
            raise ValueError(f"cluster {g} has no devices")
    return groups


def check_models(models, n_clusters):
    models = list(models)
    if len(models) != n_clusters:
        raise ValueError(f"expected {n_clusters} cluster models, got {len(models)}")
    n_rx = {m.n_rx for m in models}
    if len(n_rx) != 1:
        raise DimensionError("cluster models disagree on the number of receive antennas")
    return models
