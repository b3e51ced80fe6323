"""Scikit-learn style wrappers around the beamformer designs.

``fit`` takes a list of :class:`~dab_aircomp.channel.ChannelRealization`
(the "samples" are device channels) and learns the receive matrix, exposed
as ``components_`` (L x N_r). ``transform`` applies it to received signals
laid out as N_r x T columns, like a fitted linear projection.

>>> est = DisjointDAB(cluster_models=models, payload_dim=5, rank_selection="homogeneous")
>>> A = est.fit(channels).components_          # doctest: +SKIP
"""

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_matrix, check_realizations
from .aircomp import evaluate_design, p2_objective
from .channel import SystemDims
from .dab import design_disjoint, design_overlapping, design_reference
from .rank_select import select_heterogeneous, select_homogeneous, select_overlapping, truncate

__all__ = ["DisjointDAB", "OverlappingDAB", "ReferenceBeamformer"]


class _BeamformerMixin(TransformerMixin):
    def transform(self, Y):
        """Project received signals ``Y`` (N_r x T) to ``A Y`` (L x T)."""
        check_is_fitted(self, "components_")
        Y = check_complex_matrix(Y, "Y")
        if Y.shape[0] != self.components_.shape[1]:
            raise ValueError(f"Y has {Y.shape[0]} rows, beamformer expects {self.components_.shape[1]}")
        return self.components_ @ Y

    def evaluate(self, X, budget):
        """Optimal denoising factor, precoders and closed-form MSE on channels ``X``."""
        check_is_fitted(self, "components_")
        return evaluate_design(self.components_, X, budget)

    def score(self, X, y=None, budget=None):
        """Negative closed-form MSE (or negative ``p2_objective`` when no budget is given)."""
        check_is_fitted(self, "components_")
        if budget is None:
            return -p2_objective(self.components_, X)
        return -evaluate_design(self.components_, X, budget).mse

    def _dims(self, X):
        n_clusters = len(self.cluster_models) if getattr(self, "cluster_models", None) else None
        groups = check_realizations(X, n_clusters)
        return groups, SystemDims(self.payload_dim, self.payload_dim, len(groups))


class DisjointDAB(_BeamformerMixin, BaseEstimator):
    """Decomposed aggregation beamformer for clusters with disjoint AoA ranges.

    Parameters
    ----------
    cluster_models : list of ClusterModel
        One model per cluster at full rank ``R_g``.
    payload_dim : int
        Symbol dimension ``L`` (equal to the number of transmit antennas).
    rank_selection : {"none", "homogeneous", "heterogeneous"}
        How the per-cluster ranks are chosen before the design.
    max_iter : int, optional
        Iteration cap for heterogeneous selection (default ``2 G``).

    Attributes
    ----------
    components_ : ndarray, shape (payload_dim, n_rx)
    ranks_ : list of int
    design_ : DisjointDesign
    """

    def __init__(self, cluster_models=None, payload_dim=1, rank_selection="none", max_iter=None):
        self.cluster_models = cluster_models
        self.payload_dim = payload_dim
        self.rank_selection = rank_selection
        self.max_iter = max_iter

    def fit(self, X, y=None):
        if not self.cluster_models:
            raise ValueError("cluster_models is required")
        X = list(X)
        _, dims = self._dims(X)
        models = list(self.cluster_models)
        if self.rank_selection == "none":
            ranks = [m.rank for m in models]
        elif self.rank_selection == "homogeneous":
            r, _ = select_homogeneous(models, X, dims)
            ranks = [r] * len(models)
        elif self.rank_selection == "heterogeneous":
            ranks = select_heterogeneous(models, X, dims, self.max_iter)[0].ranks
        else:
            raise ValueError(f"unknown rank_selection {self.rank_selection!r}")
        reduced = [truncate(m, r) for m, r in zip(models, ranks)]
        self.design_ = design_disjoint(reduced, X, dims)
        self.ranks_ = ranks
        self.components_ = self.design_.beamformer.matrix
        return self


class OverlappingDAB(_BeamformerMixin, BaseEstimator):
    """Inner/outer aggregation beamformer for clusters with overlapping AoA ranges.

    Parameters
    ----------
    cluster_models : list of ClusterModel
    payload_dim : int
    rank_selection : {"none", "search"}
        ``"search"`` picks the inner dimension by exhaustive 1-D search;
        ``"none"`` uses the smallest cluster rank.
    """

    def __init__(self, cluster_models=None, payload_dim=1, rank_selection="none"):
        self.cluster_models = cluster_models
        self.payload_dim = payload_dim
        self.rank_selection = rank_selection

    def fit(self, X, y=None):
        if not self.cluster_models:
            raise ValueError("cluster_models is required")
        X = list(X)
        _, dims = self._dims(X)
        models = list(self.cluster_models)
        if self.rank_selection == "none":
            r_s = None
        elif self.rank_selection == "search":
            r_s, _ = select_overlapping(models, X, dims)
        else:
            raise ValueError(f"unknown rank_selection {self.rank_selection!r}")
        self.design_ = design_overlapping(models, X, dims, r_s=r_s)
        self.r_s_ = self.design_.r_s
        self.components_ = self.design_.beamformer.matrix
        return self


class ReferenceBeamformer(_BeamformerMixin, BaseEstimator):
    """Centroid beamformer over full channels, blind to any cluster structure."""

    def __init__(self, payload_dim=1):
        self.payload_dim = payload_dim

    def fit(self, X, y=None):
        X = list(X)
        self.components_ = design_reference(X, SystemDims(self.payload_dim, self.payload_dim)).matrix
        return self
