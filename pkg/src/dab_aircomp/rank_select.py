"""Channel-rank selection for the DAB designs.

Ranks are chosen by minimising a per-device surrogate of the aggregation
error,

    MSE_{g,k}(r_g) = 1 / lambda_min(F^H F) / (1 - d_P2(C_g, U_F)^2),

which depends on the rank of cluster ``g`` only. That decoupling is what
makes the greedy heterogeneous search terminate: once a cluster's rank is
optimised it stays a fixed point.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ._validation import check_models, check_realizations
from .channel import ClusterModel
from .dab import centroid_matrix, centroid_weights, design_overlapping, stacked_effective
from .numerics import principal_eigenspace, subspace_distance_p2

__all__ = [
    "UNATTAINABLE",
    "RankAssignment",
    "SurrogateReport",
    "truncate",
    "surrogate_mse",
    "cluster_surrogates",
    "surrogate_report",
    "select_homogeneous",
    "select_heterogeneous",
    "select_overlapping",
    "overlapping_objective",
]

# orthogonal subspaces make the surrogate infinite; inf sorts above every finite value
UNATTAINABLE = float("inf")


@dataclass
class RankAssignment:
    ranks: List[int]
    history: List[float] = field(default_factory=list)

    @property
    def n_iter(self):
        return len(self.history) - 1


@dataclass
class SurrogateReport:
    values: Dict[Tuple[int, int], float]
    max: float
    bottleneck: Tuple[int, int]

    @classmethod
    def from_values(cls, values):
        bottleneck = max(values, key=values.get)
        return cls(values=dict(values), max=values[bottleneck], bottleneck=bottleneck)


def truncate(model, r, min_rank=1):
    """Keep the ``r`` dominant eigenpairs of ``model``.

    Fading matrices of existing realizations are truncated implicitly: every
    design reads only the first ``model.rank`` rows of ``W``.
    """
    if not min_rank <= r <= model.rank:
        raise ValueError(f"rank {r} outside [{min_rank}, {model.rank}]")
    if r == model.rank:
        return model
    return ClusterModel(model.covariance, model.basis[:, :r], model.eigenvalues[:r])


def surrogate_mse(F, outer):
    """Surrogate error of one device given its reduced channel and the cluster centroid."""
    lam, U = centroid_weights(F)
    d = subspace_distance_p2(outer, U)
    gap = 1.0 - d * d
    if gap <= 0:
        return UNATTAINABLE
    return 1.0 / (lam * gap)


def cluster_surrogates(model, grp, payload_dim, rank=None):
    """Surrogate values of every device in one cluster at the given rank.

    Batched form of :func:`surrogate_mse`; ``1 - d_P2^2`` is evaluated as the
    squared smallest cosine of the principal angles.
    """
    F = stacked_effective(grp, model, rank)
    lam, U = centroid_weights(F)
    outer = principal_eigenspace(centroid_matrix(lam, U), payload_dim)
    cos = np.linalg.svd(outer.conj().T[None] @ U, compute_uv=False)
    gap = np.minimum(cos[:, -1], 1.0) ** 2
    with np.errstate(divide="ignore"):
        return np.where(gap > 0, 1.0 / (lam * gap), UNATTAINABLE)


def surrogate_report(models, channels, dims, ranks=None):
    groups = check_realizations(channels, dims.n_clusters)
    ranks = [m.rank for m in models] if ranks is None else ranks
    values = {}
    for g, (m, grp) in enumerate(zip(models, groups)):
        for ch, v in zip(grp, cluster_surrogates(m, grp, dims.payload_dim, ranks[g])):
            values[ch.index] = float(v)
    return SurrogateReport.from_values(values)


def _best_rank(model, grp, L, lo, hi):
    best_r, best_v = None, None
    for r in range(lo, hi + 1):
        v = cluster_surrogates(model, grp, L, r).max()
        # strict comparison keeps the smaller rank on ties
        if best_v is None or v < best_v:
            best_r, best_v = r, v
    return best_r, best_v


def select_homogeneous(models, channels, dims):
    """Common rank ``r`` in ``[L, min_g R_g]`` minimising the worst surrogate."""
    groups = check_realizations(channels, dims.n_clusters)
    models = check_models(models, dims.n_clusters)
    L = dims.payload_dim
    r_hi = min(m.rank for m in models)
    table = {}
    for g, (m, grp) in enumerate(zip(models, groups)):
        for r in range(L, r_hi + 1):
            table[g, r] = cluster_surrogates(m, grp, L, r)
    best_r, best_v = None, None
    for r in range(L, r_hi + 1):
        v = max(table[g, r].max() for g in range(len(models)))
        if best_v is None or v < best_v:
            best_r, best_v = r, v
    values = {ch.index: float(v) for g, grp in enumerate(groups) for ch, v in zip(grp, table[g, best_r])}
    return best_r, SurrogateReport.from_values(values)


def select_heterogeneous(models, channels, dims, max_iters=None):
    """Greedy per-cluster rank selection.

    Starts from ``r_g = L`` and repeatedly re-optimises the rank of the
    cluster holding the worst device, until an iteration changes nothing or
    ``max_iters`` (default ``2 G``) is reached.

    Returns
    -------
    assignment : RankAssignment
        Final ranks; ``history`` holds the global surrogate max before the
        first iteration and after each one.
    report : SurrogateReport
    """
    groups = check_realizations(channels, dims.n_clusters)
    models = check_models(models, dims.n_clusters)
    L = dims.payload_dim
    G = len(models)
    max_iters = 2 * G if max_iters is None else max_iters
    ranks = [L] * G
    cache = {}

    def per_cluster(g):
        key = (g, ranks[g])
        if key not in cache:
            cache[key] = cluster_surrogates(models[g], groups[g], L, ranks[g])
        return cache[key]

    worst = [per_cluster(g).max() for g in range(G)]
    history = [max(worst)]
    for _ in range(max_iters):
        g0 = int(np.argmax(worst))
        r_new, v_new = _best_rank(models[g0], groups[g0], L, L, models[g0].rank)
        changed = r_new != ranks[g0]
        ranks[g0] = r_new
        worst[g0] = per_cluster(g0).max()
        history.append(max(worst))
        if not changed:
            break
    values = {ch.index: float(v) for g in range(G) for ch, v in zip(groups[g], per_cluster(g))}
    return RankAssignment(ranks, history), SurrogateReport.from_values(values)


def overlapping_objective(design):
    """``max_{g,k} 1 / lambda_min(A_o F F^H A_o^H)`` for an overlapping design."""
    M = design.outer[None] @ np.concatenate(design.effective)
    lam = np.linalg.eigvalsh(M @ np.conj(np.swapaxes(M, 1, 2)))[:, 0]
    return float(UNATTAINABLE) if np.any(lam <= 0) else float(np.max(1.0 / lam))


def select_overlapping(models, channels, dims):
    """Inner rank for the overlapping design by exhaustive 1-D search.

    Returns
    -------
    r : int
    value : float
        The objective at ``r``.
    """
    L = dims.payload_dim
    r_hi = min(m.rank for m in models)
    best_r, best_v = None, None
    for r in range(L, r_hi + 1):
        v = overlapping_objective(design_overlapping(models, channels, dims, r_s=r))
        if best_v is None or v < best_v:
            best_r, best_v = r, v
    return best_r, best_v
