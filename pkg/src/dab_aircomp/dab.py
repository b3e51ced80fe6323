"""Decomposed aggregation beamformer (DAB) constructions.

All three designs reduce to the same primitive: the weighted subspace
centroid of a set of tall channel matrices, i.e. the dominant eigenspace of
``sum_k lambda_min(F_k^H F_k) U_{F_k} U_{F_k}^H``.

* :func:`design_disjoint` -- one centroid per cluster in the cluster's own
  eigen-coordinates, stitched together as ``A = sum_g C_g^H U_g^H``.
* :func:`design_overlapping` -- a shared inner beamformer from the weighted
  cluster subspaces followed by an outer centroid over all devices.
* :func:`design_reference` -- one centroid over the full channels, ignoring
  cluster structure.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ._validation import check_models, check_realizations
from .aircomp import AggregationBeamformer
from .numerics import principal_eigenspace, projector

__all__ = [
    "DegenerateChannelError",
    "DisjointDesign",
    "OverlappingDesign",
    "effective_channel",
    "centroid_weights",
    "centroid_matrix",
    "stacked_effective",
    "subspace_centroid",
    "design_disjoint",
    "design_overlapping",
    "design_reference",
]

DEGENERACY_TOL = 1e-12


class DegenerateChannelError(np.linalg.LinAlgError):
    """An effective channel has (numerically) deficient column rank."""


@dataclass(eq=False)
class DisjointDesign:
    outer_factors: List[np.ndarray]
    weights: List[np.ndarray]
    beamformer: AggregationBeamformer


@dataclass(eq=False)
class OverlappingDesign:
    r_s: int
    inner: np.ndarray
    outer: np.ndarray
    alpha: np.ndarray
    beamformer: AggregationBeamformer
    # S^(c) and the per-cluster (K, r_s, L) effective channels it was built from
    outer_gram: Optional[np.ndarray] = None
    effective: Optional[List[np.ndarray]] = None


def effective_channel(realization, model, rank=None):
    """Reduced channel ``gain * diag(sqrt(lambda_1..r)) W[:r]`` of one device."""
    r = model.rank if rank is None else rank
    W = realization.fading[:r]
    return realization.gain * np.sqrt(model.eigenvalues[:r])[:, None] * W


def centroid_weights(F):
    """``(lambda_min(F^H F), U_F)`` from one SVD of a tall matrix ``F``.

    ``F`` may also be a stack of shape (K, n, L); the results are then
    stacked along the first axis.
    """
    F = np.asarray(F)
    U, s, _ = np.linalg.svd(F, full_matrices=False)
    smin, smax = s[..., -1], s[..., 0]
    bad = (smax == 0) | (smin < DEGENERACY_TOL * smax)
    if np.any(bad):
        raise DegenerateChannelError(f"channel of shape {F.shape[-2:]} is rank deficient")
    return smin**2, U


def centroid_matrix(weights, bases):
    """``sum_k w_k U_k U_k^H`` for a stack of bases of shape (K, n, d)."""
    return np.einsum("k,kid,kjd->ij", weights, bases, bases.conj())


def subspace_centroid(mats, d):
    """Weighted subspace centroid of the column spaces of ``mats``.

    Returns
    -------
    basis : ndarray, shape (n, d)
        Dominant eigenspace of ``S = sum lambda_min U U^H``.
    weights : ndarray
        ``lambda_min`` of each matrix.
    S : ndarray
    """
    lam, U = centroid_weights(np.stack(mats))
    S = centroid_matrix(lam, U)
    return principal_eigenspace(S, d), lam, S


def design_disjoint(models, channels, dims):
    """Per-cluster centroid design ``A = sum_g C_g^H U_g^H``.

    Uses each model's basis at its stored rank, so passing truncated models
    (see :func:`dab_aircomp.rank_select.truncate`) gives the variable-rank
    design.
    """
    groups = check_realizations(channels, dims.n_clusters)
    models = check_models(models, dims.n_clusters)
    L = dims.payload_dim
    factors, weights = [], []
    for model, grp in zip(models, groups):
        C, w, _ = subspace_centroid(stacked_effective(grp, model), L)
        factors.append(C)
        weights.append(w)
    bases = [m.basis for m in models]
    A = sum(C.conj().T @ U.conj().T for C, U in zip(factors, bases))
    return DisjointDesign(factors, weights, AggregationBeamformer(A, outer_factors=factors, bases=bases))


def stacked_effective(grp, model, rank=None):
    """Effective channels of a whole cluster as one (K, r, L) array."""
    r = model.rank if rank is None else rank
    W = np.stack([ch.fading[:r] for ch in grp])
    gains = np.array([ch.gain for ch in grp])
    return gains[:, None, None] * np.sqrt(model.eigenvalues[:r])[None, :, None] * W


def overlapping_alpha(model, grp, r_s):
    """Per-device ``sum_i 1/lambda_i`` of the truncated Gram; the cluster weight is its max."""
    F = stacked_effective(grp, model, r_s)
    lam = np.linalg.eigvalsh(np.conj(np.swapaxes(F, 1, 2)) @ F)
    return np.sum(1.0 / lam, axis=1)


def design_overlapping(models, channels, dims, r_s=None):
    """Two-tier design ``A = A_outer @ A_inner`` for overlapping clusters.

    Parameters
    ----------
    models, channels, dims
        Cluster models, their device realizations, system sizes.
    r_s : int, optional
        Inner dimension. Defaults to the smallest cluster rank; rank search
        passes smaller candidates.
    """
    groups = check_realizations(channels, dims.n_clusters)
    models = check_models(models, dims.n_clusters)
    L = dims.payload_dim
    r_max = min(m.rank for m in models)
    r_s = r_max if r_s is None else int(r_s)
    if not L <= r_s <= r_max:
        raise ValueError(f"r_s={r_s} outside [{L}, {r_max}]")

    alpha = np.array([overlapping_alpha(m, grp, r_s).max() for m, grp in zip(models, groups)])
    S_b = sum(a * projector(m.basis[:, :r_s]) for a, m in zip(alpha, models))
    inner = principal_eigenspace(S_b, r_s).conj().T

    eff = []
    for m, grp in zip(models, groups):
        proj = inner @ m.basis[:, :r_s]
        eff.append(proj @ stacked_effective(grp, m, r_s))
    outer_h, _, S_c = subspace_centroid(np.concatenate(eff), L)
    outer = outer_h.conj().T
    A = AggregationBeamformer(outer @ inner, inner=inner, outer=outer)
    return OverlappingDesign(r_s, inner, outer, alpha, A, outer_gram=S_c, effective=eff)


def design_reference(channels, dims):
    """Structure-agnostic centroid over the full N_r-dimensional channels."""
    chans = [ch.channel if hasattr(ch, "channel") else np.asarray(ch) for ch in channels]
    if not chans:
        raise ValueError("at least one channel is required")
    C, _, _ = subspace_centroid(chans, dims.payload_dim)
    return AggregationBeamformer(C.conj().T)
