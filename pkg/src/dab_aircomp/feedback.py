"""Noiseless simultaneous analog feedback for building the DAB at the AP.

Each device sends ``Z = lambda_min(F^H F) V_F Sigma_F^{-1} U_F^H`` over its
own channel, so what arrives through ``F`` is ``lambda_min U_F U_F^H``: the
device's term of the centroid matrix. Superposition over the air then sums
those terms without any per-device slot.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._validation import check_models, check_realizations
from .aircomp import AggregationBeamformer
from .dab import DEGENERACY_TOL, DegenerateChannelError, effective_channel, overlapping_alpha
from .numerics import principal_eigenspace, projector, svd

__all__ = [
    "FeedbackSignal",
    "FeedbackTranscript",
    "feedback_signal",
    "max_aircomp",
    "simulate_disjoint_feedback",
    "simulate_overlapping_feedback",
]


@dataclass(eq=False)
class FeedbackSignal:
    cluster_index: int
    device_index: int
    matrix: np.ndarray


@dataclass(eq=False)
class FeedbackTranscript:
    """Everything the AP observed and computed during one feedback round.

    ``slots`` holds the aggregated matrix received in each simultaneous
    channel use; ``max_rounds`` the scalar maxima (overlapping scheme only).
    """

    slots: List[np.ndarray]
    cluster_outputs: List[np.ndarray]
    beamformer: AggregationBeamformer
    max_rounds: List[float] = field(default_factory=list)
    signals: List[FeedbackSignal] = field(default_factory=list, repr=False)


def feedback_signal(F):
    """Device feedback matrix ``lambda_min(F^H F) V Sigma^{-1} U^H`` (L x rows(F))."""
    F = np.asarray(F)
    U, s, V = svd(F)
    if s[0] == 0 or s[-1] < DEGENERACY_TOL * s[0]:
        raise DegenerateChannelError(f"feedback channel of shape {F.shape} is rank deficient")
    return (s[-1] ** 2) * (V / s) @ U.conj().T


def max_aircomp(values):
    """Idealized maximum-AirComp: the exact maximum of the device scalars."""
    values = list(values)
    if not values:
        raise ValueError("max_aircomp needs at least one value")
    return max(values)


def _hermitian_part(M):
    return (M + M.conj().T) / 2


def simulate_disjoint_feedback(models, channels, dims, noise=None, separation="projection"):
    """One-shot feedback for disjoint clusters.

    All devices transmit at once. Clusters of different rank pad their
    signals with zero columns up to the largest rank, and the AP reads the
    first ``R_g`` columns of each cluster's share of the slot.

    Parameters
    ----------
    noise : ndarray, optional
        Additive term on the received slot. Off by default (the feedback
        link is assumed reliable).
    separation : {"projection", "decorrelate"}
        How the AP isolates cluster ``g``. ``"projection"`` forms
        ``U_g^H Y``, which is exact only for mutually orthogonal cluster
        bases. ``"decorrelate"`` solves ``Y = [U_1 ... U_G] [Y_1; ...; Y_G]``
        in the least-squares sense, which removes cross-cluster leakage
        whenever the stacked bases have full column rank and coincides with
        ``"projection"`` for orthogonal bases.
    """
    if separation not in ("projection", "decorrelate"):
        raise ValueError(f"unknown separation {separation!r}")
    groups = check_realizations(channels, dims.n_clusters)
    models = check_models(models, dims.n_clusters)
    L = dims.payload_dim
    n_cols = max(m.rank for m in models)
    Y = np.zeros((models[0].n_rx, n_cols), dtype=complex)
    signals = []
    for m, grp in zip(models, groups):
        for ch in grp:
            F = effective_channel(ch, m)
            Z = feedback_signal(F)
            signals.append(FeedbackSignal(ch.cluster_index, ch.device_index, Z))
            # the physical channel is U_g F: its rank-truncated part carries the feedback
            Y[:, : m.rank] += m.basis @ (F @ Z)
    if noise is not None:
        Y = Y + noise

    if separation == "projection":
        shares = [m.basis.conj().T @ Y for m in models]
    else:
        stacked = np.hstack([m.basis for m in models])
        if stacked.shape[1] > stacked.shape[0]:
            raise ValueError("decorrelation needs sum of cluster ranks <= n_rx")
        coef = np.linalg.lstsq(stacked, Y, rcond=None)[0]
        shares = np.split(coef, np.cumsum([m.rank for m in models])[:-1])

    outputs, factors = [], []
    for m, share in zip(models, shares):
        Yg = share[:, : m.rank]
        outputs.append(Yg)
        # cross-cluster leakage makes Y_g slightly non-Hermitian
        factors.append(principal_eigenspace(_hermitian_part(Yg), L))
    bases = [m.basis for m in models]
    A = sum(C.conj().T @ U.conj().T for C, U in zip(factors, bases))
    bf = AggregationBeamformer(A, outer_factors=factors, bases=bases)
    return FeedbackTranscript([Y], outputs, bf, signals=signals)


def simulate_overlapping_feedback(models, channels, dims, r_s=None):
    """G-slot feedback for overlapping clusters.

    Pass 1 walks the clusters in order: one scalar max round for the cluster
    weight, then one simultaneous slot for its matrix feedback. Pass 2 forms
    the inner beamformer from the weights and post-processes the stored
    slots into the outer centroid matrix.
    """
    groups = check_realizations(channels, dims.n_clusters)
    models = check_models(models, dims.n_clusters)
    L = dims.payload_dim
    r_s = min(m.rank for m in models) if r_s is None else r_s

    # the designed inner beamformer is needed to build Z; devices know it because
    # it only depends on the covariances and the broadcast cluster weights
    alpha = []
    for m, grp in zip(models, groups):
        alpha.append(max_aircomp(overlapping_alpha(m, grp, r_s).tolist()))
    S_b = sum(a * projector(m.basis[:, :r_s]) for a, m in zip(alpha, models))
    inner = principal_eigenspace(S_b, r_s).conj().T

    slots, signals = [], []
    for m, grp in zip(models, groups):
        Yg = np.zeros((m.n_rx, r_s), dtype=complex)
        proj = inner @ m.basis[:, :r_s]
        for ch in grp:
            Z = feedback_signal(proj @ effective_channel(ch, m, r_s))
            signals.append(FeedbackSignal(ch.cluster_index, ch.device_index, Z))
            Yg += ch.channel @ Z
        slots.append(Yg)

    outputs = []
    for m, Yg in zip(models, slots):
        Ub = m.basis[:, :r_s]
        outputs.append(inner @ Ub @ (Ub.conj().T @ Yg))
    S_c = sum(outputs)
    outer = principal_eigenspace(_hermitian_part(S_c), L).conj().T
    bf = AggregationBeamformer(outer @ inner, inner=inner, outer=outer)
    return FeedbackTranscript(slots, outputs, bf, max_rounds=list(alpha), signals=signals)
