"""Denoising factor, zero-forcing precoders and MSE for a given beamformer.

For a receive beamformer ``A`` (L x N_r) every device pre-equalizes so that
``A H B = eta I``. The largest feasible ``eta`` is set by the weakest device,
and the resulting aggregation MSE is ``N0 tr(A A^H) / eta^2``.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._validation import check_beamformer, iter_channels

__all__ = [
    "RankDeficiencyError",
    "LinkBudget",
    "AggregationBeamformer",
    "DesignEvaluation",
    "gram_inverse_traces",
    "denoising_factor",
    "zero_forcing_precoders",
    "p2_objective",
    "closed_form_mse",
    "empirical_mse",
    "evaluate_design",
    "dbm_to_watts",
]

COND_LIMIT = 1e12


class RankDeficiencyError(np.linalg.LinAlgError):
    """The projected Gram matrix ``A H H^H A^H`` of some device is singular."""

    def __init__(self, index, cond):
        super().__init__(f"device {index}: A H H^H A^H is singular (condition number {cond:.3g})")
        self.index = index
        self.cond = cond

    def __reduce__(self):
        return type(self), (self.index, self.cond)


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    """Per-device transmit power cap and receiver noise power, both in watts."""

    p_t: float
    n0: float

    def __post_init__(self):
        if not (self.p_t > 0 and self.n0 >= 0):
            raise ValueError("p_t must be > 0 and n0 >= 0")

    @classmethod
    def from_dbm(cls, p_t_dbm, noise_density_dbm_hz, bandwidth_hz):
        """Build from dBm power and a noise density integrated over the bandwidth."""
        return cls(dbm_to_watts(p_t_dbm), dbm_to_watts(noise_density_dbm_hz) * bandwidth_hz)


@dataclass(eq=False)
class AggregationBeamformer:
    """Receive matrix ``A`` with an optional record of how it was composed.

    Either ``outer_factors`` + ``bases`` (``A = sum_g C_g^H U_g^H``) or
    ``inner`` + ``outer`` (``A = outer @ inner``) may be set.
    """

    matrix: np.ndarray
    outer_factors: Optional[List[np.ndarray]] = None
    bases: Optional[List[np.ndarray]] = None
    inner: Optional[np.ndarray] = None
    outer: Optional[np.ndarray] = None

    @property
    def payload_dim(self):
        return self.matrix.shape[0]

    def recompose(self):
        if self.outer_factors is not None:
            return sum(C.conj().T @ U.conj().T for C, U in zip(self.outer_factors, self.bases))
        if self.inner is not None:
            return self.outer @ self.inner
        return self.matrix


@dataclass(eq=False)
class DesignEvaluation:
    eta: float
    precoders: List[np.ndarray]
    mse: float
    p2_objective: float
    bottleneck: Tuple[int, int]
    traces: np.ndarray = field(repr=False, default=None)


def _as_matrix(A):
    if isinstance(A, AggregationBeamformer):
        A = A.matrix
    return check_beamformer(A)


def gram_inverse_traces(A, channels):
    """``tr((A H H^H A^H)^{-1})`` for every device.

    Returns
    -------
    traces : ndarray
    indices : list of tuple
        Device identifiers in the same order.
    """
    A = _as_matrix(A)
    indices, chans = zip(*iter_channels(channels))
    AH = A[None] @ np.stack(chans)
    lam = np.linalg.eigvalsh(AH @ np.conj(np.swapaxes(AH, 1, 2)))
    lo, hi = lam[:, 0], lam[:, -1]
    bad = (lo <= 0) | (hi > COND_LIMIT * lo)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise RankDeficiencyError(indices[i], np.inf if lo[i] <= 0 else hi[i] / lo[i])
    return np.sum(1.0 / lam, axis=1), list(indices)


def denoising_factor(A, channels, budget):
    """Largest common ``eta`` meeting every device's power cap.

    Returns
    -------
    eta : float
    bottleneck : tuple
        The device that attains the minimum (the weakest link).
    """
    traces, indices = gram_inverse_traces(A, channels)
    worst = int(np.argmax(traces))
    return float(np.sqrt(budget.p_t / traces[worst])), indices[worst]


def zero_forcing_precoders(A, channels, eta):
    """Minimum-norm precoders ``B = eta (A H)^H (A H H^H A^H)^{-1}``."""
    A = _as_matrix(A)
    out = []
    for _, H in iter_channels(channels):
        AH = A @ H
        gram = AH @ AH.conj().T
        # B = eta * (G^{-1} A H)^H since G is Hermitian
        out.append(eta * np.linalg.solve(gram, AH).conj().T)
    return out


def p2_objective(A, channels):
    """``tr(A A^H) * max_device tr((A H H^H A^H)^{-1})``."""
    A = _as_matrix(A)
    traces, _ = gram_inverse_traces(A, channels)
    return float(np.real(np.vdot(A, A)) * traces.max())


def closed_form_mse(A, channels, budget):
    """Total aggregation MSE over the L entries at the optimal ``eta``."""
    return budget.n0 / budget.p_t * p2_objective(A, channels)


def evaluate_design(A, channels, budget):
    A = _as_matrix(A)
    traces, indices = gram_inverse_traces(A, channels)
    worst = int(np.argmax(traces))
    eta = float(np.sqrt(budget.p_t / traces[worst]))
    p2 = float(np.real(np.vdot(A, A)) * traces[worst])
    return DesignEvaluation(
        eta=eta,
        precoders=zero_forcing_precoders(A, channels, eta),
        mse=budget.n0 / budget.p_t * p2,
        p2_objective=p2,
        bottleneck=indices[worst],
        traces=traces,
    )


def empirical_mse(A, channels, budget, n_trials, rng):
    """Monte Carlo estimate of ``E || A Y / eta - sum X ||^2``.

    Symbols are i.i.d. CN(0, I/L) so each device has unit symbol power, noise
    is CN(0, N0) per receive antenna. Returns the sample mean and its
    standard error.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be at least 2")
    A = _as_matrix(A)
    L = A.shape[0]
    ev = evaluate_design(A, channels, budget)
    chans = [H for _, H in iter_channels(channels)]
    n_rx = chans[0].shape[0]

    def cn(shape, var):
        z = rng.standard_normal(tuple(shape) + (2,))
        return np.sqrt(var / 2) * (z[..., 0] + 1j * z[..., 1])

    Y = cn((n_rx, n_trials), budget.n0)
    target = np.zeros((L, n_trials), dtype=complex)
    for H, B in zip(chans, ev.precoders):
        X = cn((L, n_trials), 1.0 / L)
        Y += H @ (B @ X)
        target += X
    err = A @ Y / ev.eta - target
    sq = np.sum(np.abs(err) ** 2, axis=0)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(n_trials))
