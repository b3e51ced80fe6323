import numpy as np
import pytest

from dab_aircomp.channel import (
    ArrayGeometry,
    ClusterModel,
    ClusterSpec,
    SystemDims,
    analytic_rank,
    build_covariance,
    decompose_cluster,
    device_rng,
    path_loss_gain,
    sample_channels,
)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_orthonormal(rng, n, d):
    Q, _ = np.linalg.qr(crandn(rng, n, d))
    return Q


def random_hermitian(rng, n):
    M = crandn(rng, n, n)
    return (M + M.conj().T) / 2


def one_ring_models(ranges, n_rx=48, spacing=1 / 3, payload_dim=5):
    geom = ArrayGeometry(n_rx, spacing)
    out = []
    for lo, hi in ranges:
        spec = ClusterSpec(lo, hi)
        out.append(decompose_cluster(build_covariance(geom, spec), analytic_rank(geom, spec, payload_dim)))
    return out


def draw(models, n_devices, seed, trial=0, n_tx=5, gain=1.0):
    dims = SystemDims(n_tx, n_tx, len(models))
    chans = []
    for g, m in enumerate(models):
        rngs = [device_rng(seed, trial, g, k) for k in range(n_devices)]
        chans += sample_channels(m, dims, gain, rngs, cluster_index=g)
    return chans, dims


def orthogonal_models(rng, n_rx, ranks):
    """Cluster models whose bases are exactly orthogonal blocks of one unitary."""
    Q = random_orthonormal(rng, n_rx, sum(ranks))
    models, start = [], 0
    for r in ranks:
        U = Q[:, start:start + r]
        lam = np.sort(rng.uniform(0.5, 3.0, r))[::-1]
        models.append(ClusterModel(U @ np.diag(lam) @ U.conj().T, U, lam))
        start += r
    return models


def random_models(rng, n_rx, ranks):
    """Cluster models with random (generally overlapping) bases."""
    models = []
    for r in ranks:
        U = random_orthonormal(rng, n_rx, r)
        lam = np.sort(rng.uniform(0.2, 3.0, r))[::-1]
        models.append(ClusterModel(U @ np.diag(lam) @ U.conj().T, U, lam))
    return models


@pytest.fixture(scope="session")
def fig3_models():
    return one_ring_models([(-49, -1), (1, 49)])


@pytest.fixture(scope="session")
def fig4_models():
    return one_ring_models([(-51, -15), (-14, 14), (15, 41)])


@pytest.fixture(scope="session")
def fig5_models():
    return one_ring_models([(-45, 15), (-15, 45)])


@pytest.fixture(scope="session")
def beta():
    return path_loss_gain(0.05)


_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion and assert it."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
