import math

import numpy as np
import pytest

from mmwave_hbf.channel import ChannelRealization, UserRays, generate_channel
from mmwave_hbf.errors import DegenerateChannelError, InvalidNoiseError, NoUsableStreamError
from mmwave_hbf.fully_digital import svd_stage, waterfill
from mmwave_hbf.metrics import evaluate
from mmwave_hbf.types import ClusterChannelParams, SystemConfig


def _realization(mats: list[np.ndarray]) -> ChannelRealization:
    empty = np.zeros((1, 1))
    rays = UserRays(path_loss_linear=1.0, gains=empty.astype(complex), aod=empty, aoa=empty)
    return ChannelRealization(
        per_user_matrix=tuple(np.asarray(m, dtype=complex) for m in mats),
        per_user_rays=tuple(rays for _ in mats),
    )


def _bisection_level(gains: np.ndarray, total: float, noise: float) -> float:
    lo, hi = 0.0, total + float(np.max(noise / gains[gains > 0]))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        used = float(np.sum(np.maximum(0.0, mid - noise / gains[gains > 0])))
        if used > total:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _rate(gains: np.ndarray, p: np.ndarray, noise: float) -> float:
    return float(np.sum(np.log2(1.0 + gains * p / noise)))


def test_waterfill_symmetric_gains_split_evenly() -> None:
    assert np.allclose(waterfill(np.array([1.0, 1.0]), 2.0, 1.0), [1.0, 1.0])


def test_waterfill_single_stream_takes_all_power() -> None:
    assert np.allclose(waterfill(np.array([0.3]), 5.0, 2.0), [5.0])


def test_waterfill_matches_bisection_oracle() -> None:
    gains = np.array([4.0, 1.0])
    p = waterfill(gains, 1.0, 1.0)
    mu = _bisection_level(gains, 1.0, 1.0)
    expected = np.maximum(0.0, mu - 1.0 / gains)
    assert np.allclose(p, expected, atol=1e-12)
    # 4 - 1 的水位差大于总功率，只剩最强流。
    assert p[1] == 0.0


def test_waterfill_kkt_on_random_gains() -> None:
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        gains = rng.exponential(1.0, n)
        total = float(rng.uniform(0.1, 10.0))
        noise = float(rng.uniform(0.05, 5.0))
        p = waterfill(gains, total, noise)
        assert math.isclose(float(np.sum(p)), total, rel_tol=1e-9)
        active = p > 0
        level = noise / gains[active] + p[active]
        assert np.max(level) - np.min(level) <= 1e-9 * max(1.0, float(np.max(level)))
        assert np.all(noise / gains[~active] >= np.max(level) - 1e-9)


def test_waterfill_agrees_with_grid_search() -> None:
    rng = np.random.default_rng(7)
    grid = np.linspace(0.0, 1.0, 20001)
    for _ in range(50):
        gains = rng.uniform(0.01, 5.0, 2)
        p = waterfill(gains, 1.0, 1.0)
        best = max(
            _rate(gains, np.array([x, 1.0 - x]), 1.0) for x in grid
        )
        assert abs(_rate(gains, p, 1.0) - best) <= 1e-6


def test_waterfill_rejects_bad_inputs() -> None:
    with pytest.raises(NoUsableStreamError):
        waterfill(np.zeros(3), 1.0, 1.0)
    with pytest.raises(InvalidNoiseError):
        waterfill(np.ones(2), 1.0, 0.0)
    with pytest.raises(ValueError):
        waterfill(np.array([1.0, -1.0]), 1.0, 1.0)


def test_svd_stage_diagonal_channel() -> None:
    cfg = SystemConfig(n_tx=4, n_rf=2, n_rx=2, n_users=1, n_streams=2, noise_power_dbm=0.0)
    h = np.zeros((2, 4))
    h[0, 0], h[1, 1] = 3.0, 2.0
    fd = svd_stage(_realization([h]), cfg)

    assert np.allclose(np.abs(fd.combiners[0]), np.eye(2))
    assert np.allclose(fd.beamformers[0][2:, :], 0.0)
    assert np.allclose(fd.singular_values[0], [3.0, 2.0])


def test_svd_stage_single_stream_takes_all_power() -> None:
    cfg = SystemConfig(n_tx=8, n_rf=1, n_rx=2, n_users=1, n_streams=1, target_snr_db=5.0)
    ch = generate_channel(cfg, ClusterChannelParams(), np.random.default_rng(1))
    fd = svd_stage(ch, cfg)
    assert math.isclose(fd.user_powers[0], cfg.total_power_w, rel_tol=1e-12)
    v = np.linalg.svd(ch.per_user_matrix[0])[2][0].conj()
    f = fd.beamformers[0][:, 0] / np.linalg.norm(fd.beamformers[0])
    assert abs(abs(np.vdot(v, f)) - 1.0) < 1e-10


def test_svd_stage_diagonalizes_effective_channel(default_cfg) -> None:
    ch = generate_channel(default_cfg, ClusterChannelParams(), np.random.default_rng(3))
    fd = svd_stage(ch, default_cfg)
    total = 0.0
    for h, w, f, s, p in zip(
        ch.per_user_matrix, fd.combiners, fd.beamformers, fd.singular_values, fd.stream_powers
    ):
        eff = w.conj().T @ h @ f
        assert np.allclose(eff, np.diag(s * np.sqrt(p)), atol=1e-9 * float(s[0]))
        assert np.allclose(w.conj().T @ w, np.eye(2), atol=1e-12)
        total += float(np.linalg.norm(f) ** 2)
    assert math.isclose(total, default_cfg.total_power_w, rel_tol=1e-9)


def test_svd_stage_phase_convention(small_cfg) -> None:
    ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(8))
    fd = svd_stage(ch, small_cfg)
    for f, p in zip(fd.beamformers, fd.stream_powers):
        for i in range(f.shape[1]):
            if p[i] <= 0:
                continue
            col = f[:, i]
            pivot = col[int(np.argmax(np.abs(col)))]
            assert abs(pivot.imag) < 1e-12 * abs(pivot)
            assert pivot.real > 0


def test_svd_stage_rank_deficient_user() -> None:
    cfg = SystemConfig(n_tx=4, n_rf=4, n_rx=2, n_users=2, n_streams=2, target_snr_db=0.0)
    good = np.eye(2, 4)
    bad = np.outer([1.0, 1.0], [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(DegenerateChannelError) as ei:
        svd_stage(_realization([good, bad]), cfg)
    assert ei.value.user == 1


def test_single_user_rate_equals_waterfilling_capacity() -> None:
    cfg = SystemConfig(n_tx=16, n_rf=2, n_rx=2, n_users=1, n_streams=2, target_snr_db=10.0)
    ch = generate_channel(cfg, ClusterChannelParams(), np.random.default_rng(12))
    fd = svd_stage(ch, cfg)
    report = evaluate(ch, fd.combiners, fd.beamformers, fd.noise_power)
    s = fd.singular_values[0]
    capacity = _rate(s**2, fd.stream_powers[0], fd.noise_power)
    assert abs(report.mean_se - capacity) < 1e-9
