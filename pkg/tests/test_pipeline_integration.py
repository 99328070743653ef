import math

import numpy as np
import pytest

from mmwave_hbf.channel import generate_channel
from mmwave_hbf.fully_digital import svd_stage
from mmwave_hbf.metrics import evaluate
from mmwave_hbf.nsp import null_space_basis, projector
from mmwave_hbf.pipeline import METHODS, design_hybrid
from mmwave_hbf.types import ClusterChannelParams, SystemConfig


@pytest.mark.parametrize("method", METHODS)
def test_design_shapes_and_power(small_cfg, method: str) -> None:
    ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(0))
    design = design_hybrid(ch, small_cfg, method=method, rng=np.random.default_rng(1))

    assert design.method == method
    assert len(design.beamformers) == small_cfg.n_users
    assert all(f.shape == (16, 2) for f in design.beamformers)
    assert all(w.shape == (2, 2) for w in design.combiners)
    total = sum(float(np.linalg.norm(f) ** 2) for f in design.beamformers)
    assert math.isclose(total, small_cfg.total_power_w, rel_tol=1e-9)
    if method == "fully_digital":
        assert design.stage2 is None and design.hybrid is None
    else:
        design.hybrid.analog.check()


def test_fixed_method_keeps_contiguous_blocks(small_cfg) -> None:
    ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(2))
    design = design_hybrid(ch, small_cfg, method="fixed", rng=np.random.default_rng(3))
    assert list(design.hybrid.analog.chain_of_antenna) == [i // 2 for i in range(16)]


def test_stage1_is_reused_when_given(small_cfg) -> None:
    ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(4))
    fd = svd_stage(ch, small_cfg)
    for method in METHODS:
        design = design_hybrid(
            ch, small_cfg, method=method, rng=np.random.default_rng(5), stage1=fd
        )
        assert design.stage1 is fd


def test_unknown_method_is_rejected(small_cfg) -> None:
    ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(6))
    with pytest.raises(ValueError):
        design_hybrid(ch, small_cfg, method="analog_only", rng=np.random.default_rng(0))


def test_hybrid_never_beats_interference_free_digital(small_cfg) -> None:
    for seed in range(5):
        ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(seed))
        fd = svd_stage(ch, small_cfg)
        upper = evaluate(
            ch, fd.combiners, fd.beamformers, fd.noise_power, include_interference=False
        )
        for method in ("dynamic", "fixed"):
            design = design_hybrid(
                ch, small_cfg, method=method, rng=np.random.default_rng(seed), stage1=fd
            )
            report = evaluate(ch, design.combiners, design.beamformers, fd.noise_power)
            for got, bound in zip(report.per_user_se, upper.per_user_se):
                assert got <= bound + 1e-9


def test_full_connection_reproduces_digital_targets() -> None:
    cfg = SystemConfig(n_tx=8, n_rf=8, n_rx=2, n_users=2, n_streams=2, target_snr_db=10.0)
    ch = generate_channel(cfg, ClusterChannelParams(), np.random.default_rng(7))
    design = design_hybrid(ch, cfg, rng=np.random.default_rng(8))

    assert design.stage2.approximation_error <= 1e-10
    for f, target in zip(design.stage2.overall(), design.stage1.beamformers):
        assert np.allclose(f, target, atol=1e-6)


def test_full_connection_matches_projected_digital_rate() -> None:
    cfg = SystemConfig(n_tx=8, n_rf=8, n_rx=2, n_users=2, n_streams=2, target_snr_db=10.0)
    for seed in range(5):
        ch = generate_channel(cfg, ClusterChannelParams(), np.random.default_rng(20 + seed))
        fd = svd_stage(ch, cfg)
        design = design_hybrid(ch, cfg, rng=np.random.default_rng(seed), stage1=fd)
        assert design.stage2.approximation_error <= 1e-10

        # 全连接时 F_RF 为带相位的置换矩阵，混合设计等价于在天线域直接做零空间投影。
        effective = [w.conj().T @ h for w, h in zip(fd.combiners, ch.per_user_matrix)]
        reference = []
        for k, (target, p) in enumerate(zip(fd.beamformers, fd.user_powers)):
            others = np.vstack([g for i, g in enumerate(effective) if i != k])
            f = projector(null_space_basis(others)) @ target
            reference.append(f * math.sqrt(p) / float(np.linalg.norm(f)))
        bound = evaluate(ch, fd.combiners, reference, fd.noise_power, include_interference=False)
        got = evaluate(ch, design.combiners, design.beamformers, fd.noise_power)
        for a, b in zip(got.per_user_se, bound.per_user_se):
            assert abs(a - b) <= 1e-6


def test_block_start_reaches_dynamic_stage(small_cfg) -> None:
    ch = generate_channel(small_cfg, ClusterChannelParams(), np.random.default_rng(11))
    fd = svd_stage(ch, small_cfg)
    block = design_hybrid(
        ch, small_cfg, rng=np.random.default_rng(4), stage1=fd, dynamic_init="block"
    )
    fixed = design_hybrid(ch, small_cfg, method="fixed", rng=np.random.default_rng(4), stage1=fd)
    assert block.stage2.initial_error == fixed.stage2.initial_error
    block.hybrid.analog.check()


def test_dynamic_design_at_default_dimensions(default_cfg) -> None:
    ch = generate_channel(default_cfg, ClusterChannelParams(), np.random.default_rng(9))
    design = design_hybrid(ch, default_cfg, rng=np.random.default_rng(10))
    report = evaluate(ch, design.combiners, design.beamformers, design.stage1.noise_power)

    assert design.hybrid.analog.n_rf == 16
    assert report.mean_se > 0
    assert max(report.iui_power) <= 1e-12 * default_cfg.total_power_w * max(
        float(np.linalg.norm(h) ** 2) for h in ch.per_user_matrix
    )
