import numpy as np
import pytest

from mmwave_hbf.channel import generate_channel
from mmwave_hbf.channel_io import (
    dump_channel,
    inspect_channel,
    load_channel,
    parse_channel,
    print_channel_info,
    save_channel,
)
from mmwave_hbf.errors import ChannelFormatError
from mmwave_hbf.types import ClusterChannelParams


def _small_channel(cfg, seed: int = 4):
    params = ClusterChannelParams(n_clusters=2, n_rays=3)
    return generate_channel(cfg, params, np.random.default_rng(seed), seed=seed)


def test_save_and_load_channel_is_lossless(tmp_path, small_cfg) -> None:
    ch = _small_channel(small_cfg)
    path = tmp_path / "ch.txt"
    save_channel(str(path), ch)
    back = load_channel(str(path))

    assert back.seed == 4
    assert back.antenna_spacing == ch.antenna_spacing
    for a, b in zip(ch.per_user_matrix, back.per_user_matrix):
        assert np.array_equal(a, b)
    for ra, rb in zip(ch.per_user_rays, back.per_user_rays):
        assert np.array_equal(ra.gains, rb.gains)
        assert np.array_equal(ra.aod, rb.aod)
        assert np.array_equal(ra.aoa, rb.aoa)
        assert ra.path_loss_linear == rb.path_loss_linear


def test_dump_channel_starts_with_header(small_cfg) -> None:
    text = dump_channel(_small_channel(small_cfg))
    assert text.splitlines()[0] == "# mmwave-hbf channel v1"
    assert text.rstrip().endswith("end")


def test_parse_channel_reports_line_of_bad_seed() -> None:
    with pytest.raises(ChannelFormatError) as ei:
        parse_channel("# mmwave-hbf channel v1\nseed = abc\n")
    assert ei.value.line == 2
    assert "line 2" in str(ei.value)


def test_parse_channel_rejects_missing_header() -> None:
    with pytest.raises(ChannelFormatError) as ei:
        parse_channel("seed = 1\n")
    assert ei.value.line == 1


def test_parse_channel_rejects_short_row(small_cfg) -> None:
    lines = dump_channel(_small_channel(small_cfg)).splitlines()
    idx = next(i for i, line in enumerate(lines) if line.startswith("row = "))
    lines[idx] = "row = 1 2 3"
    with pytest.raises(ChannelFormatError) as ei:
        parse_channel("\n".join(lines))
    assert ei.value.line == idx + 1


def test_parse_channel_rejects_truncated_file(small_cfg) -> None:
    lines = dump_channel(_small_channel(small_cfg)).splitlines()
    with pytest.raises(ChannelFormatError):
        parse_channel("\n".join(lines[:-1]))


def test_inspect_channel_reports_rank_and_norm(tmp_path, small_cfg, capsys) -> None:
    ch = _small_channel(small_cfg)
    path = tmp_path / "ch.txt"
    save_channel(str(path), ch)

    info = inspect_channel(str(path))
    assert info.n_users == 2
    assert (info.n_rx, info.n_tx) == (2, 16)
    for u, h in zip(info.users, ch.per_user_matrix):
        assert u.rank == np.linalg.matrix_rank(h)
        assert abs(u.frobenius_norm - np.linalg.norm(h)) < 1e-12
        assert u.n_paths == 6

    print_channel_info(info)
    out = capsys.readouterr().out
    assert "Channel Info:" in out
    assert "N_T=16" in out


def test_inspect_channel_missing_file(tmp_path) -> None:
    with pytest.raises(FileNotFoundError):
        inspect_channel(str(tmp_path / "missing.txt"))
