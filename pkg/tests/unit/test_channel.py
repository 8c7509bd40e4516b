import struct

import numpy as np
import pytest

from hybridbf.channel import (
    HEADER_SIZE,
    MAGIC,
    channel_matrix,
    draw_paths,
    expected_channel_power,
    generate_channel_tensor,
    load_channel_file,
    save_channel_file,
)
from hybridbf.errors import ChannelFormatError
from hybridbf.types import ArrayGeometry, ChannelConfig, ChannelTensor, ElementPattern, FrequencyGrid, PathSet

F0 = 60e9
GRID = FrequencyGrid(58.32e9, 5.15625e6, 512)
AP16 = ArrayGeometry(16, 0.5, F0)
UE16 = ArrayGeometry(16, 0.5, F0)


def test_draw_paths_single_path_shapes():
    rng = np.random.default_rng(1)
    paths = draw_paths(rng, ChannelConfig())
    assert paths.num_paths == 1
    assert 0 <= paths.aod[0] <= np.pi and 0 <= paths.aoa[0] <= np.pi


def test_three_path_profile_variances():
    cfg = ChannelConfig(3, (0.0, -10.0, -10.0))
    np.testing.assert_allclose(cfg.path_variances, np.array([1, 0.1, 0.1]) / 1.2)
    assert cfg.path_variances.sum() == pytest.approx(1.0)


def test_path_gain_statistics():
    rng = np.random.default_rng(7)
    gains = np.concatenate([draw_paths(rng, ChannelConfig()).gains for _ in range(10_000)])
    # sample mean of CN(0,1) has std 1/sqrt(2N) per component
    assert abs(gains.mean().real) < 3 / np.sqrt(2 * 10_000)
    assert abs(gains.mean().imag) < 3 / np.sqrt(2 * 10_000)
    assert np.mean(np.abs(gains) ** 2) == pytest.approx(1.0, rel=0.05)


def test_scalar_channel_composes():
    paths = PathSet(np.array([1.0]), np.array([2.0]), np.array([0.3 - 0.4j]))
    one = ArrayGeometry(1, 0.5, F0)
    H = channel_matrix(paths, one, one, 0.0, F0)
    expected = (0.3 - 0.4j) * (2 * np.sin(2.0)) * (2 * np.sin(1.0))
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(expected)


def test_single_path_no_coupling_is_rank_one():
    rng = np.random.default_rng(2)
    tensor, _ = generate_channel_tensor(rng, ChannelConfig(coupling_amplitude=0.0), 1, GRID, AP16, UE16, [1, 257, 512])
    for H in tensor.matrices[0]:
        assert np.linalg.matrix_rank(H, tol=1e-9 * np.linalg.norm(H)) == 1


def test_tensor_shape_and_determinism():
    cfg = ChannelConfig()
    a, _ = generate_channel_tensor(np.random.default_rng(5), cfg, 2, GRID, AP16, UE16, [1, 100])
    b, _ = generate_channel_tensor(np.random.default_rng(5), cfg, 2, GRID, AP16, UE16, [1, 100])
    assert a.matrices.shape == (2, 2, 16, 16)
    np.testing.assert_array_equal(a.matrices, b.matrices)


def test_full_band_tensor_counts():
    small = ArrayGeometry(2, 0.5, F0)
    tensor, paths = generate_channel_tensor(np.random.default_rng(0), ChannelConfig(), 2, GRID, small, small)
    assert tensor.matrices.shape[:2] == (2, 512)
    assert len(paths) == 2


def test_uplink_is_transpose():
    tensor, _ = generate_channel_tensor(np.random.default_rng(3), ChannelConfig(), 1, GRID, AP16, UE16, [10])
    np.testing.assert_array_equal(tensor.uplink(0)[0], tensor.matrices[0, 0].T)


def test_coupling_perturbation_is_small():
    # near endfire the coupling adds coherently, so only the typical draw is bounded
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(200):
        paths = draw_paths(rng, ChannelConfig())
        H0 = channel_matrix(paths, AP16, UE16, 0.0, F0)
        Hc = channel_matrix(paths, AP16, UE16, 0.1, F0)
        ratios.append(np.linalg.norm(Hc - H0) / np.linalg.norm(H0))
    assert np.median(ratios) < 1


def test_coupling_perturbation_at_broadside():
    paths = PathSet(np.array([np.pi / 2]), np.array([np.pi / 2]), np.array([1.0 + 0j]))
    H0 = channel_matrix(paths, AP16, UE16, 0.0, F0)
    Hc = channel_matrix(paths, AP16, UE16, 0.1, F0)
    assert np.linalg.norm(Hc - H0) / np.linalg.norm(H0) < 0.5


def test_channel_matrix_frequency_stack():
    paths = draw_paths(np.random.default_rng(12), ChannelConfig(num_paths=2, power_profile_db=(0.0, -3.0)))
    freqs = np.array([57.0e9, 58.32e9, 59.6e9])
    stack = channel_matrix(paths, AP16, UE16, 0.1, freqs)
    assert stack.shape == (3, 16, 16)
    for i, f in enumerate(freqs):
        np.testing.assert_allclose(stack[i], channel_matrix(paths, AP16, UE16, 0.1, f), atol=1e-12)


def test_expected_channel_power_closed_form_without_coupling():
    # E[F^2] = 2 for F = 2 sin(theta) on [0, pi]
    value = expected_channel_power(ChannelConfig(coupling_amplitude=0.0), AP16, UE16, F0)
    assert value == pytest.approx(4 * 16 * 16, rel=1e-6)


def test_expected_channel_power_isotropic():
    value = expected_channel_power(ChannelConfig(coupling_amplitude=0.0), AP16, UE16, F0, pattern=None)
    assert value == pytest.approx(16 * 16, rel=1e-6)


def test_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    m = rng.standard_normal((2, 4, 3, 5)) + 1j * rng.standard_normal((2, 4, 3, 5))
    tensor = ChannelTensor(m, np.arange(1, 5), 4)
    path = tmp_path / "h.bin"
    save_channel_file(tensor, path)
    assert path.stat().st_size == HEADER_SIZE + m.size * 16
    loaded = load_channel_file(path)
    np.testing.assert_array_equal(loaded.matrices, m)
    np.testing.assert_array_equal(loaded.subcarriers, np.arange(1, 5))


def _write(path, dims, n_entries, extra=b""):
    body = MAGIC + struct.pack("<4I", *dims) + b"\x00" * (16 * n_entries) + extra
    path.write_bytes(body)


def test_payload_size_matches_header(tmp_path):
    path = tmp_path / "big.bin"
    dims = (4, 512, 32, 32)
    _write(path, dims, 4 * 512 * 32 * 32)
    assert path.stat().st_size - HEADER_SIZE == 4 * 512 * 32 * 32 * 16
    assert load_channel_file(path).matrices.shape == dims


def test_bad_magic(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
    with pytest.raises(ChannelFormatError) as e:
        load_channel_file(path)
    assert e.value.byte_offset == 0


def test_truncated_header(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(MAGIC + b"\x01\x00")
    with pytest.raises(ChannelFormatError) as e:
        load_channel_file(path)
    assert e.value.byte_offset == 10


def test_truncated_payload(tmp_path):
    path = tmp_path / "x.bin"
    _write(path, (1, 2, 2, 2), 5)
    with pytest.raises(ChannelFormatError) as e:
        load_channel_file(path)
    assert e.value.byte_offset == HEADER_SIZE + 5 * 16


def test_zero_dimension(tmp_path):
    path = tmp_path / "x.bin"
    _write(path, (1, 0, 2, 2), 0)
    with pytest.raises(ChannelFormatError) as e:
        load_channel_file(path)
    assert e.value.byte_offset == 12


def test_dimension_overflow(tmp_path):
    path = tmp_path / "x.bin"
    _write(path, (2**32 - 1, 2**32 - 1, 16, 16), 0)
    with pytest.raises(ChannelFormatError, match="overflow"):
        load_channel_file(path)


def test_trailing_bytes(tmp_path):
    path = tmp_path / "x.bin"
    _write(path, (1, 1, 1, 1), 1, extra=b"\x00")
    with pytest.raises(ChannelFormatError) as e:
        load_channel_file(path)
    assert e.value.byte_offset == HEADER_SIZE + 16


def test_subcarrier_count_mismatch(tmp_path):
    path = tmp_path / "x.bin"
    _write(path, (1, 4, 2, 2), 16)
    with pytest.raises(ChannelFormatError) as e:
        load_channel_file(path, expected=(None, 512, 2, 2))
    assert e.value.byte_offset == 12
