import numpy as np
import pytest

from hybridbf.array import (
    angle_grid,
    array_response,
    beam_peak_cosine,
    coupling_matrix,
    element_gain,
    pattern_argmax,
    radiation_pattern,
    subcarrier_frequency,
)
from hybridbf.codebook import orthogonal_beamformer
from hybridbf.errors import CodebookIndexError, ShapeError
from hybridbf.types import ArrayGeometry, CouplingModel, ElementPattern, FrequencyGrid

F0 = 60e9
GRID = FrequencyGrid(58.32e9, 5.15625e6, 512)


def test_subcarrier_frequency_center_and_edges():
    assert subcarrier_frequency(GRID, 257) == pytest.approx(58.32e9)
    assert subcarrier_frequency(GRID, 1) == pytest.approx(57.0e9)
    assert subcarrier_frequency(GRID, 512) == pytest.approx(58.32e9 + 255 * 5.15625e6)


def test_subcarrier_frequency_increasing():
    f = subcarrier_frequency(GRID, np.arange(1, 513))
    assert np.all(np.diff(f) > 0)


@pytest.mark.parametrize("k", [0, 513])
def test_subcarrier_frequency_out_of_range(k):
    with pytest.raises(CodebookIndexError):
        subcarrier_frequency(GRID, k)


def test_element_gain_values():
    pattern = ElementPattern()
    assert element_gain(pattern, np.pi / 2) == pytest.approx(2.0)
    assert element_gain(pattern, 3 * np.pi / 2) == pytest.approx(0.01)
    assert element_gain(pattern, np.pi / 6) == pytest.approx(1.0)
    # angles are reduced mod 2*pi first
    assert element_gain(pattern, np.pi / 2 + 2 * np.pi) == pytest.approx(2.0)
    assert element_gain(None, 3 * np.pi / 2) == 1.0


def test_array_response_broadside():
    a = array_response(ArrayGeometry(2, 0.5, F0), ElementPattern(), F0, np.pi / 2)
    np.testing.assert_allclose(a, [2, 2], atol=1e-12)


def test_array_response_endfire_is_nulled_by_element():
    # the front interval is closed, so theta = 0 takes the 2 sin(theta) branch
    a = array_response(ArrayGeometry(3, 0.5, F0), ElementPattern(), F0, 0.0)
    np.testing.assert_allclose(np.abs(a), 0.0, atol=1e-15)


def test_array_response_endfire_phase():
    a = array_response(ArrayGeometry(3, 0.5, F0), None, F0, 0.0)
    m = np.arange(1, 4)
    np.testing.assert_allclose(a, np.exp(1j * np.pi * (m - 2)), atol=1e-12)


def test_array_response_back_lobe():
    a = array_response(ArrayGeometry(3, 0.5, F0), ElementPattern(), F0, 3 * np.pi / 2)
    np.testing.assert_allclose(a, [0.01, 0.01, 0.01], atol=1e-12)


def test_array_response_frequency_stack():
    geom = ArrayGeometry(8, 0.5, F0)
    freqs = np.array([0.95, 1.0, 1.02]) * F0
    theta = np.array([0.4, 1.3])
    stack = array_response(geom, ElementPattern(), freqs, theta)
    assert stack.shape == (3, 8, 2)
    for i, f in enumerate(freqs):
        np.testing.assert_allclose(stack[i], array_response(geom, ElementPattern(), f, theta))


def test_array_response_phase_step_with_squint():
    geom = ArrayGeometry(16, 0.5, F0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        theta = rng.uniform(0, np.pi)
        f_k = F0 * rng.uniform(0.9, 1.1)
        a = array_response(geom, ElementPattern(), f_k, theta)
        expected = np.exp(1j * 2 * np.pi * 0.5 * (f_k / F0) * np.cos(theta))
        np.testing.assert_allclose(a[1:] / a[:-1], expected, atol=1e-9)
        np.testing.assert_allclose(np.abs(a), 2 * np.sin(theta), rtol=1e-12)


def test_array_response_squint_slope():
    a = array_response(ArrayGeometry(16, 0.5, F0), ElementPattern(), 1.02 * F0, np.pi / 3)
    step = np.angle(a[1] / a[0])
    assert step == pytest.approx(0.51 * np.pi)


def test_array_response_grid_shape():
    a = array_response(ArrayGeometry(8, 0.5, F0), ElementPattern(), F0, angle_grid(64))
    assert a.shape == (8, 64)


def test_coupling_matrix_structure():
    geom = ArrayGeometry(6, 0.5, F0)
    S = coupling_matrix(geom, CouplingModel(0.1), 1.01 * F0)
    np.testing.assert_array_equal(np.diag(S), 0)
    for m in range(6):
        for mp in range(6):
            if m != mp:
                assert abs(S[m, mp]) * abs(m - mp) == pytest.approx(0.1, rel=1e-12)
    assert abs(S[0, 1]) == pytest.approx(0.1)
    assert abs(S[0, 2]) == pytest.approx(0.05)
    np.testing.assert_allclose(S, S.T)


def test_coupling_matrix_frequency_stack():
    geom = ArrayGeometry(6, 0.5, F0)
    freqs = np.array([0.96, 1.01]) * F0
    stack = coupling_matrix(geom, CouplingModel(0.1), freqs)
    assert stack.shape == (2, 6, 6)
    np.testing.assert_allclose(stack[1], coupling_matrix(geom, CouplingModel(0.1), 1.01 * F0))


def test_radiation_pattern_shape_error():
    geom = ArrayGeometry(8, 0.5, F0)
    with pytest.raises(ShapeError):
        radiation_pattern(geom, None, np.ones(4), F0, angle_grid(16))
    with pytest.raises(ShapeError):
        radiation_pattern(geom, None, np.ones(8), F0, [])


@pytest.mark.parametrize("f_k", [F0, 57.0e9, 59.635e9])
def test_broadside_beam_peak_is_squint_free(f_k):
    geom = ArrayGeometry(16, 0.5, F0)
    p = orthogonal_beamformer(16, 9).coefficients
    assert pattern_argmax(geom, p, f_k) == pytest.approx(np.pi / 2)


def test_b13_of_16_points_at_120_degrees():
    geom = ArrayGeometry(16, 0.5, F0)
    p = orthogonal_beamformer(16, 13).coefficients
    assert beam_peak_cosine(16, 13, F0, F0) == pytest.approx(-0.5)
    theta = pattern_argmax(geom, p, F0, pattern=None)
    assert np.cos(theta) == pytest.approx(-0.5, abs=2 * np.pi / 2048)


@pytest.mark.parametrize("M", [8, 16, 32])
@pytest.mark.parametrize("k", [1, 512])
def test_beam_squint_closed_form(M, k):
    geom = ArrayGeometry(M, 0.5, F0)
    f_k = subcarrier_frequency(GRID, k)
    grid = angle_grid(2048)
    cell = np.pi / 2048
    for m in range(1, M + 1):
        p = orthogonal_beamformer(M, m).coefficients
        psi = radiation_pattern(geom, None, p, f_k, grid, pattern=None)
        theta_hat = grid[int(np.argmax(np.abs(psi) ** 2))]
        expected = np.arccos(beam_peak_cosine(M, m, f_k, F0))
        if m == 1:
            # endfire beam: grating pair at 0 and pi
            assert abs(np.cos(theta_hat)) == pytest.approx(abs(np.cos(expected)), abs=1e-3)
        else:
            assert abs(theta_hat - expected) <= cell + 1e-12


def test_squint_scales_with_frequency():
    M, m = 16, 5
    low = beam_peak_cosine(M, m, 57.0e9, F0)
    high = beam_peak_cosine(M, m, 59.635e9, F0)
    assert low * 57.0e9 == pytest.approx(high * 59.635e9)
