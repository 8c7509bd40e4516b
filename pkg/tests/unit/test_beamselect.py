import numpy as np
import pytest

from hybridbf.beamselect import (
    build_analog_matrix,
    computational_cost,
    full_beam_selection,
    stage1_uplink,
    stage2_downlink,
    stage3_downlink,
    training_overhead,
)
from hybridbf.codebook import build_codebooks, build_orthogonal_set
from hybridbf.errors import ConfigError, InfeasibleError
from hybridbf.signal import check_analog_matrix, gen_training, pilot_indices
from hybridbf.types import ChannelTensor, LinkBudget

K = 8
PILOTS = pilot_indices(K, 2)
NOISELESS = LinkBudget(1.0, 0.0)


def _codeword_channel(ap_beam, sta_beam, M_ap=16, M_ue=16, users=1):
    """H = g0 p0^H on every subcarrier: the objective peaks only at (ap_beam, sta_beam)."""
    p0 = build_orthogonal_set(M_ap)[ap_beam]
    g0 = build_orthogonal_set(M_ue)[sta_beam] if M_ue > 1 else np.ones(1, dtype=complex)
    H = np.outer(g0, p0.conj())
    matrices = np.broadcast_to(H, (users, K, M_ue, M_ap)).copy()
    return ChannelTensor(matrices, np.arange(1, K + 1), K)


def _training(seed=0):
    return gen_training(np.random.default_rng(seed), PILOTS, 16, K)


class TestOverhead:
    def test_full_mode_counts(self):
        assert training_overhead(16, 4, 16, 8) == 43
        assert training_overhead(32, 4, 32, 8) == 77

    def test_other_modes(self):
        assert training_overhead(16, 4, 1, 1, "single_antenna_sta") == 4
        assert training_overhead(16, 4, 16, 16, "single_user_exhaustive_sta") == 4 * 16 + 16

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            training_overhead(16, 4, 16, 8, "bogus")

    def test_computational_cost(self):
        assert computational_cost(16, 4, 8, 16) == 16**2 * 4 * 8
        assert computational_cost(16, 4, 8, 16, users=2) == 2 * 16**2 * 4 * 8


def test_noiseless_full_mode_finds_codeword_pair():
    books = build_codebooks(16, 4, 16, 8)
    result = full_beam_selection(
        _codeword_channel(7, 5), books, _training(), NOISELESS, np.random.default_rng(1), keep_log=True
    )
    sel = result.users[0]
    assert (sel.ap_beam_index, sel.sta_beam_index) == (7, 5)
    assert sel.stage1.m_star == 2 and sel.stage1.n_star == 3
    assert sel.m_prime_star == 3
    assert sel.training_count == 43 == result.training_count
    assert len(result.log) == 43
    assert [r.stage for r in result.log].count("stage3") == 3
    np.testing.assert_allclose(sel.p_star, books.ap_base[7])
    np.testing.assert_allclose(sel.g_star, books.sta_base[5])


def test_high_snr_projected_path_matches_noiseless():
    books = build_codebooks(16, 4, 16, 8)
    budget = LinkBudget.from_snr_db(40)
    result = full_beam_selection(
        _codeword_channel(12, 9), books, _training(), budget, np.random.default_rng(2), "projected"
    )
    assert (result.users[0].ap_beam_index, result.users[0].sta_beam_index) == (12, 9)


def test_exhaustive_sta_mode():
    books = build_codebooks(16, 4, 16, 8, "single_user_exhaustive_sta")
    result = full_beam_selection(_codeword_channel(3, 10), books, _training(), NOISELESS, np.random.default_rng(3))
    sel = result.users[0]
    assert (sel.ap_beam_index, sel.sta_beam_index) == (3, 10)
    assert sel.training_count == 80
    assert "exhaustive" in sel.stage_objectives


def test_single_antenna_mode_stage1_only():
    books = build_codebooks(16, 4, 16, 8, "single_antenna_sta")
    channel = _codeword_channel(14, 1, M_ue=1)
    result = full_beam_selection(channel, books, _training(), NOISELESS, np.random.default_rng(4))
    sel = result.users[0]
    assert (sel.ap_beam_index, sel.sta_beam_index) == (14, 1)
    assert sel.training_count == 4
    assert sel.m_prime_star is None and sel.n_prime_star is None


def test_stage1_ties_take_lowest_index():
    books = build_codebooks(16, 4, 16, 8)
    zero = np.zeros((len(PILOTS), 16, 16), dtype=complex)
    s1 = stage1_uplink(zero, books, _training(), NOISELESS, np.random.default_rng(0))
    assert (s1.m_star, s1.n_star, s1.m_prime_star_stage1, s1.ap_beam_index) == (1, 1, 1, 1)
    assert s1.transmissions == 32


def test_downlink_stages_refine_the_sta_beam():
    books = build_codebooks(16, 4, 16, 8)
    H = _codeword_channel(7, 5).restrict(PILOTS).matrices[0]
    rng = np.random.default_rng(5)
    s1 = stage1_uplink(H, books, _training(), NOISELESS, rng)
    log = []
    m_prime, sectors = stage2_downlink(H, s1.P_star, books.sta_sector, _training(), NOISELESS, rng, log=log)
    assert m_prime == 3 and sectors.shape == (8,)
    assert int(np.argmax(sectors)) == 2
    n_prime, sta_index, g_star, narrow = stage3_downlink(
        H, s1.P_star, m_prime, books.sta_narrow, _training(), NOISELESS, rng, log=log
    )
    # sector 3 holds narrow beams 4, 5, 6
    assert (n_prime, sta_index) == (2, 5)
    assert narrow.shape == (3,)
    np.testing.assert_allclose(g_star, books.sta_base[5])
    assert [r.stage for r in log] == ["stage2"] * 8 + ["stage3"] * 3
    assert [r.sta_index for r in log[8:]] == [4, 5, 6]


def test_selection_rejects_mismatched_channel():
    books = build_codebooks(16, 4, 16, 8)
    with pytest.raises(ConfigError):
        full_beam_selection(_codeword_channel(1, 1, M_ap=8, M_ue=16), books, _training(), NOISELESS,
                            np.random.default_rng(0))


class TestAnalogMatrix:
    def test_two_users_fill_contiguous_blocks(self):
        B = build_orthogonal_set(16)
        P = build_analog_matrix([B[2], B[9]], 4, [2, 9])
        np.testing.assert_allclose(P[:, 0], B[2] / 2)
        np.testing.assert_allclose(P[:, 1], B[2] / 2)
        np.testing.assert_allclose(P[:, 2], B[9] / 2)
        np.testing.assert_allclose(P[:, 3], B[9] / 2)
        check_analog_matrix(P)

    def test_three_users_first_takes_remainder(self):
        B = build_orthogonal_set(16)
        P = build_analog_matrix([B[1], B[2], B[3]], 4)
        np.testing.assert_allclose(P[:, 1], B[1] / 2)
        np.testing.assert_allclose(P[:, 2], B[2] / 2)
        np.testing.assert_allclose(P[:, 3], B[3] / 2)

    def test_full_load_has_rank_n_rf(self):
        B = build_orthogonal_set(16)
        P = build_analog_matrix([B[1], B[5], B[9], B[13]], 4, [1, 5, 9, 13])
        assert np.linalg.matrix_rank(P) == 4

    def test_duplicate_beams_are_infeasible(self):
        B = build_orthogonal_set(16)
        with pytest.raises(InfeasibleError, match="share AP beam 5"):
            build_analog_matrix([B[5], B[5]], 4, [5, 5])
        with pytest.raises(InfeasibleError):
            build_analog_matrix([B[5], B[5]], 4)

    def test_too_many_users(self):
        B = build_orthogonal_set(16)
        with pytest.raises(InfeasibleError):
            build_analog_matrix([B[1], B[2], B[3]], 2)
