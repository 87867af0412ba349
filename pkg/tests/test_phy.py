import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from marcsim.phy import CombinedStatistic, ContractViolation, bpsk_demodulate_hard, bpsk_modulate, mrc_combine


def test_bpsk_mapping():
    assert_allclose(bpsk_modulate([0, 1, 1, 0], p=4.0), [2.0, -2.0, -2.0, 2.0])
    with pytest.raises(ContractViolation):
        bpsk_modulate([0], p=0.0)


def test_hard_decision_roundtrip_and_tie():
    bits = np.random.default_rng(0).integers(0, 2, (3, 40))
    assert_array_equal(bpsk_demodulate_hard(bpsk_modulate(bits)), bits)
    assert bpsk_demodulate_hard(np.array([0.0]))[0] == 0


def test_mrc_post_snr_is_sum_of_branch_snrs():
    rng = np.random.default_rng(1)
    g = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    x = bpsk_modulate(rng.integers(0, 2, (5, 8)), p=2.0)
    branches = [(g[:, i, None] * x, g[:, i]) for i in range(3)]
    stat = mrc_combine(branches, n0=0.5, p=2.0)
    assert_allclose(stat.post_snr, (np.abs(g) ** 2).sum(axis=1) * 2.0 / 0.5)
    # noiseless: decision value = sum |g|^2 x
    assert_allclose(stat.decision_values, (np.abs(g) ** 2).sum(axis=1)[:, None] * x)
    assert isinstance(stat, CombinedStatistic)


def test_mrc_matches_closed_form_ber():
    # two equal-power Rayleigh branches, BPSK: ((1-mu)/2)^2 (2 + mu)
    rng = np.random.default_rng(2)
    n, snr = 400_000, 3.0
    g = (rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))) / np.sqrt(2)
    noise = (rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))) * np.sqrt(0.5 / snr)
    y = g + noise
    stat = mrc_combine([(y[:, :1], g[:, 0]), (y[:, 1:], g[:, 1])], n0=1 / snr)
    ber = (stat.decision_values < 0).mean()
    mu = np.sqrt(snr / (1 + snr))
    exact = ((1 - mu) / 2) ** 2 * (2 + mu)
    assert abs(ber - exact) < 4 * np.sqrt(exact / n)


def test_mrc_contracts():
    with pytest.raises(ContractViolation):
        mrc_combine([], 1.0)
    with pytest.raises(ContractViolation):
        mrc_combine([(np.zeros((1, 3)), 1.0), (np.zeros((1, 4)), 1.0)], 1.0)
