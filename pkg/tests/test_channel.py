import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from marcsim.channel import MIXTURE_FRACTION, LinkPowers, add_awgn, complex_noise, draw_channel, draw_gains
from marcsim.streams import TAG_BITS, FrameStream

N = 200_000


@pytest.fixture(scope="module")
def gains():
    h, w = draw_gains(FrameStream(11, 0, N), 2.0, 1)
    return h[:, 0], w[:, 0]


class TestStreams:
    def test_frame_independent_of_batch(self):
        big = FrameStream(5, 10, 50)
        u_big = big.uniform(7, 13)
        b_big = big.bits(TAG_BITS, 100)
        for i in (0, 17, 49):
            single = big.frame(10 + i)
            assert_array_equal(single.uniform(7, 13)[0], u_big[i])
            assert_array_equal(single.bits(TAG_BITS, 100)[0], b_big[i])

    def test_split_batches_concatenate(self):
        whole = FrameStream(3, 0, 40).uniform(1, 9)
        parts = [FrameStream(3, s, 10).uniform(1, 9) for s in range(0, 40, 10)]
        assert_array_equal(np.concatenate(parts), whole)

    def test_tags_and_seeds_differ(self):
        a = FrameStream(1, 0, 4).uniform(1, 8)
        assert not np.array_equal(a, FrameStream(1, 0, 4).uniform(2, 8))
        assert not np.array_equal(a, FrameStream(2, 0, 4).uniform(1, 8))

    def test_uniform_range_and_bits_fair(self):
        s = FrameStream(9, 0, 1000)
        u = s.uniform(1, 50)
        assert u.min() > 0 and u.max() <= 1
        assert stats.kstest(u.ravel(), "uniform").pvalue > 1e-3
        bits = s.bits(TAG_BITS, 100)
        assert set(np.unique(bits)) <= {0, 1}
        assert abs(bits.mean() - 0.5) < 4 * 0.5 / np.sqrt(bits.size)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            FrameStream(1, 0, 0)
        with pytest.raises(ValueError):
            FrameStream(1, -1, 1)


class TestGains:
    def test_mean_power(self, gains):
        h, _ = gains
        p = np.abs(h) ** 2
        assert abs(p.mean() - 2.0) < 4 * p.std() / np.sqrt(N)

    def test_power_is_exponential(self, gains):
        h, _ = gains
        assert stats.kstest(np.abs(h) ** 2, "expon", args=(0, 2.0)).pvalue > 1e-3

    def test_phase_uniform_and_components_gaussian(self, gains):
        h, _ = gains
        assert stats.kstest(np.angle(h), "uniform", args=(-np.pi, 2 * np.pi)).pvalue > 1e-3
        for comp in (h.real, h.imag):
            assert abs(stats.kurtosis(comp)) < 0.05
            assert abs(comp.var() - 1.0) < 0.02
        assert abs(np.mean(h.real * h.imag)) < 0.02

    def test_unbiased_weights_are_one(self, gains):
        assert np.all(gains[1] == 1.0)

    def test_importance_sampling_is_unbiased(self):
        beta = 1e-3
        h, w = draw_gains(FrameStream(4, 0, N), 1.0, 1, bias=beta)
        x, w = np.abs(h[:, 0]) ** 2, w[:, 0]
        assert abs(w.mean() - 1.0) < 4 * w.std() / np.sqrt(N)
        assert w.max() <= 1.0 / (1.0 - MIXTURE_FRACTION) + 1e-12
        thr = 1e-3
        est = (w * (x < thr)).mean()
        exact = 1 - np.exp(-thr)
        se = (w * (x < thr)).std() / np.sqrt(N)
        assert abs(est - exact) < 4 * se
        assert se / exact < 0.02       # far better than plain sampling (~7%)

    def test_urc_offset(self):
        p = LinkPowers.from_urc_offset(3.0)
        assert p.omega_to_d == 1.0
        assert p.omega_to_r == pytest.approx(10 ** 0.3)
        with pytest.raises(ValueError):
            LinkPowers(0.0, 1.0)


class TestDrawChannel:
    def test_shapes_and_aliases(self):
        ch = draw_channel(FrameStream(1, 0, 7), LinkPowers(), n_users=2)
        assert ch.h_ud.shape == (7, 2) and ch.h_ur.shape == (7, 2) and ch.h_rd.shape == (7,)
        assert_array_equal(ch.h_ad, ch.h_ud[:, 0])
        assert_array_equal(ch.h_br, ch.h_ur[:, 1])

    def test_relay_links_follow_their_power(self):
        ch = draw_channel(FrameStream(2, 0, N), LinkPowers(4.0, 1.0), n_users=2, dest_bias=0.01)
        p = np.abs(ch.h_ur) ** 2
        assert_allclose(p.mean(axis=0), 4.0, rtol=0.02)
        # only destination links carry weights
        w_mean = ch.weight.mean()
        assert abs(w_mean - 1.0) < 4 * ch.weight.std() / np.sqrt(N)

    def test_independent_links(self):
        ch = draw_channel(FrameStream(3, 0, N), LinkPowers(), n_users=2)
        pw = np.abs(np.column_stack([ch.h_ud, ch.h_ur, ch.h_rd])) ** 2
        corr = np.corrcoef(pw.T)
        assert np.max(np.abs(corr - np.eye(5))) < 0.02

    def test_bias_domain(self):
        with pytest.raises(ValueError):
            draw_channel(FrameStream(1), LinkPowers(), dest_bias=0.0)


class TestNoise:
    def test_power_circular_and_white(self):
        n0 = 0.3
        n = complex_noise(FrameStream(8, 0, 2000), 0, (100,), n0)
        assert abs(np.mean(np.abs(n) ** 2) - n0) < 4 * n0 / np.sqrt(n.size)
        assert abs(np.mean(n * n)) < 4 * n0 / np.sqrt(n.size)
        lag1 = np.mean(n[:, 1:] * np.conj(n[:, :-1]))
        assert abs(lag1) < 4 * n0 / np.sqrt(n.size)
        assert abs(stats.kurtosis(n.real.ravel())) < 0.05

    def test_slots_are_independent(self):
        s = FrameStream(8, 0, 1000)
        a = complex_noise(s, 0, (50,), 1.0).ravel()
        b = complex_noise(s, 1, (50,), 1.0).ravel()
        assert abs(np.mean(a * np.conj(b))) < 4 / np.sqrt(a.size)

    def test_add_awgn_shape_contract(self):
        s = FrameStream(1, 0, 3)
        y = add_awgn(s, np.ones((3, 5)), 1e-30)
        assert_allclose(y, 1.0, atol=1e-12)
        with pytest.raises(ValueError):
            add_awgn(s, np.ones((4, 5)), 1.0)
