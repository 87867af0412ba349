import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_array_equal

from marcsim.coding import (
    CRC_BITS,
    ConvCode,
    SearchBudgetExceeded,
    compute_distance_spectrum,
    conv_encode,
    crc_append,
    crc_check,
    crc_remainder,
    viterbi_decode_hard,
)
from marcsim.phy import ContractViolation

CODE = ConvCode.from_octal([5, 7, 7])


def _all_messages(k):
    return ((np.arange(2 ** k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)


class TestConvCode:
    def test_parameters(self):
        assert CODE.generators == (0o5, 0o7, 0o7)
        assert CODE.constraint_length == 3 and CODE.memory == 2 and CODE.n_states == 4
        assert float(CODE.rate) == pytest.approx(1 / 3)
        assert CODE.encoded_length(66) == 204
        assert CODE.info_length(204) == 66
        assert CODE.octal == ["5", "7", "7"]
        with pytest.raises(ContractViolation):
            CODE.info_length(205)

    def test_hand_encoded_block(self):
        # registers worked through by hand for input 1011 plus two tail zeros
        out = conv_encode([1, 0, 1, 1], CODE)
        assert "".join(map(str, out)) == "111011000100100111"

    def test_known_generators_msb_oldest(self):
        # the [7,5] code on input 1 gives 11 10 11
        assert_array_equal(conv_encode([1], ConvCode.from_octal([7, 5])), [1, 1, 1, 0, 1, 1])

    @given(arrays(np.uint8, 20, elements=st.integers(0, 1)), arrays(np.uint8, 20, elements=st.integers(0, 1)))
    @settings(max_examples=50, deadline=None)
    def test_linearity(self, a, b):
        assert_array_equal(conv_encode(a ^ b, CODE), conv_encode(a, CODE) ^ conv_encode(b, CODE))

    def test_invalid(self):
        with pytest.raises(ValueError):
            ConvCode((0, 5))
        with pytest.raises(ValueError):
            ConvCode((0o17,), constraint_length=3)


class TestDistanceSpectrum:
    @pytest.mark.parametrize("gens, expected", [
        ([5, 7, 7], (8, 2)),
        ([7, 5], (5, 1)),
        (["133", "171"], (10, 11)),
        ([13, 15, 17], (10, 3)),
    ])
    def test_textbook_codes(self, gens, expected):
        assert compute_distance_spectrum(ConvCode.from_octal(gens)) == expected

    def test_free_distance_matches_brute_force(self):
        # minimum weight over all nonzero short terminated codewords
        msgs = _all_messages(10)[1:]
        weights = conv_encode(msgs, CODE).sum(axis=1)
        assert weights.min() == CODE.d_free
        # weight-d_free events starting at time 0 followed by zeros
        first = msgs[msgs[:, 0] == 1]
        w_first = conv_encode(first, CODE).sum(axis=1)
        events = [m for m, w in zip(first, w_first) if w == CODE.d_free]
        assert len(events) == CODE.b_dfree

    def test_catastrophic_code_detected(self):
        with pytest.raises(SearchBudgetExceeded):
            compute_distance_spectrum(ConvCode.from_octal([3, 5]), max_expansions=10_000)

    def test_budget(self):
        with pytest.raises(SearchBudgetExceeded):
            compute_distance_spectrum(ConvCode.from_octal(["133", "171"]), max_expansions=3)


class TestViterbi:
    def test_noiseless_roundtrip(self):
        info = np.random.default_rng(0).integers(0, 2, (30, 66)).astype(np.uint8)
        assert_array_equal(viterbi_decode_hard(conv_encode(info, CODE), CODE), info)

    def test_batch_shape(self):
        info = np.zeros((2, 3, 5), np.uint8)
        assert viterbi_decode_hard(conv_encode(info, CODE), CODE).shape == (2, 3, 5)

    def test_corrects_up_to_three_errors(self):
        rng = np.random.default_rng(1)
        info = rng.integers(0, 2, (500, 66)).astype(np.uint8)
        code = conv_encode(info, CODE)
        for row in code:
            row[rng.choice(row.size, 3, replace=False)] ^= 1
        assert_array_equal(viterbi_decode_hard(code, CODE), info)

    @pytest.mark.parametrize("n_errors", [2, 4, 6])
    def test_maximum_likelihood_exhaustive(self, n_errors):
        k = 8
        book = conv_encode(_all_messages(k), CODE)
        rng = np.random.default_rng(n_errors)
        received = book.copy()
        for row in received:
            row[rng.choice(row.size, n_errors, replace=False)] ^= 1
        decoded = viterbi_decode_hard(received, CODE)
        ml = (received[:, None, :] ^ book[None]).sum(axis=-1).min(axis=1)
        got = (conv_encode(decoded, CODE) ^ received).sum(axis=-1)
        assert_array_equal(got, ml)


class TestCrc:
    def test_check_value(self):
        # XMODEM flavour (poly 0x1021, zero init, no reflection) of "123456789"
        data = np.unpackbits(np.frombuffer(b"123456789", dtype=np.uint8))
        assert int(crc_remainder(data)) == 0x31C3

    def test_append_then_check(self):
        bits = np.random.default_rng(3).integers(0, 2, (100, 50)).astype(np.uint8)
        block = crc_append(bits)
        assert block.shape == (100, 50 + CRC_BITS)
        assert np.all(crc_check(block))
        assert crc_check(block[0]) is True

    def test_detects_all_single_and_double_errors(self):
        block = crc_append(np.random.default_rng(4).integers(0, 2, 50).astype(np.uint8))
        n = block.size
        patterns = []
        for i in range(n):
            e = np.zeros(n, np.uint8)
            e[i] = 1
            patterns.append(e)
        for i, j in itertools.combinations(range(n), 2):
            e = np.zeros(n, np.uint8)
            e[[i, j]] = 1
            patterns.append(e)
        corrupted = block[None, :] ^ np.array(patterns)
        assert not np.any(crc_check(corrupted))
