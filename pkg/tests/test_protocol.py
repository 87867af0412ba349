import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from marcsim.channel import LinkPowers
from marcsim.coding import ConvCode, crc_check
from marcsim.phy import ContractViolation
from marcsim.protocol import (
    FrameSetup,
    RelayDecision,
    State,
    count_errors,
    detect_frame,
    relay_process,
    relay_transmit,
    relay_trial,
    run_frame,
)
from marcsim.streams import FrameStream

CODE = ConvCode.from_octal([5, 7, 7])


def test_setup_lengths():
    assert FrameSetup().block_len == 50
    coded = FrameSetup(code=CODE)
    assert coded.payload_len == 66 and coded.block_len == 204
    with pytest.raises(ValueError):
        FrameSetup(n0=0.0)


def test_state_index_and_frame_view():
    dec = RelayDecision(np.array([[0, 0], [1, 0], [0, 1], [1, 1]], bool), np.ones((4, 2, 3), np.uint8))
    assert_array_equal(dec.state, [State.S0, State.S1, State.S2, State.S3])
    rs = dec.frame(1)
    assert rs.state is State.S1 and rs.decoded_b is None
    assert_array_equal(rs.decoded_a, [1, 1, 1])
    with pytest.raises(ContractViolation):
        RelayDecision(np.ones((1, 3), bool), np.ones((1, 3, 2), np.uint8)).frame(0)


def test_relay_forwards_sum_of_decoded_blocks():
    setup = FrameSetup(code=CODE, powers=LinkPowers.from_urc_offset(0.0), ideal_urc=False, n0=0.5)
    fb = run_frame(setup, FrameStream(3, 0, 400))
    states = fb.relay.state
    assert set(np.unique(states)) == {0, 1, 2, 3}
    energy = (np.abs(fb.relay_components) ** 2).sum(axis=-1)
    assert_allclose(energy, fb.relay.decoded * setup.block_len)
    assert_allclose(fb.relay_signal, fb.relay_components.sum(axis=1))
    # accepted blocks always pass the CRC and equal the truth in practice
    ok = fb.relay.decoded
    assert np.all(crc_check(fb.relay.payload[ok]))
    assert_array_equal(fb.relay.payload[ok], fb.payload[ok])


def test_silent_relay_slot_is_noise_only():
    setup = FrameSetup(code=CODE, powers=LinkPowers.from_urc_offset(-20.0), ideal_urc=False, n0=1.0)
    fb = run_frame(setup, FrameStream(4, 0, 300))
    silent = fb.relay.state == 0
    assert silent.any()
    assert abs(np.mean(np.abs(fb.signals.y_rd[silent]) ** 2) - 1.0) < 0.05


def test_ideal_relay_always_state_three():
    fb = run_frame(FrameSetup(), FrameStream(1, 0, 50))
    assert np.all(fb.relay.state == 3)


def test_uncoded_relay_needs_truth():
    with pytest.raises(ContractViolation):
        relay_process(np.ones((1, 2, 4)), np.ones((1, 2)), FrameSetup())


def test_relay_trial_matches_full_frame():
    setup = FrameSetup(code=CODE, powers=LinkPowers.from_urc_offset(3.0), ideal_urc=False, n0=0.3, dest_bias=0.5)
    stream = FrameStream(21, 100, 300)
    assert_array_equal(relay_trial(setup, stream).decoded, run_frame(setup, stream).relay.decoded)


def test_frames_do_not_depend_on_batching():
    setup = FrameSetup(code=CODE, powers=LinkPowers.from_urc_offset(0.0), ideal_urc=False, n0=0.4)
    whole = run_frame(setup, FrameStream(8, 0, 60))
    errs = count_errors(whole, detect_frame(whole))
    parts = []
    for start in range(0, 60, 20):
        fb = run_frame(setup, FrameStream(8, start, 20))
        parts.append(count_errors(fb, detect_frame(fb)))
    assert_array_equal(np.concatenate(parts), errs)


@pytest.mark.parametrize("users, coded", [(2, False), (2, True), (3, True)])
def test_high_snr_frames_are_error_free(users, coded):
    setup = FrameSetup(n_users=users, code=CODE if coded else None, n0=1e-7)
    fb = run_frame(setup, FrameStream(2, 0, 100))
    assert count_errors(fb, detect_frame(fb)).sum() == 0
    assert fb.info.shape == (100, users, 50)


def test_energy_accounting():
    setup = FrameSetup(code=CODE)
    fb = run_frame(setup, FrameStream(2, 0, 10))
    # ideal relay: two user blocks plus the relay's sum of two blocks
    relay = (np.abs(fb.relay_signal) ** 2).sum(axis=-1)
    assert_allclose(fb.energy(), 2 * 204 + relay)
    assert relay.mean() == pytest.approx(2 * 204, rel=0.2)


def test_symmetric_users_have_equal_ber():
    setup = FrameSetup(n0=0.1)
    fb = run_frame(setup, FrameStream(5, 0, 20_000))
    errs = count_errors(fb, detect_frame(fb))
    per_frame = errs.astype(float)
    diff = per_frame[:, 0] - per_frame[:, 1]
    assert abs(diff.mean()) < 4 * diff.std() / np.sqrt(diff.size)


def test_relay_transmit_zero_for_undecoded():
    dec = RelayDecision(np.array([[True, False]]), np.zeros((1, 2, 50), np.uint8))
    comp = relay_transmit(dec, FrameSetup())
    assert_allclose(comp[0, 1], 0.0)
    assert_allclose(comp[0, 0], 1.0)
