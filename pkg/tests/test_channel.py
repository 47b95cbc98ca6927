import math

import numpy as np
import pytest

from pairzero import channel
from pairzero.errors import InvalidArgumentError, InvalidChannelError
from pairzero.rng import derive_key

TINY = 1e-300


def test_gains_deterministic_and_positive():
    a = channel.sample_channel(4, 3, 11)
    b = channel.sample_channel(4, 3, 11)
    np.testing.assert_array_equal(a.gains, b.gains)
    one = channel.sample_channel(1, 0, 5)
    assert one.K == 1 and one.gains[0] > 0


def test_rayleigh_second_moment():
    h = channel.rayleigh_gains(2, 1, 100_000)
    assert 0.98 < float(np.mean(h ** 2)) < 1.02


def test_horizon_rows_are_iterations():
    hz = channel.sample_horizon(3, 4, 9)
    np.testing.assert_array_equal(hz[2], channel.rayleigh_gains(9, 3, 3))


def test_analog_payload_examples():
    assert channel.make_analog_payload(2.0, 1.0, 1.0, 0.0, 0, 4, 100.0).signal == 2.0
    assert channel.make_analog_payload(2.0, 2.0, 1.0, 0.0, 0, 4, 100.0).signal == 1.0
    pl = channel.make_analog_payload(2.0, 1.0, 1.0, 1.0, derive_key(1), 4, 100.0)
    assert pl.power_used == 100.0 ** 2 + 4


def test_digital_payload_examples():
    assert channel.make_digital_payload(-3.0, 1.0, 1.0, 0.0, 0, 4).signal == -1.0
    assert channel.make_digital_payload(0.0, 2.0, 1.0, 0.0, 0, 4).signal == 0.5
    assert channel.make_digital_payload(2.0, 1.0, 1.0, 1.0, derive_key(2), 4).power_used == 5.0


@pytest.mark.parametrize("h,c,s,err", [(0.0, 1.0, 0.0, InvalidChannelError),
                                       (1.0, 0.0, 0.0, InvalidArgumentError),
                                       (1.0, 1.0, -1.0, InvalidArgumentError)])
def test_payload_validation(h, c, s, err):
    with pytest.raises(err):
        channel.make_analog_payload(1.0, h, c, s, 0, 1, 1.0)


def test_noiseless_superposition():
    chan = channel.ChannelRealization(np.array([1.0, 0.5]), TINY)
    pls = [channel.make_analog_payload(p, h, 1.0, 0.0, 0, 1, 10.0)
           for p, h in zip([1.0, 3.0], chan.gains)]
    y = channel.superpose(pls, chan, derive_key(3))
    assert y == pytest.approx(4.0, abs=1e-120)
    assert channel.channel_invert(y, 2, 1.0) == pytest.approx(2.0)


def test_majority_margin():
    chan = channel.ChannelRealization(np.ones(5), TINY)
    pls = [channel.make_digital_payload(p, 1.0, 1.0, 0.0, 0, 1) for p in (1, 2, 3, -1, -2)]
    assert channel.superpose(pls, chan, derive_key(4)) == pytest.approx(1.0, abs=1e-120)


def test_receiver_noise_variance():
    chan = channel.ChannelRealization(np.ones(1), 1.0)
    zero = [channel.OtaPayload(0.0, 0.0)]
    y = np.array([channel.superpose(zero, chan, derive_key(5, i)) for i in range(100_000)])
    assert 0.98 < y.var() < 1.02


def test_payload_count_mismatch():
    with pytest.raises(InvalidArgumentError):
        channel.superpose([], channel.ChannelRealization(np.ones(2), 1.0), 0)


def test_invert_examples():
    assert channel.channel_invert(10.0, 5, 2.0) == 1.0
    assert channel.channel_invert(0.0, 5, 2.0) == 0.0


def test_effective_noise():
    assert channel.effective_noise_std(1.0, np.zeros(3), 4.0).m == 2.0
    assert channel.effective_noise_std(2.0, [0.5, 0.5], 1.0).m == pytest.approx(math.sqrt(3),
                                                                               rel=1e-15)
    base = channel.effective_noise_std(3.0, [0.0, 0.0], 1.0).m
    assert channel.effective_noise_std(3.0, [0.0, 0.0], 4.0).m == 2 * base


def test_sign_tie_rule():
    assert channel.sign(0.0) == 1.0 and channel.sign(-0.0) == 1.0 and channel.sign(-1e-300) == -1.0


def test_bad_realization():
    with pytest.raises(InvalidChannelError):
        channel.ChannelRealization(np.array([1.0, 0.0]), 1.0)
    with pytest.raises(InvalidArgumentError):
        channel.ChannelRealization(np.array([1.0]), 0.0)
