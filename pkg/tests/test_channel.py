import numpy as np
import pytest
from hypothesis import given, strategies as st

from ifnet.channel import RAYLEIGH, ChannelModel, fading_draws, gain_matrix, mean_gains, received_power
from ifnet.geometry import LinkSpec, Point, Topology
from ifnet.streams import Streams


def two_links():
    return Topology(100, 100, (LinkSpec(0, Point(10, 10), Point(20, 10)),
                               LinkSpec(1, Point(40, 10), Point(50, 10))))


def test_received_power_values():
    m = ChannelModel(path_loss_exponent=4, min_distance=1, tx_power=1)
    assert received_power(m, 10) == pytest.approx(1e-4)
    assert received_power(m, 0.5) == 1.0  # bounded below d0
    assert received_power(m, 0) == 1.0


@given(st.floats(0.01, 1e3), st.floats(0.01, 1e3))
def test_power_non_increasing_in_distance(a, b):
    m = ChannelModel(path_loss_exponent=3.5, min_distance=2.0, tx_power=7.0)
    lo, hi = sorted((a, b))
    assert received_power(m, lo) >= received_power(m, hi)


def test_model_validation():
    for bad in (dict(path_loss_exponent=2.0), dict(min_distance=0), dict(fading="nakagami"),
                dict(tx_power=0), dict(noise_power=2.0)):
        with pytest.raises(ValueError):
            ChannelModel(**bad)


def test_rayleigh_mean_is_one():
    m = ChannelModel(fading=RAYLEIGH)
    draws = np.concatenate([fading_draws(m, 10, t, Streams(3)).ravel() for t in range(1000)])
    assert abs(draws.mean() - 1) < 0.01


def test_no_fading_gives_none():
    assert fading_draws(ChannelModel(), 4, 0, Streams(0)) is None


def test_gain_matrix_silences_inactive_columns():
    m = ChannelModel(tx_power=1e6)
    g = gain_matrix(m, two_links(), [0], slot=0, seed=1).received_power
    assert np.all(g[:, 1] == 0)
    assert g[0, 0] == pytest.approx(1e6 * 10.0 ** -4)
    np.testing.assert_allclose(g[:, 0], mean_gains(m, two_links())[:, 0])


def test_gain_matrix_fading_is_keyed_by_slot():
    m = ChannelModel(fading=RAYLEIGH)
    a = gain_matrix(m, two_links(), [0, 1], 5, 2).received_power
    b = gain_matrix(m, two_links(), [0, 1], 5, 2).received_power
    c = gain_matrix(m, two_links(), [0, 1], 6, 2).received_power
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_gain_matrix_rejects_unknown_ids():
    with pytest.raises(ValueError):
        gain_matrix(ChannelModel(), two_links(), [2], 0, 0)
