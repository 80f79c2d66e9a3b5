import numpy as np
import pytest
from hypothesis import given, strategies as st

from ifnet.mac import (ALOHA, BACKOFF, CSMA, GIVE_UP, TDMA, TRANSMIT, MacPolicy, aloha_decide,
                       csma_decide, tdma_active)


@given(st.integers(1, 6), st.integers(0, 40), st.integers(0, 1000))
def test_tdma_groups_partition_the_slots(m, n_nodes, slot):
    pol = MacPolicy(kind=TDMA, tdma_groups=m)
    for node in range(n_nodes):
        # each node is active in exactly one slot of every frame
        assert sum(tdma_active(node, pol, slot + s) for s in range(m)) == 1


def test_tdma_explicit_assignment():
    pol = MacPolicy(kind=TDMA, tdma_groups=2, tdma_assignment={0: 1, 1: 1})
    assert not tdma_active(0, pol, 0) and tdma_active(0, pol, 1)
    with pytest.raises(KeyError):
        tdma_active(5, pol, 0)
    with pytest.raises(ValueError):
        MacPolicy(kind=TDMA, tdma_groups=2, tdma_assignment={0: 2})


def test_aloha_access_rate():
    u = np.random.default_rng(0).random(100_000)
    rate = np.mean([aloha_decide(0.3, True, x) for x in u])
    assert abs(rate - 0.3) < 0.005
    assert not aloha_decide(1.0, False, 0.0)
    with pytest.raises(ValueError):
        aloha_decide(1.5, True, 0.1)


def test_csma_decisions():
    pol = MacPolicy(kind=CSMA, csma_threshold=1.0, csma_backoff_window=4, csma_max_attempts=2)
    assert csma_decide(1.0, pol, 0, 0.5) == (TRANSMIT, 0)
    assert csma_decide(2.0, pol, 0, 0.0) == (BACKOFF, 1)
    assert csma_decide(2.0, pol, 1, 0.999) == (BACKOFF, 4)
    assert csma_decide(2.0, pol, 2, 0.5) == (GIVE_UP, 0)


@given(st.floats(0, 0.9999999))
def test_csma_backoff_within_window(u):
    pol = MacPolicy(kind=CSMA, csma_backoff_window=8)
    kind, slots = csma_decide(1.0, pol, 0, u)
    assert kind == BACKOFF and 1 <= slots <= 8


def test_access_fraction():
    assert MacPolicy(kind=ALOHA, aloha_p=0.4).access_fraction() == 0.4
    assert MacPolicy(kind=TDMA, tdma_groups=4).access_fraction() == 0.25
    with pytest.raises(ValueError):
        MacPolicy(kind=ALOHA, aloha_p=1.5)
