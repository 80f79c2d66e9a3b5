"""Achievable-rate arithmetic for Gaussian point-to-point codes.

A receiver that jointly decodes the transmitters in a decode set ``D`` (its own
included) and treats everybody else as noise sees a multiple-access channel:
for every nonempty ``S`` in ``D``

    sum_{i in S} R_i <= log2(1 + sum_{i in S} P_ki / (1 + sum_{j not in D} P_kj))

Interference-as-noise (IAN) is the special case ``D = {k}``; the OPT decoder
picks the most favourable ``D``.

Rate tuples are anything indexable by transmitter id (a sequence or a dict).
Gain rows are 1-D arrays indexed by transmitter id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

IAN = "IAN"
OPT = "OPT"
DECODERS = (IAN, OPT)

REL_TOL = 1e-12
DEFAULT_SEARCH_LIMIT = 12


@dataclass(frozen=True)
class DecodeSet:
    owner: int
    decoded: frozenset

    def __post_init__(self):
        object.__setattr__(self, "decoded", frozenset(self.decoded))
        if self.owner not in self.decoded:
            raise ValueError("decode set must contain its owner")


def _slack_ok(lhs, rhs):
    return lhs <= rhs + REL_TOL * np.maximum(1.0, np.abs(rhs))


def _active_list(k, active):
    active = sorted(set(int(a) for a in active))
    if k not in active:
        raise ValueError(f"link {k} is not active")
    return active


def ian_rate(k: int, gains, active) -> float:
    gains = np.asarray(gains, dtype=float)
    active = _active_list(k, active)
    signal = gains[k]
    if signal <= 0:
        return 0.0
    interference = sum(gains[j] for j in active if j != k)
    return math.log2(1.0 + signal / (1.0 + interference))


def ian_rates(gains: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Vectorized IAN rates for every active link. gains is the full (N, N) matrix."""
    idx = np.asarray(active, dtype=int)
    sub = gains[idx][:, idx]
    signal = np.diagonal(sub)
    interference = sub.sum(axis=1) - signal
    return np.log2(1.0 + signal / (1.0 + interference))


def mac_region_holds(rates, powers, noise: float) -> bool:
    """All subset constraints of a Gaussian MAC with the given noise-plus-interference level."""
    rates = np.asarray(rates, dtype=float)
    powers = np.asarray(powers, dtype=float)
    n = len(rates)
    if n == 0:
        return True
    bits = _bits(n)[1:]
    lhs = bits @ rates
    rhs = np.log2(1.0 + (bits @ powers) / noise)
    return bool(np.all(_slack_ok(lhs, rhs)))


def achievable_with_decode_set(decode: DecodeSet, rates, gains, active=None) -> bool:
    gains = np.asarray(gains, dtype=float)
    if active is None:
        active = [j for j in range(len(gains)) if gains[j] > 0 or j in decode.decoded]
    active = set(active) | set(decode.decoded)
    if not decode.decoded <= active:
        raise ValueError("decode set must lie inside the active set")
    decoded = sorted(decode.decoded)
    noise = 1.0 + sum(gains[j] for j in active if j not in decode.decoded)
    return mac_region_holds([rates[i] for i in decoded], [gains[i] for i in decoded], noise)


@lru_cache(maxsize=None)
def _bits(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


@lru_cache(maxsize=None)
def _pairs(n: int):
    """All (D, S) with bit 0 in D and S a nonempty submask of D, grouped by D."""
    d_list, s_list, starts = [], [], []
    for d in range(1, 1 << n, 2):
        starts.append(len(d_list))
        s = d
        while s:
            d_list.append(d)
            s_list.append(s)
            s = (s - 1) & d
    return (np.array(d_list), np.array(s_list), np.array(starts),
            np.arange(1, 1 << n, 2))


def _exhaustive_best(powers: np.ndarray, others: np.ndarray, total: float):
    """Best own rate over every decode set.

    ``powers[0]`` is the own signal, ``powers[1:]`` the candidate interferers and
    ``others`` their rates. Returns (rate, decode mask).
    """
    n = len(powers)
    bits = _bits(n)
    psum = bits @ powers
    r = np.concatenate(([0.0], others))
    rsum = bits @ r
    d_idx, s_idx, starts, d_masks = _pairs(n)
    noise = 1.0 + total - psum[d_idx]
    cap = np.log2(1.0 + psum[s_idx] / noise)
    has_own = (s_idx & 1).astype(bool)
    val = np.where(has_own, cap - rsum[s_idx],
                   np.where(_slack_ok(rsum[s_idx], cap), np.inf, -np.inf))
    per_d = np.minimum.reduceat(val, starts)
    best = int(np.argmax(per_d))
    return float(per_d[best]), int(d_masks[best])


def _check_set(powers, others, total):
    """Own-rate bound for the decode set formed by all given powers (index 0 is own)."""
    n = len(powers)
    bits = _bits(n)[1:]
    psum = bits @ powers
    r = np.concatenate(([0.0], others))
    rsum = bits @ r
    noise = 1.0 + total - powers.sum()
    cap = np.log2(1.0 + psum / noise)
    has_own = bits[:, 0].astype(bool)
    if not np.all(_slack_ok(rsum[~has_own], cap[~has_own])):
        return -np.inf
    return float(np.min(cap[has_own] - rsum[has_own]))


def opt_rate(k: int, gains, active, other_rates, search_limit: int = DEFAULT_SEARCH_LIMIT):
    """Largest own rate achievable by some decode set, with a witnessing DecodeSet.

    Exhaustive over all decode sets while ``|active| <= search_limit``; beyond
    that only {k} plus the j strongest interferers (j < search_limit) are tried.
    """
    gains = np.asarray(gains, dtype=float)
    active = _active_list(k, active)
    interferers = [j for j in active if j != k]
    if gains[k] <= 0:
        return 0.0, DecodeSet(k, {k})
    total = float(sum(gains[j] for j in active))
    if len(active) <= search_limit:
        powers = np.array([gains[k]] + [gains[j] for j in interferers])
        others = np.array([other_rates[j] for j in interferers], dtype=float)
        rate, mask = _exhaustive_best(powers, others, total)
        decoded = {k} | {interferers[i - 1] for i in range(1, len(powers)) if mask >> i & 1}
        return max(rate, 0.0), DecodeSet(k, decoded)

    order = sorted(interferers, key=lambda j: (-gains[j], j))
    best, best_set = -np.inf, [k]
    for size in range(0, min(len(order), search_limit - 1) + 1):
        chosen = order[:size]
        powers = np.array([gains[k]] + [gains[j] for j in chosen])
        others = np.array([other_rates[j] for j in chosen], dtype=float)
        rate = _check_set(powers, others, total)
        if rate > best:
            best, best_set = rate, [k] + chosen
    return max(best, 0.0), DecodeSet(k, best_set)


def outage(k: int, coding_rate: float, gains, active, decoder: str = IAN,
           other_rates=None, search_limit: int = DEFAULT_SEARCH_LIMIT) -> bool:
    """True when coding_rate is not achievable for this channel state under the decoder."""
    if coding_rate <= 0:
        return False
    ian = ian_rate(k, gains, active)
    if _slack_ok(coding_rate, ian):
        return False
    if decoder == IAN:
        return True
    if decoder != OPT:
        raise ValueError(f"unknown decoder {decoder!r}")
    gains = np.asarray(gains, dtype=float)
    active = _active_list(k, active)
    # nested strongest-interferer sets are cheap and often enough to prove achievability
    if _nested_achieves(k, coding_rate, gains, active, other_rates, search_limit):
        return False
    if len(active) > search_limit:
        return True
    best, _ = opt_rate(k, gains, active, other_rates, search_limit)
    return not bool(_slack_ok(coding_rate, best))


def _nested_achieves(k, rate, gains, active, other_rates, search_limit) -> bool:
    order = sorted((j for j in active if j != k), key=lambda j: (-gains[j], j))
    order = order[:max(search_limit - 1, 0)]
    total = float(sum(gains[j] for j in active))
    signal = float(gains[k])
    decoded = signal + np.concatenate(([0.0], np.cumsum([gains[j] for j in order])))
    # own-only constraint is necessary for every set; skip sets that already fail it
    single = np.log2(1.0 + signal / (1.0 + total - decoded))
    for size in np.flatnonzero(_slack_ok(rate, single)):
        chosen = order[:size]
        powers = np.array([signal] + [gains[j] for j in chosen])
        others = np.array([other_rates[j] for j in chosen], dtype=float)
        bound = _check_set(powers, others, total)
        if bound > -np.inf and _slack_ok(rate, bound):
            return True
    return False


def in_capacity_region(rates, gains, decode_sets=None, active=None,
                       search_limit: int = DEFAULT_SEARCH_LIMIT) -> bool:
    """Membership in the intersection of the per-receiver MAC regions.

    With explicit ``decode_sets`` (one per active RX) each receiver is checked
    against its given set. Without them a receiver passes when any decode set
    works, which is the union over decode sets at every receiver.
    """
    matrix = gains.received_power if hasattr(gains, "received_power") else np.asarray(gains, float)
    n = matrix.shape[0]
    if active is None:
        active = list(range(n))
    active = sorted(active)
    for k in active:
        row = matrix[k]
        if decode_sets is not None:
            if not achievable_with_decode_set(decode_sets[k], rates, row, active):
                return False
        else:
            best, _ = opt_rate(k, row, active, rates, search_limit)
            if not _slack_ok(rates[k], best):
                return False
    return True


def opt_common_rate(k: int, gains, active, search_limit: int = DEFAULT_SEARCH_LIMIT):
    """Largest rate R such that RX k decodes when every active link codes at R.

    For a fixed decode set the constraints read ``|S| R <= C(S)``, so the answer
    is ``max_D min_{S in D} C(S) / |S|``. Same search policy as :func:`opt_rate`.
    """
    gains = np.asarray(gains, dtype=float)
    active = _active_list(k, active)
    if gains[k] <= 0:
        return 0.0, DecodeSet(k, {k})
    interferers = [j for j in active if j != k]
    total = float(sum(gains[j] for j in active))
    if len(active) <= search_limit:
        powers = np.array([gains[k]] + [gains[j] for j in interferers])
        n = len(powers)
        bits = _bits(n)
        psum = bits @ powers
        size = bits.sum(axis=1)
        d_idx, s_idx, starts, d_masks = _pairs(n)
        cap = np.log2(1.0 + psum[s_idx] / (1.0 + total - psum[d_idx]))
        per_d = np.minimum.reduceat(cap / size[s_idx], starts)
        best = int(np.argmax(per_d))
        mask = int(d_masks[best])
        decoded = {k} | {interferers[i - 1] for i in range(1, n) if mask >> i & 1}
        return float(per_d[best]), DecodeSet(k, decoded)

    order = sorted(interferers, key=lambda j: (-gains[j], j))
    best, best_set = -np.inf, [k]
    for count in range(0, min(len(order), search_limit - 1) + 1):
        chosen = [k] + order[:count]
        powers = np.array([gains[j] for j in chosen])
        bits = _bits(len(chosen))[1:]
        cap = np.log2(1.0 + (bits @ powers) / (1.0 + total - powers.sum()))
        rate = float(np.min(cap / bits.sum(axis=1)))
        if rate > best:
            best, best_set = rate, chosen
    return best, DecodeSet(k, best_set)
