"""Independent reference computations used by the tests.

Written with plain Python and itertools so they share no code with the package.
"""

import itertools
import math

TOL = 1e-12


def backlog_next(q, y, x):
    # served packets cannot exceed what is queued; arrivals join after service
    left = q - y
    if left < 0:
        left = 0
    return left + x


def sinr_rate(signal, interferers):
    return math.log2(1 + signal / (1 + sum(interferers)))


def nonempty_subsets(items):
    items = list(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def decodable(k, decode, rates, row, active):
    """Every subset constraint of the MAC formed by the decode set at RX k."""
    noise = 1 + sum(row[j] for j in active if j not in decode)
    for s in nonempty_subsets(decode):
        lhs = sum(rates[i] for i in s)
        rhs = math.log2(1 + sum(row[i] for i in s) / noise)
        if lhs > rhs + TOL * max(1.0, abs(rhs)):
            return False
    return True


def region_member(rates, gains, active):
    """Brute force: each active RX needs at least one decode set containing itself."""
    for k in active:
        others = [j for j in active if j != k]
        ok = any(decodable(k, (k,) + extra, rates, gains[k], active)
                 for r in range(len(others) + 1)
                 for extra in itertools.combinations(others, r))
        if not ok:
            return False
    return True


def best_own_rate(k, row, active, rates):
    """Largest R_k over every decode set (exhaustive, closed form per set)."""
    others = [j for j in active if j != k]
    best = -math.inf
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            decode = (k,) + extra
            noise = 1 + sum(row[j] for j in active if j not in decode)
            bound = math.inf
            feasible = True
            for s in nonempty_subsets(decode):
                cap = math.log2(1 + sum(row[i] for i in s) / noise)
                rest = sum(rates[i] for i in s if i != k)
                if k in s:
                    bound = min(bound, cap - rest)
                elif rest > cap + TOL * max(1.0, cap):
                    feasible = False
            if feasible:
                best = max(best, bound)
    return max(best, 0.0)


def ppp_outage(density_active, rate, d, alpha):
    """Interference-limited Rayleigh outage among Poisson interferers."""
    theta = 2 ** rate - 1
    g = math.gamma(1 + 2 / alpha) * math.gamma(1 - 2 / alpha)
    return 1 - math.exp(-density_active * math.pi * d * d * theta ** (2 / alpha) * g)


def ci_halfwidth(values, z=1.96):
    n = len(values)
    m = sum(values) / n
    var = sum((v - m) ** 2 for v in values) / (n - 1)
    return z * math.sqrt(var / n)
