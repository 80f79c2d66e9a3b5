"""Arrivals, the backlog recursion, retransmission accounting and empirical stability."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class ArrivalProcess:
    kind: str = BERNOULLI
    rate: float = 0.5

    def __post_init__(self):
        if self.kind != BERNOULLI:
            raise ValueError("kind must be 'bernoulli'")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")

    def draw(self, uniforms: np.ndarray) -> np.ndarray:
        return (uniforms < self.rate).astype(np.int64)


@dataclass(frozen=True)
class RetxPolicy:
    """max_transmissions=None means unbounded."""

    max_transmissions: int | None = None

    def __post_init__(self):
        if self.max_transmissions is not None and self.max_transmissions < 1:
            raise ValueError("max_transmissions must be >= 1 or null")

    @property
    def bounded(self) -> bool:
        return self.max_transmissions is not None


@dataclass(frozen=True)
class QueueState:
    backlog: int = 0
    hol_attempts: int = 0
    delivered: int = 0
    lost: int = 0
    backlog_trace: tuple = ()

    def __post_init__(self):
        if self.backlog < 0:
            raise ValueError("backlog must be >= 0")
        if self.backlog == 0 and self.hol_attempts != 0:
            raise ValueError("hol_attempts must be 0 for an empty queue")


def queue_step(backlog, served, arrived):
    """Q(t+1) = max(Q(t) - Y(t), 0) + X(t); works elementwise on integer arrays."""
    if np.ndim(backlog) == 0:
        if backlog < 0 or served < 0 or arrived < 0:
            raise ValueError("queue_step arguments must be >= 0")
        return int(max(backlog - served, 0) + arrived)
    backlog, served, arrived = np.asarray(backlog), np.asarray(served), np.asarray(arrived)
    if min(backlog.min(initial=0), served.min(initial=0), arrived.min(initial=0)) < 0:
        raise ValueError("queue_step arguments must be >= 0")
    return np.maximum(backlog - served, 0) + arrived


def on_transmission_result(q: QueueState, success: bool, policy: RetxPolicy):
    """Apply ACK/NACK to the head-of-line packet. Returns (new state, packet_lost)."""
    if q.backlog < 1:
        raise ValueError("no head-of-line packet to account for")
    if success:
        return replace(q, backlog=q.backlog - 1, hol_attempts=0, delivered=q.delivered + 1), False
    attempts = q.hol_attempts + 1
    if policy.bounded and attempts >= policy.max_transmissions:
        return replace(q, backlog=q.backlog - 1, hol_attempts=0, lost=q.lost + 1), True
    return replace(q, hol_attempts=attempts), False


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    drift: float


MIN_TRACE = 1000


def stability_verdict(trace, drift_tolerance: float = 0.01) -> StabilityVerdict:
    """Least-squares backlog slope over the second half of the trace."""
    trace = np.asarray(trace, dtype=float)
    if len(trace) < MIN_TRACE:
        raise ValueError(f"trace too short: need >= {MIN_TRACE} samples, got {len(trace)}")
    tail = trace[len(trace) // 2:]
    t = np.arange(len(tail), dtype=float)
    t -= t.mean()
    slope = float(np.dot(t, tail - tail.mean()) / np.dot(t, t))
    return StabilityVerdict(stable=slope <= drift_tolerance, drift=slope)


def export_backlog_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "backlog"])
        for slot, b in enumerate(trace):
            writer.writerow([slot, int(b)])
