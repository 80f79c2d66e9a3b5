"""Per-slot medium access decisions: slotted ALOHA, slotted CSMA, distributed time-division."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

ALOHA = "aloha"
CSMA = "csma"
TDMA = "tdma"
MAC_KINDS = (ALOHA, CSMA, TDMA)

TRANSMIT = "transmit"
BACKOFF = "backoff"
GIVE_UP = "give_up"


@dataclass(frozen=True)
class MacPolicy:
    kind: str = TDMA
    aloha_p: float = 1.0
    csma_threshold: float = 0.0
    csma_backoff_window: int = 8
    csma_max_attempts: int = 4
    tdma_groups: int = 1
    tdma_assignment: dict | None = None

    def __post_init__(self):
        if self.kind not in MAC_KINDS:
            raise ValueError(f"kind must be one of {MAC_KINDS}")
        if not 0.0 <= self.aloha_p <= 1.0:
            raise ValueError("aloha_p must be in [0, 1]")
        if not (self.csma_threshold >= 0 and math.isfinite(self.csma_threshold)):
            raise ValueError("csma_threshold must be finite and >= 0")
        if self.csma_backoff_window < 1:
            raise ValueError("csma_backoff_window must be >= 1")
        if self.csma_max_attempts < 0:
            raise ValueError("csma_max_attempts must be >= 0")
        if self.tdma_groups < 1:
            raise ValueError("tdma_groups must be >= 1")
        if self.tdma_assignment is not None:
            assignment = {int(k): int(v) for k, v in self.tdma_assignment.items()}
            if any(not 0 <= g < self.tdma_groups for g in assignment.values()):
                raise ValueError("tdma_assignment values must lie in [0, tdma_groups)")
            object.__setattr__(self, "tdma_assignment", assignment)

    def group_of(self, node: int) -> int:
        if self.tdma_assignment is None:
            return node % self.tdma_groups
        try:
            return self.tdma_assignment[node]
        except KeyError:
            raise KeyError(f"node {node} has no tdma group") from None

    def access_fraction(self) -> float:
        """Nominal fraction of slots a backlogged node may use (CSMA reported as 1)."""
        if self.kind == ALOHA:
            return self.aloha_p
        if self.kind == TDMA:
            return 1.0 / self.tdma_groups
        return 1.0


def aloha_decide(p: float, has_packet: bool, rng_draw: float) -> bool:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    return bool(has_packet and rng_draw < p)


def csma_decide(sensed_power: float, policy: MacPolicy, attempts_so_far: int, rng_draw: float):
    """Returns (TRANSMIT, 0), (BACKOFF, slots) or (GIVE_UP, 0)."""
    if attempts_so_far < 0:
        raise ValueError("attempts_so_far must be >= 0")
    if sensed_power <= policy.csma_threshold:
        return TRANSMIT, 0
    if attempts_so_far < policy.csma_max_attempts:
        window = policy.csma_backoff_window
        return BACKOFF, 1 + min(int(rng_draw * window), window - 1)
    return GIVE_UP, 0


def tdma_active(node: int, policy: MacPolicy, slot: int) -> bool:
    return policy.group_of(node) == slot % policy.tdma_groups
