"""Per-window link measures and area-normalized spatial throughput."""

from __future__ import annotations

from dataclasses import asdict, dataclass

POPULATION = -1  # link id of the aggregate record for ephemeral (mobile) links


@dataclass
class LinkWindowRecord:
    link: int
    coding_rate: float
    slots_active: int = 0
    slots_in_window: int = 0
    successes: int = 0
    outages: int = 0
    losses: int = 0
    arrivals: int = 0

    @property
    def attempts(self) -> int:
        return self.successes + self.outages

    def as_dict(self) -> dict:
        return asdict(self)


def effective_link_throughput(record: LinkWindowRecord) -> float | None:
    """Coding rate times the empirical per-attempt success ratio; None without attempts.

    The multiplier is the success probability, i.e. the complement of outage.
    """
    if record.attempts == 0:
        return None
    return record.coding_rate * record.successes / record.attempts


def spatial_throughput(records, area: float, window: int) -> float:
    if area <= 0 or window <= 0:
        raise ValueError("area and window must be > 0")
    total = 0.0
    for rec in records:
        eff = effective_link_throughput(rec)
        if eff is not None:
            total += rec.slots_active / window * eff
    return total / area


def packet_loss_rate(record: LinkWindowRecord) -> float | None:
    if record.arrivals == 0:
        return None
    return record.losses / record.arrivals
