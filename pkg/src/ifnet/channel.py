"""Received powers from bounded power-law path loss, optional Rayleigh fading and a common TX power."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Topology, torus_distances
from .streams import FADING, Streams

NO_FADING = "none"
RAYLEIGH = "rayleigh-per-slot"
FADING_KINDS = (NO_FADING, RAYLEIGH)


@dataclass(frozen=True)
class ChannelModel:
    path_loss_exponent: float = 4.0
    min_distance: float = 1.0
    fading: str = NO_FADING
    tx_power: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        if not self.path_loss_exponent > 2:
            raise ValueError("path_loss_exponent must be > 2")
        if not self.min_distance > 0:
            raise ValueError("min_distance must be > 0")
        if self.fading not in FADING_KINDS:
            raise ValueError(f"fading must be one of {FADING_KINDS}")
        if not (self.tx_power > 0 and math.isfinite(self.tx_power)):
            raise ValueError("tx_power must be finite and > 0")
        if self.noise_power != 1.0:
            raise ValueError("noise_power is normalized and must equal 1")

    def path_gain(self, d):
        """Mean received power at distance(s) d (no fading)."""
        d = np.maximum(np.asarray(d, dtype=float), self.min_distance)
        return self.tx_power * d ** (-self.path_loss_exponent)


@dataclass
class GainMatrix:
    """received_power[i, j]: power at RX i from TX j (zero column for a silent TX)."""

    received_power: np.ndarray

    def row(self, k: int) -> np.ndarray:
        return self.received_power[k]


def received_power(model: ChannelModel, d: float, fade_draw: float = 1.0) -> float:
    if d < 0:
        raise ValueError("distance must be >= 0")
    if model.fading == NO_FADING:
        fade_draw = 1.0
    return float(model.tx_power * fade_draw * max(d, model.min_distance) ** (-model.path_loss_exponent))


def mean_gains(model: ChannelModel, topology: Topology) -> np.ndarray:
    """Fading-free power matrix over the full link set, toroidal distances."""
    d = torus_distances(topology.rx_array(), topology.tx_array(),
                        topology.area_width, topology.area_height)
    return model.path_gain(d)


def fading_draws(model: ChannelModel, n: int, slot: int, streams: Streams,
                 per_slot: bool = False) -> np.ndarray | None:
    """Unit-mean exponential power fades for every (RX, TX) pair, or None without fading."""
    if model.fading == NO_FADING or n == 0:
        return None
    if per_slot:
        return streams.generator(FADING, slot).standard_exponential((n, n))
    return streams.exponential(FADING, slot, (n, n))


def gain_matrix(model: ChannelModel, topology: Topology, active, slot: int, seed: int) -> GainMatrix:
    n = len(topology)
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter(active, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("active ids must belong to the topology")
    mask[idx] = True
    gains = mean_gains(model, topology) if n else np.zeros((0, 0))
    fades = fading_draws(model, n, slot, Streams(seed), per_slot=True)
    if fades is not None:
        gains = gains * fades
    return GainMatrix(gains * mask[None, :])
