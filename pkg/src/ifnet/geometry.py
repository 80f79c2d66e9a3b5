"""Link placement over a rectangular (toroidal) area and the two mobility models."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

QUASI_STATIC = "quasi-static"
HIGHLY_MOBILE = "highly-mobile"
MOBILITY_KINDS = (QUASI_STATIC, HIGHLY_MOBILE)


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point coordinates must be finite")


@dataclass(frozen=True)
class LinkSpec:
    id: int
    tx: Point
    rx: Point

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("id must be >= 0")
        if distance(self.tx, self.rx) <= 0:
            raise ValueError("tx-rx distance must be > 0")


@dataclass(frozen=True)
class Topology:
    area_width: float
    area_height: float
    links: tuple[LinkSpec, ...] = ()
    epoch: int = 0

    def __post_init__(self):
        if not (self.area_width > 0 and self.area_height > 0):
            raise ValueError("area dimensions must be > 0")
        ids = [link.id for link in self.links]
        if ids != list(range(len(ids))):
            raise ValueError("link ids must be 0..K in order with no gaps")

    @property
    def area(self) -> float:
        return self.area_width * self.area_height

    def __len__(self) -> int:
        return len(self.links)

    def tx_array(self) -> np.ndarray:
        return np.array([(l.tx.x, l.tx.y) for l in self.links], dtype=float).reshape(-1, 2)

    def rx_array(self) -> np.ndarray:
        return np.array([(l.rx.x, l.rx.y) for l in self.links], dtype=float).reshape(-1, 2)

    def to_json(self) -> str:
        doc = {
            "area": [self.area_width, self.area_height],
            "epoch": self.epoch,
            "links": [
                {"id": l.id, "tx": [l.tx.x, l.tx.y], "rx": [l.rx.x, l.rx.y]}
                for l in self.links
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        width, height = doc["area"]
        links = tuple(
            LinkSpec(int(d["id"]), Point(*map(float, d["tx"])), Point(*map(float, d["rx"])))
            for d in doc["links"]
        )
        return cls(float(width), float(height), links, int(doc.get("epoch", 0)))

    @classmethod
    def from_arrays(cls, width, height, tx, rx, epoch=0) -> "Topology":
        links = tuple(
            LinkSpec(i, Point(float(t[0]), float(t[1])), Point(float(r[0]), float(r[1])))
            for i, (t, r) in enumerate(zip(tx, rx))
        )
        return cls(float(width), float(height), links, epoch)


@dataclass(frozen=True)
class MobilityModel:
    kind: str = QUASI_STATIC
    density: float = 0.0
    link_distance: float = 10.0

    def __post_init__(self):
        if self.kind not in MOBILITY_KINDS:
            raise ValueError(f"kind must be one of {MOBILITY_KINDS}")
        if not (math.isfinite(self.density) and self.density >= 0):
            raise ValueError("density must be finite and >= 0")
        if not (math.isfinite(self.link_distance) and self.link_distance > 0):
            raise ValueError("link_distance must be finite and > 0")


def distance(a: Point, b: Point) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def torus_distances(rx: np.ndarray, tx: np.ndarray, width: float, height: float) -> np.ndarray:
    """Minimum-image distances, shape (len(rx), len(tx))."""
    dx = np.abs(rx[:, None, 0] - tx[None, :, 0])
    dy = np.abs(rx[:, None, 1] - tx[None, :, 1])
    dx = np.minimum(dx, width - dx)
    dy = np.minimum(dy, height - dy)
    return np.hypot(dx, dy)


def _check_sampler_args(density, area, link_distance):
    width, height = area
    for name, v in (("density", density), ("area width", width), ("area height", height),
                    ("link_distance", link_distance)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
    if density < 0:
        raise ValueError("density must be >= 0")
    if width <= 0 or height <= 0:
        raise ValueError("area dimensions must be > 0")
    if link_distance <= 0:
        raise ValueError("link_distance must be > 0")


def place_links(rng: np.random.Generator, n: int, area, link_distance: float):
    """Uniform TX positions, RX at fixed distance and uniform angle, wrapped into the area."""
    width, height = area
    tx = rng.random((n, 2)) * (width, height)
    phi = rng.random(n) * 2 * np.pi
    rx = tx + link_distance * np.column_stack((np.cos(phi), np.sin(phi)))
    rx[:, 0] %= width
    rx[:, 1] %= height
    return tx, rx


def poisson_arrays(rng: np.random.Generator, density: float, area, link_distance: float):
    width, height = area
    n = int(rng.poisson(density * width * height))
    return place_links(rng, n, area, link_distance)


def sample_poisson_topology(density: float, area, link_distance: float, seed: int,
                            epoch: int = 0) -> Topology:
    _check_sampler_args(density, area, link_distance)
    rng = np.random.default_rng(seed)
    tx, rx = poisson_arrays(rng, density, area, link_distance)
    return Topology.from_arrays(area[0], area[1], tx, rx, epoch)


def advance(topology: Topology, mobility: MobilityModel, slot: int, seed: int) -> Topology:
    """Topology at ``slot``: unchanged when quasi-static, an independent redraw when mobile."""
    if mobility.kind == QUASI_STATIC:
        return topology
    area = (topology.area_width, topology.area_height)
    _check_sampler_args(mobility.density, area, mobility.link_distance)
    rng = np.random.default_rng([seed, slot])
    tx, rx = poisson_arrays(rng, mobility.density, area, mobility.link_distance)
    return Topology.from_arrays(area[0], area[1], tx, rx, epoch=slot)
