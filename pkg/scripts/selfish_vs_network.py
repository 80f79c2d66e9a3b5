"""Symmetric ALOHA ring: network-optimal common setting vs the selfish best-response fixed point.

Prints predicted and simulated per-link delivered bits per slot for both.
"""

import argparse
import math

import numpy as np

from ifnet.adapt import (DEFAULT_GRID, Estimates, network_optimal_setting, predicted_link_throughput,
                         selfish_fixed_point)
from ifnet.channel import RAYLEIGH, ChannelModel
from ifnet.engine import ScenarioConfig, run
from ifnet.geometry import QUASI_STATIC, LinkSpec, Point, distance
from ifnet.mac import ALOHA, MacPolicy
from ifnet.traffic import ArrivalProcess


def ring(n, radius, d, c=(500.0, 500.0)):
    out = []
    for i in range(n):
        a = 2 * math.pi * i / n
        out.append(LinkSpec(i, Point(c[0] + radius * math.cos(a), c[1] + radius * math.sin(a)),
                            Point(c[0] + (radius + d) * math.cos(a), c[1] + (radius + d) * math.sin(a))))
    return tuple(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--links", type=int, default=10)
    ap.add_argument("--radius", type=float, default=5.0)
    ap.add_argument("--distance", type=float, default=10.0)
    ap.add_argument("--power", type=float, default=1e9)
    ap.add_argument("--slots", type=int, default=4000)
    ap.add_argument("--seeds", type=int, default=10)
    a = ap.parse_args()

    links, area = ring(a.links, a.radius, a.distance), (1000.0, 1000.0)
    model = ChannelModel(fading=RAYLEIGH, tx_power=a.power)
    est = Estimates(a.links / 1e6, 0.0, QUASI_STATIC, a.distance,
                    interferer_distances=[distance(links[0].rx, l.tx) for l in links[1:]],
                    interferer_ids=range(1, a.links))
    macs = [MacPolicy(kind=ALOHA, aloha_p=p) for p in DEFAULT_GRID.access_probs]
    net = network_optimal_setting(est, model, macs, DEFAULT_GRID.rates)
    selfish = selfish_fixed_point(est, model, macs, DEFAULT_GRID.rates, start=net)

    print("objective,p,rate,predicted_bits_per_slot,simulated_mean,simulated_std")
    for name, s in (("network", net), ("selfish", selfish)):
        vals = []
        for seed in range(a.seeds):
            cfg = ScenarioConfig(seed=seed, total_slots=a.slots, area=area, channel=model, links=links,
                                 setting=s, arrivals=ArrivalProcess(rate=1.0), initial_backlog=1)
            rep = run(cfg)
            vals.append(np.mean([rep.links[k]["delivered"] for k in rep.links]) * s.coding_rate / a.slots)
        print(f"{name},{s.mac.aloha_p},{s.coding_rate:.4f},{predicted_link_throughput(est, s, model):.4f},"
              f"{np.mean(vals):.4f},{np.std(vals, ddof=1):.4f}")


if __name__ == "__main__":
    main()
