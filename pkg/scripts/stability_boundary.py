"""Backlog drift of one link with per-attempt success 1/2 as the arrival rate crosses the boundary."""

import argparse
import math

import numpy as np

from ifnet.adapt import DesignSetting
from ifnet.channel import RAYLEIGH, ChannelModel
from ifnet.engine import ScenarioConfig, run
from ifnet.geometry import LinkSpec, Point
from ifnet.traffic import ArrivalProcess

HALF_RATE = math.log2(1 + math.log(2))  # unit link: P(fade >= ln 2) = 1/2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--slots", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--lambdas", type=float, nargs="+", default=list(np.round(np.arange(0.3, 0.71, 0.05), 2)))
    a = ap.parse_args()
    link = (LinkSpec(0, Point(0, 0), Point(1, 0)),)
    print("lambda,drift,expected_drift,stable,final_backlog")
    for lam in a.lambdas:
        cfg = ScenarioConfig(seed=a.seed, total_slots=a.slots, links=link,
                             channel=ChannelModel(fading=RAYLEIGH), setting=DesignSetting(HALF_RATE),
                             arrivals=ArrivalProcess(rate=lam))
        v = run(cfg).links[0]
        s = v["stability"]
        print(f"{lam},{s['drift']:.4f},{max(lam - 0.5, 0):.4f},{s['stable']},{v['backlog']}")


if __name__ == "__main__":
    main()
