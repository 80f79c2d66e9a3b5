"""Engine outage in a mobile Poisson network vs the Rayleigh closed form, swept over coding rate.

    python3 scripts/ppp_outage_check.py --slots 5000 --rates 0.5 1 2
"""

import argparse
import math

from ifnet.adapt import DesignSetting
from ifnet.channel import RAYLEIGH, ChannelModel
from ifnet.engine import ScenarioConfig, run
from ifnet.geometry import HIGHLY_MOBILE, MobilityModel
from ifnet.mac import ALOHA, MacPolicy
from ifnet.traffic import ArrivalProcess


def closed_form(active_density, rate, d, alpha):
    theta = 2 ** rate - 1
    g = math.gamma(1 + 2 / alpha) * math.gamma(1 - 2 / alpha)
    return 1 - math.exp(-active_density * math.pi * d * d * theta ** (2 / alpha) * g)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--density", type=float, default=1e-3)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--distance", type=float, default=10.0)
    ap.add_argument("--alpha", type=float, default=4.0)
    ap.add_argument("--rates", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--slots", type=int, default=5000)
    ap.add_argument("--side", type=float, default=400.0)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()

    print("rate,engine_outage,closed_form,rel_error,samples")
    for r in a.rates:
        cfg = ScenarioConfig(
            seed=a.seed, total_slots=a.slots, area=(a.side, a.side),
            mobility=MobilityModel(HIGHLY_MOBILE, a.density, a.distance),
            channel=ChannelModel(path_loss_exponent=a.alpha, fading=RAYLEIGH, tx_power=1e12),
            setting=DesignSetting(r, mac=MacPolicy(kind=ALOHA, aloha_p=a.p)),
            arrivals=ArrivalProcess(rate=0.1))
        net = run(cfg).network
        want = closed_form(a.density * a.p, r, a.distance, a.alpha)
        got = net["outage_probability"]
        print(f"{r},{got:.6f},{want:.6f},{(got - want) / want:+.4f},{net['attempts']}")


if __name__ == "__main__":
    main()
