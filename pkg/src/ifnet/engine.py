"""Slotted simulation loop.

Each slot runs the same phases in order: topology/fading update, arrivals,
medium access, outage evaluation at every transmitting receiver, ACK/NACK,
queue and retransmission update, metric accumulation and, at epoch
boundaries, per-node adaptation. Arrivals drawn in a slot join the queue at
the end of it, so the backlog follows Q(t+1) = max(Q(t) - Y(t), 0) + X(t).

Quasi-static runs keep a fixed set of links, each with its own queue. Mobile
runs redraw a Poisson network every slot around one persistent tagged link
(id 0) that owns the only queue; the ephemeral peers are always backlogged
and share the common setting.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import streams as st
from .adapt import (DEFAULT_GRID, ConstraintSet, DesignSetting, Observations, SearchGrid,
                    estimate_state, select_setting)
from .channel import NO_FADING, ChannelModel, fading_draws
from .geometry import (HIGHLY_MOBILE, QUASI_STATIC, LinkSpec, MobilityModel, Topology,
                       place_links, poisson_arrays, torus_distances)
from .mac import ALOHA, BACKOFF, CSMA, GIVE_UP, TDMA, TRANSMIT, csma_decide
from .metrics import POPULATION, LinkWindowRecord, packet_loss_rate, spatial_throughput
from .rates import DEFAULT_SEARCH_LIMIT, IAN, OPT, ian_rates, outage
from .traffic import (ArrivalProcess, QueueState, on_transmission_result, queue_step,
                      stability_verdict, MIN_TRACE)

GENIE = "genie"
SENSED = "sensed"


@dataclass(frozen=True)
class AdaptationConfig:
    enabled: bool = False
    epoch_length: int = 1000
    estimation: str = GENIE
    cv_threshold: float = 0.1
    grid: SearchGrid = DEFAULT_GRID

    def __post_init__(self):
        if self.epoch_length < 100:
            raise ValueError("epoch_length must be >= 100")
        if self.estimation not in (GENIE, SENSED):
            raise ValueError("estimation must be 'genie' or 'sensed'")
        if not self.cv_threshold > 0:
            raise ValueError("cv_threshold must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    total_slots: int
    area: tuple = (100.0, 100.0)
    mobility: MobilityModel = field(default_factory=MobilityModel)
    channel: ChannelModel = field(default_factory=ChannelModel)
    links: tuple | None = None
    setting: DesignSetting = field(default_factory=DesignSetting)
    node_settings: dict = field(default_factory=dict)
    arrivals: ArrivalProcess = field(default_factory=ArrivalProcess)
    arrival_sequences: dict = field(default_factory=dict)
    initial_backlog: int = 0
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    window: int = 1000
    search_limit: int = DEFAULT_SEARCH_LIMIT

    def __post_init__(self):
        if self.total_slots < 1:
            raise ValueError("total_slots must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if len(self.area) != 2 or not all(a > 0 and math.isfinite(a) for a in self.area):
            raise ValueError("area must be two finite positive numbers")
        if self.initial_backlog < 0:
            raise ValueError("initial_backlog must be >= 0")
        if self.search_limit < 1:
            raise ValueError("search_limit must be >= 1")
        if self.adaptation.enabled and self.adaptation.epoch_length % self.window:
            raise ValueError("adaptation.epoch_length must be a multiple of window")
        mobile = self.mobility.kind == HIGHLY_MOBILE
        if mobile and self.links is not None:
            raise ValueError("links: explicit links require quasi-static mobility")
        if mobile and self.node_settings:
            raise ValueError("node_settings: mobile runs share one setting")
        if self.links is not None:
            ids = [l.id for l in self.links]
            if len(set(ids)) != len(ids):
                raise ValueError("links: duplicate link id")
            if sorted(ids) != list(range(len(ids))):
                raise ValueError("links: ids must be 0..K without gaps")
            n = len(ids)
            for key in list(self.node_settings) + list(self.arrival_sequences):
                if not 0 <= int(key) < n:
                    raise ValueError(f"node {key} does not exist")
        for key, seq in self.arrival_sequences.items():
            if any(int(x) < 0 for x in seq):
                raise ValueError(f"arrival_sequences.{key}: counts must be >= 0")


@dataclass
class WindowReport:
    index: int
    start: int
    end: int
    spatial_throughput: float
    records: list
    population: LinkWindowRecord | None = None

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "start": self.start,
            "end": self.end,
            "spatial_throughput": self.spatial_throughput,
            "records": [r.as_dict() for r in self.records],
            "population": None if self.population is None else self.population.as_dict(),
        }


@dataclass
class RunReport:
    windows: list
    links: dict
    network: dict
    adaptation_log: list
    final_settings: dict
    backlog_traces: dict = field(default_factory=dict, repr=False)

    @property
    def spatial_throughput_series(self) -> list:
        return [w.spatial_throughput for w in self.windows]

    def to_dict(self) -> dict:
        return {
            "windows": [w.as_dict() for w in self.windows],
            "links": {str(k): v for k, v in self.links.items()},
            "network": self.network,
            "adaptation_log": self.adaptation_log,
            "final_settings": {str(k): asdict(v) for k, v in self.final_settings.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _initial_topology(cfg: ScenarioConfig) -> Topology:
    w, h = cfg.area
    if cfg.links is not None:
        return Topology(w, h, tuple(sorted(cfg.links, key=lambda l: l.id)))
    rng = np.random.default_rng([cfg.seed, st.TOPOLOGY])
    tx, rx = poisson_arrays(rng, cfg.mobility.density, cfg.area, cfg.mobility.link_distance)
    return Topology.from_arrays(w, h, tx, rx)


class _Window:
    def __init__(self, index, start):
        self.index, self.start = index, start
        self.records: dict[int, LinkWindowRecord] = {}

    def record(self, link, rate):
        rec = self.records.get(link)
        if rec is None:
            rec = self.records[link] = LinkWindowRecord(int(link), float(rate))
        return rec


class Simulation:
    """Mutable run state; ``run(config)`` is the public entry point."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.streams = st.Streams(cfg.seed)
        self.mobile = cfg.mobility.kind == HIGHLY_MOBILE
        self.model = cfg.channel
        self.area = cfg.area[0] * cfg.area[1]
        if self.mobile:
            self.topology = Topology(*cfg.area)
            n = 1
        else:
            self.topology = _initial_topology(cfg)
            n = len(self.topology)
            self.mean_gain = self.model.path_gain(
                torus_distances(self.topology.rx_array(), self.topology.tx_array(), *cfg.area))
            tx = self.topology.tx_array()
            self.tx_gain = self.model.path_gain(torus_distances(tx, tx, *cfg.area))
            np.fill_diagonal(self.tx_gain, 0.0)
        self.n = n
        self.settings = [cfg.node_settings.get(i, cfg.setting) for i in range(n)]
        self.common = cfg.setting
        self.backlog = np.full(n, cfg.initial_backlog, dtype=np.int64)
        self.hol = np.zeros(n, dtype=np.int64)
        self.delivered = np.zeros(n, dtype=np.int64)
        self.lost = np.zeros(n, dtype=np.int64)
        self.arrived = np.full(n, cfg.initial_backlog, dtype=np.int64)
        self.backoff = np.zeros(n, dtype=np.int64)
        self.csma_attempts = np.zeros(n, dtype=np.int64)
        self.sensed = np.zeros(n)
        self.traces = np.zeros((n, cfg.total_slots), dtype=np.int64)
        self.windows: list[WindowReport] = []
        self.adapt_log: list[dict] = []
        self.net_attempts = 0
        self.net_outages = 0
        self.prev_active_tx = np.zeros((0, 2))
        # fading-free fixed topology: OPT outcome depends only on (link, active set) until settings change
        self.opt_memo = {} if not self.mobile and self.model.fading == NO_FADING else None
        epoch = cfg.adaptation.epoch_length
        self.obs_arrivals = np.zeros((n, epoch), dtype=np.int64)
        self.obs_sensed = np.zeros((n, epoch))
        self.obs_tx = np.zeros((n, epoch), dtype=bool)

    # --- phases -----------------------------------------------------------

    def _arrivals(self, t: int) -> np.ndarray:
        u = self.streams.uniform(st.ARRIVALS, t, self.n)
        x = self.cfg.arrivals.draw(u)
        for key, seq in self.cfg.arrival_sequences.items():
            k = int(key)
            x[k] = int(seq[t]) if t < len(seq) else 0
        return x

    def _access(self, node: int, setting: DesignSetting, has_packet: bool, u: float, sensed: float,
                t: int, persistent: bool):
        """Returns (transmit, give_up)."""
        mac = setting.mac
        if not has_packet:
            return False, False
        if mac.kind == ALOHA:
            return bool(u < mac.aloha_p), False
        if mac.kind == TDMA:
            return mac.group_of(node) == t % mac.tdma_groups, False
        if not persistent:
            return sensed <= mac.csma_threshold, False
        if self.backoff[node] > 0:
            self.backoff[node] -= 1
            return False, False
        action, slots = csma_decide(sensed, mac, int(self.csma_attempts[node]), u)
        if action == TRANSMIT:
            return True, False
        if action == BACKOFF:
            self.csma_attempts[node] += 1
            self.backoff[node] = slots - 1
            return False, False
        self.csma_attempts[node] = 0
        return False, True

    def _outages(self, gains: np.ndarray, active: np.ndarray, settings) -> np.ndarray:
        """Outage flag for every active link, given the full gain matrix."""
        out = np.zeros(len(active), dtype=bool)
        if not len(active):
            return out
        rates = np.array([settings[k].coding_rate for k in active])
        ian = ian_rates(gains, active)
        out = rates > ian + 1e-12 * np.maximum(1.0, ian)
        out &= rates > 0
        opt_nodes = [i for i, k in enumerate(active) if settings[k].decoder == OPT and out[i]]
        if opt_nodes:
            all_rates = {int(k): settings[k].coding_rate for k in active}
            memo = self.opt_memo
            key = active.tobytes() if memo is not None else None
            for i in opt_nodes:
                k = int(active[i])
                if memo is not None and (k, key) in memo:
                    out[i] = memo[k, key]
                    continue
                out[i] = outage(k, all_rates[k], gains[k], active, OPT, all_rates, self.cfg.search_limit)
                if memo is not None:
                    memo[k, key] = out[i]
        return out

    def _account(self, node: int, success: bool, setting: DesignSetting):
        q = QueueState(int(self.backlog[node]), int(self.hol[node]), int(self.delivered[node]), int(self.lost[node]))
        q2, lost = on_transmission_result(q, success, setting.retx)
        self.hol[node], self.delivered[node], self.lost[node] = q2.hol_attempts, q2.delivered, q2.lost
        return q.backlog - q2.backlog, lost

    # --- slot -------------------------------------------------------------

    def _slot_static(self, t: int, win: _Window):
        cfg, n = self.cfg, self.n
        fades = fading_draws(self.model, n, t, self.streams)
        gains = self.mean_gain if fades is None else self.mean_gain * fades
        x = self._arrivals(t)
        u = self.streams.uniform(st.MAC, t, n)
        has = self.backlog > 0
        sensed_now = self.sensed.copy()
        transmit = np.zeros(n, dtype=bool)
        gave_up = []
        for k in range(n):
            tx, give = self._access(k, self.settings[k], bool(has[k]), float(u[k]), float(sensed_now[k]), t, True)
            transmit[k] = tx
            if give:
                gave_up.append(k)
        active = np.flatnonzero(transmit)
        out = self._outages(gains, active, self.settings)
        served = np.zeros(n, dtype=np.int64)
        for k in gave_up:
            served[k], lost = self._account(k, False, self.settings[k])
            if lost:
                win.record(k, self.settings[k].coding_rate).losses += 1
        for i, k in enumerate(active):
            s = self.settings[k]
            rec = win.record(k, s.coding_rate)
            rec.slots_active += 1
            if out[i]:
                rec.outages += 1
            else:
                rec.successes += 1
            served[k], lost = self._account(k, not out[i], s)
            if lost:
                rec.losses += 1
            if s.mac.kind == CSMA:
                self.csma_attempts[k] = 0
        self.net_attempts += len(active)
        self.net_outages += int(out.sum())
        self.backlog = queue_step(self.backlog, served, x)
        self.arrived += x
        for k in np.flatnonzero(x):
            win.record(int(k), self.settings[k].coding_rate).arrivals += int(x[k])
        self.traces[:, t] = self.backlog
        self.sensed = self.tx_gain[:, active].sum(axis=1) if len(active) else np.zeros(n)
        e = t % cfg.adaptation.epoch_length
        self.obs_arrivals[:, e] = x
        self.obs_sensed[:, e] = sensed_now
        self.obs_tx[:, e] = transmit

    def _slot_mobile(self, t: int, win: _Window, pop: LinkWindowRecord):
        cfg, model = self.cfg, self.model
        w, h = cfg.area
        d = cfg.mobility.link_distance
        tag_tx, tag_rx = place_links(self.streams.generator(st.TAGGED, t), 1, cfg.area, d)
        ptx, prx = poisson_arrays(self.streams.generator(st.TOPOLOGY, t), cfg.mobility.density, cfg.area, d)
        txs = np.vstack((tag_tx, ptx))
        rxs = np.vstack((tag_rx, prx))
        n = len(txs)
        x = self._arrivals(t)
        u = self.streams.generator(st.MAC, t).random(n)
        # sensing: previous slot's field at the current TX positions
        if len(self.prev_active_tx):
            sensed = model.path_gain(torus_distances(txs, self.prev_active_tx, w, h)).sum(axis=1)
        else:
            sensed = np.zeros(n)
        common = self.common
        settings = [common] * n
        transmit = np.zeros(n, dtype=bool)
        tag_tx_flag, give = self._access(0, common, bool(self.backlog[0] > 0), float(u[0]), float(sensed[0]), t, True)
        transmit[0] = tag_tx_flag
        mac = common.mac
        if mac.kind == ALOHA:
            transmit[1:] = u[1:] < mac.aloha_p
        elif mac.kind == TDMA:
            transmit[1:] = [mac.group_of(k) == t % mac.tdma_groups for k in range(1, n)]
        else:
            # ephemeral peers keep no backoff state: a busy channel defers them one slot
            transmit[1:] = sensed[1:] <= mac.csma_threshold
        active = np.flatnonzero(transmit)
        gains = np.zeros((n, n))
        if len(active):
            sub = model.path_gain(torus_distances(rxs[active], txs[active], w, h))
            fades = fading_draws(model, n, t, self.streams, per_slot=True)
            if fades is not None:
                sub = sub * fades[np.ix_(active, active)]
            gains[np.ix_(active, active)] = sub
        out = self._outages(gains, active, settings)
        served = np.zeros(1, dtype=np.int64)
        rec = win.record(0, common.coding_rate)
        if give:
            served[0], lost = self._account(0, False, common)
            rec.losses += int(lost)
        if transmit[0]:
            rec.slots_active += 1
            ok = not out[0]
            rec.successes += int(ok)
            rec.outages += int(not ok)
            served[0], lost = self._account(0, ok, common)
            rec.losses += int(lost)
            if common.mac.kind == CSMA:
                self.csma_attempts[0] = 0
        pop.slots_active += len(active)
        pop.outages += int(out.sum())
        pop.successes += int(len(active) - out.sum())
        self.net_attempts += len(active)
        self.net_outages += int(out.sum())
        self.backlog = queue_step(self.backlog, served, x)
        self.arrived += x
        rec.arrivals += int(x[0])
        self.traces[:, t] = self.backlog
        self.prev_active_tx = txs[active]
        e = t % cfg.adaptation.epoch_length
        self.obs_arrivals[0, e] = x[0]
        self.obs_sensed[0, e] = sensed[0]
        self.obs_tx[0, e] = transmit[0]

    # --- adaptation -------------------------------------------------------

    def _adapt(self, epoch: int):
        cfg = self.cfg
        ad = cfg.adaptation
        genie = ad.estimation == GENIE
        nodes = [0] if self.mobile else range(self.n)
        new = list(self.settings)
        for k in nodes:
            setting = self.common if self.mobile else self.settings[k]
            if self.mobile:
                own_d, dists, ids = cfg.mobility.link_distance, (), None
                density = cfg.mobility.density
            else:
                link = self.topology.links[k]
                others = [j for j in range(self.n) if j != k]
                dm = torus_distances(self.topology.rx_array()[[k]], self.topology.tx_array(), *cfg.area)[0]
                own_d = float(dm[k])
                dists, ids = tuple(float(dm[j]) for j in others), tuple(others)
                density = self.n / self.area
            obs = Observations(
                arrivals=self.obs_arrivals[k], sensed_power=self.obs_sensed[k],
                transmitted=self.obs_tx[k], own_link_distance=own_d,
                nominal_access=setting.mac.access_fraction(),
                interferer_distances=dists, interferer_ids=ids, own_id=k,
                genie_density=density if genie else None,
                genie_mobility=cfg.mobility.kind if genie else None,
            )
            est = estimate_state(obs, self.model, ad.cv_threshold)
            sel = select_setting(est, cfg.constraints, self.model, ad.grid, csma_base=setting.mac)
            new[k] = sel.setting
            self.adapt_log.append({
                "epoch": epoch, "node": k, "estimates": asdict(est),
                "chosen": asdict(sel.setting), "predicted_s": sel.predicted_spatial_throughput,
                "feasible": sel.feasible, "rules": list(sel.rules),
            })
        if self.mobile:
            self.common = new[0]
        self.settings = new
        if self.opt_memo is not None:
            self.opt_memo.clear()

    # --- driver -----------------------------------------------------------

    def _close(self, win: _Window, end: int, pop):
        length = end - win.start
        records = []
        ids = [0] if self.mobile else range(self.n)
        for k in ids:
            setting = self.common if self.mobile else self.settings[k]
            rec = win.record(k, setting.coding_rate)
            rec.slots_in_window = length
            records.append(rec)
        if pop is not None:
            pop.slots_in_window = length
            s = spatial_throughput([pop], self.area, length)
        else:
            s = spatial_throughput(records, self.area, length)
        self.windows.append(WindowReport(win.index, win.start, end, s, records, pop))

    def run(self) -> RunReport:
        cfg = self.cfg
        total = cfg.total_slots
        epoch_len = cfg.adaptation.epoch_length
        t = 0
        index = 0
        while t < total:
            end = min(t + cfg.window, total)
            win = _Window(index, t)
            pop = LinkWindowRecord(POPULATION, self.common.coding_rate) if self.mobile else None
            # settings are fixed within a window because epochs are whole windows
            for slot in range(t, end):
                if self.mobile:
                    self._slot_mobile(slot, win, pop)
                else:
                    self._slot_static(slot, win)
            self._close(win, end, pop)
            if cfg.adaptation.enabled and end % epoch_len == 0 and end < total:
                self._adapt(end // epoch_len - 1)
            t = end
            index += 1
        return self._report()

    def _report(self) -> RunReport:
        cfg = self.cfg
        links = {}
        for k in range(self.n):
            trace = self.traces[k]
            if len(trace) >= MIN_TRACE:
                v = stability_verdict(trace, cfg.constraints.drift_tolerance)
                verdict = {"stable": v.stable, "drift": v.drift}
            else:
                verdict = None
            arrivals = int(self.arrived[k])
            links[k] = {
                "arrivals": arrivals,
                "delivered": int(self.delivered[k]),
                "lost": int(self.lost[k]),
                "backlog": int(self.backlog[k]),
                "plr": int(self.lost[k]) / arrivals if arrivals else None,
                "stability": verdict,
            }
        network = {
            "attempts": self.net_attempts,
            "outages": self.net_outages,
            "outage_probability": self.net_outages / self.net_attempts if self.net_attempts else None,
            "area": self.area,
            "mode": cfg.mobility.kind,
            "links": self.n,
        }
        final = {0: self.common} if self.mobile else dict(enumerate(self.settings))
        traces = {k: self.traces[k] for k in range(self.n)}
        return RunReport(self.windows, links, network, self.adapt_log, final, traces)


def run(config: ScenarioConfig) -> RunReport:
    return Simulation(config).run()
