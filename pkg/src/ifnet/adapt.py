"""Per-node estimation and design-setting selection.

A node estimates its traffic, the mobility regime and the network density from
its own observations, then picks coding rate, decoder, MAC policy and
retransmission limit by grid search on a predicted spatial throughput. The
prediction assumes every other node adopts the same setting (symmetry of
external pressures), which is what makes the node optimize for the network
rather than for itself.

Structural choices follow a rule table keyed on mobility, density, traffic
load and a minimum-rate requirement:

quasi-static
    sparse, light traffic, no minimum rate -> one reuse group, no retransmissions,
    rate equal to the achievable rate of the realized topology.
    minimum rate unattainable with one group -> search over time-division groups.
    dense -> search over time-division groups; OPT decoding allowed.
    heavy traffic -> joint (groups, rate) search under the stability constraint,
    otherwise bounded retransmissions in the fallback.
highly-mobile
    IAN only, no time-division. Sparse -> CSMA. Dense -> slotted ALOHA, with the
    access probability, rate and retransmission limit tuned jointly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from itertools import product

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma

from .channel import ChannelModel
from .geometry import HIGHLY_MOBILE, MOBILITY_KINDS, QUASI_STATIC
from .mac import ALOHA, CSMA, TDMA, MacPolicy
from .rates import DECODERS, IAN, OPT, ian_rate, opt_common_rate, opt_rate
from .traffic import RetxPolicy

MIN_WINDOW = 100
EXACT_ENUMERATION = 12


@dataclass(frozen=True)
class Estimates:
    density_hat: float
    arrival_rate_hat: float
    mobility_class: str
    own_link_distance: float
    interferer_distances: tuple = ()
    interferer_ids: tuple | None = None
    own_id: int = 0

    def __post_init__(self):
        if self.density_hat < 0:
            raise ValueError("density_hat must be >= 0")
        if not 0.0 <= self.arrival_rate_hat <= 1.0:
            raise ValueError("arrival_rate_hat must be in [0, 1]")
        if self.mobility_class not in MOBILITY_KINDS:
            raise ValueError(f"mobility_class must be one of {MOBILITY_KINDS}")
        if not self.own_link_distance > 0:
            raise ValueError("own_link_distance must be > 0")
        object.__setattr__(self, "interferer_distances", tuple(map(float, self.interferer_distances)))
        if self.interferer_ids is not None:
            ids = tuple(map(int, self.interferer_ids))
            if len(ids) != len(self.interferer_distances):
                raise ValueError("interferer_ids and interferer_distances differ in length")
            object.__setattr__(self, "interferer_ids", ids)

    def ids(self) -> tuple:
        if self.interferer_ids is not None:
            return self.interferer_ids
        return tuple(self.own_id + 1 + i for i in range(len(self.interferer_distances)))


@dataclass(frozen=True)
class DesignSetting:
    coding_rate: float = 1.0
    decoder: str = IAN
    mac: MacPolicy = field(default_factory=MacPolicy)
    retx: RetxPolicy = field(default_factory=RetxPolicy)

    def __post_init__(self):
        if not (self.coding_rate >= 0 and math.isfinite(self.coding_rate)):
            raise ValueError("coding_rate must be finite and >= 0")
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}")


@dataclass(frozen=True)
class ConstraintSet:
    plr_bound: float = 0.1
    min_rate: float | None = None
    drift_tolerance: float = 0.01
    power: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.plr_bound <= 1.0:
            raise ValueError("plr_bound must be in [0, 1]")
        if self.min_rate is not None and self.min_rate < 0:
            raise ValueError("min_rate must be >= 0")
        if self.drift_tolerance < 0:
            raise ValueError("drift_tolerance must be >= 0")
        if self.power is not None and not self.power > 0:
            raise ValueError("power must be > 0")


def _default_rates():
    return tuple(float(r) for r in np.geomspace(0.05, 8.0, 32))


@dataclass(frozen=True)
class SearchGrid:
    access_probs: tuple = tuple(round(0.1 * i, 1) for i in range(1, 11))
    rates: tuple = field(default_factory=_default_rates)
    max_transmissions: tuple = (1, 2, 4, 8, None)
    tdma_groups: tuple = (1, 2, 4)
    csma_radius_factors: tuple = (2.0, 3.0, 5.0)
    dense_radius_factor: float = 3.0
    heavy_fraction: float = 0.5

    def __post_init__(self):
        if not self.access_probs or not self.rates or not self.max_transmissions or not self.tdma_groups:
            raise ValueError("grid axes must be nonempty")
        if any(not 0 < p <= 1 for p in self.access_probs):
            raise ValueError("access_probs must lie in (0, 1]")
        if any(r < 0 for r in self.rates):
            raise ValueError("rates must be >= 0")
        if any(m is not None and m < 1 for m in self.max_transmissions):
            raise ValueError("max_transmissions entries must be >= 1 or null")
        if any(m < 1 for m in self.tdma_groups):
            raise ValueError("tdma_groups entries must be >= 1")


DEFAULT_GRID = SearchGrid()


# --- estimation ------------------------------------------------------------

@dataclass
class Observations:
    """One node's local record over an observation window.

    ``sensed_power`` is the aggregate power at the node's TX from the previous
    slot's transmitters. Distances and the genie fields are optional side
    information.
    """

    arrivals: np.ndarray
    sensed_power: np.ndarray
    transmitted: np.ndarray
    own_link_distance: float
    nominal_access: float = 1.0
    interferer_distances: tuple = ()
    interferer_ids: tuple | None = None
    own_id: int = 0
    genie_density: float | None = None
    genie_mobility: str | None = None


def mobility_classify(trace, threshold: float = 0.1) -> str:
    """quasi-static iff std of slot-to-slot changes over the mean level is below threshold.

    Any variation counts, including variation caused by random access, so a
    quasi-static network running ALOHA reads as mobile unless the threshold is
    raised.
    """
    trace = np.asarray(trace, dtype=float)
    if len(trace) < MIN_WINDOW:
        raise ValueError(f"trace too short: need >= {MIN_WINDOW} slots")
    level = trace.mean()
    if level <= 0:
        return QUASI_STATIC
    cv = np.diff(trace).std() / level
    return QUASI_STATIC if cv < threshold else HIGHLY_MOBILE


def mean_interference_per_density(model: ChannelModel) -> float:
    """E[aggregate power] per unit density of active Poisson transmitters, bounded path loss."""
    a, d0 = model.path_loss_exponent, model.min_distance
    return model.tx_power * math.pi * d0 ** (2 - a) * a / (a - 2)


def estimate_state(obs: Observations, model: ChannelModel, cv_threshold: float = 0.1) -> Estimates:
    arrivals = np.asarray(obs.arrivals)
    if len(arrivals) < MIN_WINDOW:
        raise ValueError(f"window too short: need >= {MIN_WINDOW} slots")
    sensed = np.asarray(obs.sensed_power, dtype=float)
    mobility = obs.genie_mobility or mobility_classify(sensed, cv_threshold)
    if obs.genie_density is not None:
        density = float(obs.genie_density)
    else:
        busy = float(np.mean(obs.transmitted)) if len(obs.transmitted) else 0.0
        activity = busy if busy > 0 else obs.nominal_access
        mean_power = float(sensed.mean()) if len(sensed) else 0.0
        density = 0.0 if mean_power <= 0 or activity <= 0 else (
            mean_power / mean_interference_per_density(model) / activity)
    distances = obs.interferer_distances if mobility == QUASI_STATIC else ()
    ids = obs.interferer_ids if mobility == QUASI_STATIC else None
    return Estimates(
        density_hat=density,
        arrival_rate_hat=float(np.clip(arrivals.mean(), 0.0, 1.0)),
        mobility_class=mobility,
        own_link_distance=obs.own_link_distance,
        interferer_distances=tuple(distances),
        interferer_ids=None if ids is None else tuple(ids),
        own_id=obs.own_id,
    )


# --- prediction ------------------------------------------------------------

def ppp_success_probability(active_density: float, rate: float, link_distance: float,
                            model: ChannelModel) -> float:
    """Rayleigh-faded link among Poisson interferers: exp(-theta/SNR) * exp(-lambda pi d^2 theta^(2/a) G)."""
    a = model.path_loss_exponent
    if a <= 2:
        raise ValueError("path-loss exponent must exceed 2")
    d = max(link_distance, model.min_distance)
    theta = 2.0 ** rate - 1.0
    noise_term = theta * d ** a / model.tx_power
    spatial = active_density * math.pi * d * d * theta ** (2.0 / a) * gamma(1 + 2 / a) * gamma(1 - 2 / a)
    return math.exp(-noise_term - spatial)


def csma_idle_probability(density: float, sensing_radius: float) -> float:
    """Fixed point q = exp(-density q pi r^2): nobody active inside the sensing radius."""
    c = density * math.pi * sensing_radius ** 2
    if c <= 0:
        return 1.0
    return float(brentq(lambda q: q - math.exp(-c * q), 0.0, 1.0, xtol=1e-14))


def csma_policy(radius: float, model: ChannelModel, base: MacPolicy | None = None) -> MacPolicy:
    base = base or MacPolicy(kind=CSMA)
    return replace(base, kind=CSMA, csma_threshold=float(model.path_gain(radius)))


def _csma_radius(policy: MacPolicy, model: ChannelModel) -> float:
    if policy.csma_threshold <= 0:
        return math.inf
    return (model.tx_power / policy.csma_threshold) ** (1.0 / model.path_loss_exponent)


def access_fraction(est: Estimates, mac: MacPolicy, model: ChannelModel) -> float:
    if mac.kind == CSMA:
        if est.mobility_class == HIGHLY_MOBILE:
            return csma_idle_probability(est.density_hat, _csma_radius(mac, model))
        return 1.0
    return mac.access_fraction()


def _interferer_activity(est: Estimates, own: DesignSetting, peers: DesignSetting) -> np.ndarray:
    """Probability that each known interferer transmits in a slot the own TX uses."""
    ids = np.array(est.ids(), dtype=int)
    if peers.mac.kind == TDMA:
        if own.mac.kind == TDMA and own.mac.tdma_groups == peers.mac.tdma_groups:
            own_group = own.mac.group_of(est.own_id)
            return np.array([1.0 if peers.mac.group_of(int(j)) == own_group else 0.0 for j in ids])
        return np.full(len(ids), 1.0 / peers.mac.tdma_groups)
    if peers.mac.kind == ALOHA:
        return np.full(len(ids), peers.mac.aloha_p)
    return np.ones(len(ids))


def _static_success(est: Estimates, own: DesignSetting, peers: DesignSetting,
                    model: ChannelModel) -> float:
    signal = float(model.path_gain(est.own_link_distance))
    powers = model.path_gain(np.array(est.interferer_distances)) if est.interferer_distances else np.zeros(0)
    act = _interferer_activity(est, own, peers)
    rate = own.coding_rate
    theta = 2.0 ** rate - 1.0
    if rate <= 0:
        return 1.0

    if model.fading != "none":
        # exact for IAN; used as a lower bound for OPT
        return float(math.exp(-theta / signal) * np.prod(1.0 - act * theta * powers / (signal + theta * powers)))

    sure = act >= 1.0
    maybe = (act > 0) & ~sure
    if own.decoder == OPT and not maybe.any():
        row = np.concatenate(([signal], powers[sure]))
        active = range(len(row))
        if peers.coding_rate == rate:
            best, _ = opt_common_rate(0, row, active)
        else:
            best, _ = opt_rate(0, row, active, [0.0] + [peers.coding_rate] * int(sure.sum()))
        return 1.0 if rate <= best * (1 + 1e-12) + 1e-12 else 0.0

    # IAN (and OPT with random peers, scored as IAN): enumerate the strongest random interferers
    budget = signal / theta - 1.0
    fixed = powers[sure].sum()
    idx = np.flatnonzero(maybe)
    idx = idx[np.argsort(-powers[idx])]
    exact, rest = idx[:EXACT_ENUMERATION], idx[EXACT_ENUMERATION:]
    fixed += float(np.dot(act[rest], powers[rest]))
    if not exact.size:
        return 1.0 if fixed <= budget * (1 + 1e-12) else 0.0
    n = exact.size
    combos = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(float)
    p = act[exact]
    weights = np.prod(np.where(combos > 0, p, 1.0 - p), axis=1)
    interference = fixed + combos @ powers[exact]
    return float(weights[interference <= budget * (1 + 1e-12)].sum())


def success_probability(est: Estimates, own: DesignSetting, model: ChannelModel,
                        peers: DesignSetting | None = None) -> float:
    """Predicted per-attempt success probability of the own link."""
    peers = own if peers is None else peers
    if est.mobility_class == QUASI_STATIC:
        return _static_success(est, own, peers, model)
    activity = access_fraction(est, peers.mac, model)
    return ppp_success_probability(est.density_hat * activity, own.coding_rate,
                                   est.own_link_distance, model)


def predicted_link_throughput(est: Estimates, own: DesignSetting, model: ChannelModel,
                              peers: DesignSetting | None = None) -> float:
    """Own delivered bits per slot when backlogged: access x rate x success."""
    return access_fraction(est, own.mac, model) * own.coding_rate * success_probability(est, own, model, peers)


def predicted_spatial_throughput(est: Estimates, candidate: DesignSetting, model: ChannelModel) -> float:
    """bits/s/Hz/m^2 when every link adopts ``candidate``."""
    if model.path_loss_exponent <= 2:
        raise ValueError("path-loss exponent must exceed 2")
    return est.density_hat * predicted_link_throughput(est, candidate, model)


def predicted_plr(success: float, retx: RetxPolicy) -> float:
    if not retx.bounded:
        return 0.0
    return (1.0 - success) ** retx.max_transmissions


# --- selection -------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    setting: DesignSetting
    spatial_throughput: float
    success: float
    access: float
    plr: float
    stable: bool
    feasible: bool


@dataclass(frozen=True)
class Selection:
    setting: DesignSetting
    predicted_spatial_throughput: float
    feasible: bool
    rules: tuple
    success: float
    plr: float

    def as_dict(self) -> dict:
        return {
            "setting": setting_to_dict(self.setting),
            "predicted_spatial_throughput": self.predicted_spatial_throughput,
            "feasible": self.feasible,
            "rules": list(self.rules),
            "success": self.success,
            "plr": self.plr,
        }


def setting_to_dict(s: DesignSetting) -> dict:
    return asdict(s)


def is_dense(est: Estimates, grid: SearchGrid = DEFAULT_GRID) -> bool:
    radius = grid.dense_radius_factor * est.own_link_distance
    if est.mobility_class == QUASI_STATIC and est.interferer_distances:
        return sum(d < radius for d in est.interferer_distances) >= 1
    return est.density_hat * math.pi * radius ** 2 >= 1.0


def evaluate(est: Estimates, setting: DesignSetting, constraints: ConstraintSet,
             model: ChannelModel, success: float | None = None) -> Candidate:
    """Predicted throughput and constraint check for one candidate under symmetry."""
    if success is None:
        success = success_probability(est, setting, model)
    access = access_fraction(est, setting.mac, model)
    s = est.density_hat * access * setting.coding_rate * success
    plr = predicted_plr(success, setting.retx)
    lam = est.arrival_rate_hat
    stable = lam == 0 or lam < success * access
    ok = stable and plr <= constraints.plr_bound
    if constraints.min_rate is not None:
        ok = ok and setting.coding_rate >= constraints.min_rate
    return Candidate(setting, s, success, access, plr, stable, ok)


def _tiebreak_key(c: Candidate):
    st = c.setting
    m = st.retx.max_transmissions
    return (st.mac.aloha_p if st.mac.kind == ALOHA else 1.0, st.coding_rate,
            math.inf if m is None else m, st.mac.tdma_groups, DECODERS.index(st.decoder))


def best_candidate(cands):
    cands = list(cands)
    if not cands:
        return None
    top = max(c.spatial_throughput for c in cands)
    tol = 1e-12 * max(1.0, abs(top)) if top > 0 else 0.0
    tied = [c for c in cands if c.spatial_throughput >= top - tol]
    return min(tied, key=_tiebreak_key)


def _exact_rate(est: Estimates, mac: MacPolicy, decoder: str, model: ChannelModel) -> float | None:
    """Highest rate decoded with certainty in a fading-free quasi-static topology."""
    if model.fading != "none" or est.mobility_class != QUASI_STATIC or mac.kind != TDMA:
        return None
    probe = DesignSetting(1.0, decoder, mac)
    act = _interferer_activity(est, probe, probe)
    signal = float(model.path_gain(est.own_link_distance))
    powers = model.path_gain(np.array(est.interferer_distances)) if est.interferer_distances else np.zeros(0)
    row = np.concatenate(([signal], powers[act >= 1.0]))
    active = range(len(row))
    if decoder == IAN:
        return ian_rate(0, row, active)
    return opt_common_rate(0, row, active)[0]


def candidate_search(est: Estimates, constraints: ConstraintSet, model: ChannelModel,
                     macs, decoders, rates, max_transmissions) -> list[Candidate]:
    out = []
    for mac, decoder in product(macs, decoders):
        rate_axis = list(rates)
        exact = _exact_rate(est, mac, decoder, model)
        if exact is not None and exact > 0:
            rate_axis.append(exact)
        for rate in sorted(set(rate_axis)):
            base = DesignSetting(rate, decoder, mac, RetxPolicy(None))
            success = success_probability(est, base, model)
            for m in max_transmissions:
                out.append(evaluate(est, replace(base, retx=RetxPolicy(m)), constraints, model, success))
    return out


def _default_setting(est: Estimates, model: ChannelModel, grid: SearchGrid) -> DesignSetting:
    low = min(grid.rates)
    if est.mobility_class == QUASI_STATIC:
        mac = MacPolicy(kind=TDMA, tdma_groups=1)
        exact = _exact_rate(est, mac, IAN, model)
        return DesignSetting(exact if exact is not None else low, IAN, mac, RetxPolicy(1))
    best_p = max(grid.access_probs,
                 key=lambda p: p * ppp_success_probability(est.density_hat * p, low, est.own_link_distance, model))
    return DesignSetting(low, IAN, MacPolicy(kind=ALOHA, aloha_p=best_p), RetxPolicy(None))


def max_service_rate(est: Estimates, setting: DesignSetting, model: ChannelModel) -> float:
    return access_fraction(est, setting.mac, model) * success_probability(est, setting, model)


def is_heavy(est: Estimates, model: ChannelModel, grid: SearchGrid = DEFAULT_GRID) -> bool:
    service = max_service_rate(est, _default_setting(est, model, grid), model)
    return est.arrival_rate_hat > grid.heavy_fraction * service


def select_setting(est: Estimates, constraints: ConstraintSet, model: ChannelModel,
                   grid: SearchGrid = DEFAULT_GRID, csma_base: MacPolicy | None = None) -> Selection:
    if constraints.power is not None and constraints.power != model.tx_power:
        model = replace(model, tx_power=constraints.power)
    dense = is_dense(est, grid)
    heavy = is_heavy(est, model, grid)
    rules = []

    if est.mobility_class == QUASI_STATIC:
        decoders = (IAN, OPT) if dense else (IAN,)
        if dense:
            rules.append("opt-allowed-dense")
        if not dense and not heavy and constraints.min_rate is None:
            rules.append("qs-no-mac-no-retx")
            groups, retx = (1,), (1,)
        else:
            groups, retx = grid.tdma_groups, grid.max_transmissions
            if constraints.min_rate is not None:
                single = max(_exact_rate(est, MacPolicy(kind=TDMA), d, model) or 0.0 for d in decoders)
                if single < constraints.min_rate:
                    rules.append("qs-min-rate-time-division")
            if dense:
                rules.append("qs-dense-time-division")
            if heavy:
                rules.append("qs-heavy-joint-groups-rate")
        macs = [MacPolicy(kind=TDMA, tdma_groups=m) for m in groups]
    else:
        decoders = (IAN,)
        rules += ["mobile-ian-only", "mobile-no-time-division"]
        retx = grid.max_transmissions
        if not dense:
            rules.append("mobile-sparse-csma")
            macs = [csma_policy(f * est.own_link_distance, model, csma_base) for f in grid.csma_radius_factors]
        else:
            rules.append("mobile-dense-heavy-joint" if heavy else "mobile-dense-aloha")
            macs = [MacPolicy(kind=ALOHA, aloha_p=p) for p in grid.access_probs]

    cands = candidate_search(est, constraints, model, macs, decoders, grid.rates, retx)
    best = best_candidate(c for c in cands if c.feasible)
    if best is not None:
        s = best.setting
        return Selection(s, best.spatial_throughput, True, tuple(rules), best.success, best.plr)

    rules.append("infeasible-fallback")
    low = min(grid.rates)
    bounded = [m for m in grid.max_transmissions if m is not None]
    retx_fb = RetxPolicy(max(bounded) if bounded else None)
    if est.mobility_class == QUASI_STATIC:
        mac = MacPolicy(kind=TDMA, tdma_groups=max(grid.tdma_groups))
    elif not dense:
        mac = macs[-1]
    else:
        mac = MacPolicy(kind=ALOHA, aloha_p=min(grid.access_probs))
    fb = evaluate(est, DesignSetting(low, IAN, mac, retx_fb), constraints, model)
    return Selection(fb.setting, fb.spatial_throughput, False, tuple(rules), fb.success, fb.plr)


# --- selfish vs network objective -------------------------------------------

def network_optimal_setting(est: Estimates, model: ChannelModel, macs, rates,
                            decoder: str = IAN, retx: RetxPolicy = RetxPolicy(None)) -> DesignSetting:
    """Common setting maximizing predicted spatial throughput (no constraints)."""
    loose = ConstraintSet(plr_bound=1.0)
    free = replace(est, arrival_rate_hat=0.0)
    cands = candidate_search(free, loose, model, macs, (decoder,), rates, (retx.max_transmissions,))
    return best_candidate(cands).setting


def best_response(est: Estimates, peers: DesignSetting, model: ChannelModel, macs, rates) -> DesignSetting:
    """Setting maximizing the node's own throughput with the peers' setting held fixed."""
    best, best_val = None, -1.0
    for mac, rate in product(macs, rates):
        own = DesignSetting(rate, peers.decoder, mac, peers.retx)
        val = predicted_link_throughput(est, own, model, peers)
        key = (mac.aloha_p if mac.kind == ALOHA else 1.0, rate)
        if val > best_val * (1 + 1e-12) or (best is not None and abs(val - best_val) <= 1e-12 * max(1.0, best_val)
                                             and key < (best.mac.aloha_p, best.coding_rate)):
            best, best_val = own, val
    return best


def selfish_fixed_point(est: Estimates, model: ChannelModel, macs, rates,
                        start: DesignSetting, max_iter: int = 100) -> DesignSetting:
    """Iterate symmetric best responses until the setting stops changing."""
    current = start
    for _ in range(max_iter):
        nxt = best_response(est, current, model, macs, rates)
        if nxt == current:
            return current
        current = nxt
    raise RuntimeError("best-response iteration did not converge")
