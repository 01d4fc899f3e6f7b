"""Success probabilities and time-resource estimates for ion-trap networks.

All times are in seconds. ``P`` is the per-attempt success probability of
the two-qubit herald, so the expected number of attempts is the mean of a
geometric distribution, 1/P.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.constants import c as SPEED_OF_LIGHT

from .heralding import type1_success, type2_success
from .validation import check_positive, check_probability

SECONDS_PER_YEAR = 365.25 * 86400.0  # Julian year


def atom_photon_success(p_e: float, p_c: float, p_t: float) -> float:
    """P_ap = p_e p_c p_t."""
    return check_probability("p_e", p_e) * check_probability("p_c", p_c) * check_probability("p_t", p_t)


def deterministic_gate_time(tau_rep: float, P: float) -> float:
    """Mean time for one heralded link and hence one remote gate."""
    check_positive("tau_rep", tau_rep)
    check_probability("P", P, open_low=True)
    return tau_rep / P


def repeater_time(n_nodes: float, tau_rep: float, P: float) -> float:
    """(tau_rep / P) log2(N) for nested entanglement swapping over N links."""
    if not n_nodes >= 2:
        raise ValueError(f"n_nodes must be >= 2, got {n_nodes}")
    return deterministic_gate_time(tau_rep, P) * math.log2(n_nodes)


def _cluster_domain(n, P, epsilon):
    """Violated preconditions of :func:`cluster_time`, as messages."""
    problems = []
    if not (0.0 < P < 1.0):
        problems.append(f"P must lie in (0, 1), got {P}")
        return problems
    if not 4.0 / P - 3.0 > 1.0:
        problems.append(f"4/P - 3 must exceed 1, got {4.0 / P - 3.0}")
    if not (0.0 < epsilon < 1.0):
        problems.append(f"epsilon must lie in (0, 1), got {epsilon}")
        return problems
    if not n >= 2:
        problems.append(f"n must be >= 2, got {n}")
        return problems
    if not math.log(2.0 * n / epsilon) > 1.0:
        problems.append(f"ln(2n/epsilon) must exceed 1, got {math.log(2.0 * n / epsilon)}")
    return problems


def cluster_time(n: float, P: float, epsilon: float, tau_rep: float) -> float:
    """Time to grow an n-node cluster state with failure probability epsilon.

    The first term is the cost of the doubling stage, the second and third
    the fusion of those seeds into n nodes. ``n`` may be non-integer.
    """
    check_positive("tau_rep", tau_rep)
    problems = _cluster_domain(n, P, epsilon)
    if problems:
        raise ValueError("; ".join(problems))
    log_term = math.log(2.0 * n / epsilon)
    seed = (1.0 / P) ** math.log2(4.0 / P - 3.0)
    fuse = math.log2(4.0 * (log_term - 1.0) / P) / P
    return tau_rep * (seed + fuse + log_term / P)


def bell_separation(t_detect: float) -> float:
    """Distance light travels during the detection window, in metres."""
    return SPEED_OF_LIGHT * check_positive("t_detect", t_detect)


def seconds_to_years(seconds: float) -> float:
    return seconds / SECONDS_PER_YEAR


def years_to_seconds(years: float) -> float:
    return years * SECONDS_PER_YEAR


def human_duration(seconds: float) -> str:
    """Compact readable duration, e.g. '162 ms' or '5.85e+03 years'."""
    if seconds < 0 or not math.isfinite(seconds):
        raise ValueError(f"duration must be finite and >= 0, got {seconds}")
    for limit, unit, scale in ((1e-6, "ns", 1e-9), (1e-3, "us", 1e-6), (1.0, "ms", 1e-3),
                               (3600.0, "s", 1.0), (86400.0, "h", 3600.0),
                               (SECONDS_PER_YEAR, "days", 86400.0)):
        if seconds < limit:
            return f"{seconds / scale:.3g} {unit}"
    years = seconds_to_years(seconds)
    return f"{years:.3g} years" if years < 1e3 else f"{years:.3e} years"


@dataclass(frozen=True)
class NetworkParams:
    p_e: float = 0.5
    p_c: float = 0.02
    p_t: float = 0.2
    eta_det: float = 0.2
    p_B: float = 0.25
    tau_rep: float = 1e-6
    P: float = 0.1
    n: float = 1000.0
    epsilon: float = 0.1
    N_nodes: float = 2.0
    t_detect: float = 10e-6

    def __post_init__(self):
        for name in ("p_e", "p_c", "p_t", "eta_det", "p_B", "P"):
            check_probability(name, getattr(self, name), open_low=True)
        check_positive("tau_rep", self.tau_rep)
        check_positive("t_detect", self.t_detect)
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.n >= 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not self.N_nodes >= 2:
            raise ValueError(f"N_nodes must be >= 2, got {self.N_nodes}")


def network_report(params: NetworkParams) -> dict:
    """Every estimate for one parameter set, keyed for JSON output."""
    p_ap = atom_photon_success(params.p_e, params.p_c, params.p_t)
    t_cluster = cluster_time(params.n, params.P, params.epsilon, params.tau_rep)
    return {
        "inputs": asdict(params),
        "P_ap": p_ap,
        "P_I": type1_success(p_ap, params.eta_det),
        "P_II": type2_success(p_ap, params.eta_det, params.p_B),
        "t_gate": deterministic_gate_time(params.tau_rep, params.P),
        "t_repeater": repeater_time(params.N_nodes, params.tau_rep, params.P),
        "T_cluster_seconds": t_cluster,
        "T_cluster_human": human_duration(t_cluster),
        "bell_distance_m": bell_separation(params.t_detect),
    }
