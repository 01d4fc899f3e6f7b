"""Beamsplitter interference and heralded atom-atom entanglement.

Port A of the beamsplitter feeds detector ``D1`` and port B feeds ``D2``.
Detectors are threshold (non photon-number resolving) and frequency blind;
when ``resolves_time`` is set they report the ``t1``/``t2`` bin of each click.
"""
from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .hilbert import (
    DOWN,
    UP,
    Mode,
    PureState,
    atomic_basis,
    atomic_state,
    atomic_vectors,
    ket,
    reorder_modes,
    tensor,
)
from .photon_source import QUBIT_CHANNELS, QubitKind, make_number_pair, make_pair
from .validation import check_finite, check_nonnegative, check_probability

DETECTOR_PORT = {"D1": "A", "D2": "B"}
PORT_DETECTOR = {v: k for k, v in DETECTOR_PORT.items()}
TIME_CHANNELS = ("t1", "t2")
MAX_OCCUPATION = 2

# default Bell-state detection probabilities for the two gate-capable encodings
DEFAULT_P_B = {QubitKind.FREQUENCY: 0.25, QubitKind.TIMEBIN: 0.5}

HERALDED_GATE = np.diag([0.0, 1.0, -1.0, 0.0])


@dataclass(frozen=True)
class Detector:
    id: str
    efficiency: float = 1.0
    resolves_time: bool = True
    resolves_frequency: bool = False

    def __post_init__(self):
        if self.id not in DETECTOR_PORT:
            raise ValueError(f"detector id must be D1 or D2, got {self.id!r}")
        check_probability("efficiency", self.efficiency)
        if self.resolves_frequency:
            raise ValueError("photomultipliers do not resolve frequency")


@dataclass(frozen=True)
class DetectionPattern:
    """Set of click events ``(detector, time bin or None)``."""

    events: tuple[tuple[str, str | None], ...]

    def __post_init__(self):
        events = tuple(sorted(set(self.events), key=lambda e: (e[0], e[1] or "")))
        for det, t in events:
            if det not in DETECTOR_PORT:
                raise ValueError(f"unknown detector {det!r}")
            if t is not None and t not in TIME_CHANNELS:
                raise ValueError(f"unknown time bin {t!r}")
        object.__setattr__(self, "events", events)

    @classmethod
    def parse(cls, text: str) -> DetectionPattern:
        """Parse ``"D1,D2"`` or ``"D1@t1,D2@t2"``."""
        events = []
        for item in filter(None, (p.strip() for p in text.split(","))):
            det, _, t = item.partition("@")
            events.append((det, t or None))
        return cls(tuple(events))

    @property
    def timed(self) -> bool:
        return any(t is not None for _, t in self.events)

    def __str__(self):
        return ",".join(det if t is None else f"{det}@{t}" for det, t in self.events) or "none"


COINCIDENCE = DetectionPattern((("D1", None), ("D2", None)))


@dataclass(frozen=True)
class PathGeometry:
    """Path-length offset between the two photon channels.

    ``delta_k`` (1/m) and ``delta_x`` (m) set the type I phase
    ``phi = delta_k * delta_x``; ``delta_omega`` (rad/s) sets the type II
    offset phase ``delta_omega * delta_x / c``.
    """

    delta_k: float = 0.0
    delta_x: float = 0.0
    delta_omega: float = 0.0

    def __post_init__(self):
        for name in ("delta_k", "delta_x", "delta_omega"):
            check_finite(name, getattr(self, name))

    @property
    def phi(self) -> float:
        return self.delta_k * self.delta_x


@dataclass
class HeraldOutcome:
    atomic_state: PureState
    probability: float
    pattern: DetectionPattern
    protocol: str = ""
    purity: float = 1.0
    infidelity: float | None = None

    def to_record(self) -> dict:
        return {
            "protocol": self.protocol,
            "pattern": [[det, t] for det, t in self.pattern.events],
            "probability": self.probability,
            "atomic_state": [list(r) for r in self.atomic_state.to_records()],
        }


class BellComponent(NamedTuple):
    name: str
    photonic: PureState
    atomic: PureState


# ---------------------------------------------------------------- beamsplitter


def _bs_port_pair(n_a: int, n_b: int) -> dict[tuple[int, int], float]:
    # a+ -> (a+ - b+)/sqrt2, b+ -> (a+ + b+)/sqrt2
    out: dict[tuple[int, int], float] = {}
    pref = 2.0 ** (-(n_a + n_b) / 2) / math.sqrt(math.factorial(n_a) * math.factorial(n_b))
    for j in range(n_a + 1):
        cj = math.comb(n_a, j) * (-1) ** (n_a - j)
        for k in range(n_b + 1):
            ck = math.comb(n_b, k)
            p = j + k
            q = n_a + n_b - p
            amp = pref * cj * ck * math.sqrt(math.factorial(p) * math.factorial(q))
            out[(p, q)] = out.get((p, q), 0.0) + amp
    return {k: v for k, v in out.items() if v != 0.0}


def beamsplitter(state: PureState) -> PureState:
    """Apply a 50:50 beamsplitter between ports A and B, channel by channel.

    |0>_A|1>_B -> (|0>_A|1>_B + |1>_A|0>_B)/sqrt2 and
    |1>_A|1>_B -> (-|0>_A|2>_B + |2>_A|0>_B)/sqrt2.
    Modes missing on one port are added with zero occupation.
    """
    channels = sorted({m.channel for m in state.modes})
    modes = list(state.modes)
    for ch in channels:
        for port in ("A", "B"):
            if Mode(port, ch) not in modes:
                modes.append(Mode(port, ch))
    state = reorder_modes(state, modes)
    pairs = [(modes.index(Mode("A", ch)), modes.index(Mode("B", ch))) for ch in channels]

    terms: dict = {}
    for (atoms, occ), amp in state:
        for i, n in enumerate(occ):
            if n > MAX_OCCUPATION:
                raise ValueError(
                    f"occupation {n} in mode {modes[i]} exceeds the modeled regime (<= {MAX_OCCUPATION})"
                )
        partial = [(list(occ), amp)]
        for ia, ib in pairs:
            out = _bs_port_pair(occ[ia], occ[ib])
            nxt = []
            for cur, a in partial:
                for (p, q), c in out.items():
                    new = list(cur)
                    new[ia], new[ib] = p, q
                    nxt.append((new, a * c))
            partial = nxt
        for new, a in partial:
            key = (atoms, tuple(new))
            terms[key] = terms.get(key, 0j) + a
    cleaned = {k: v for k, v in terms.items() if v != 0}
    return PureState(state.atoms, tuple(modes), cleaned)


# ------------------------------------------------------------------ detection


def _slot(mode: Mode, resolves_time: bool):
    t = mode.channel if (resolves_time and mode.channel in TIME_CHANNELS) else None
    return PORT_DETECTOR[mode.port], t


def _slot_counts(modes, occ, resolves_time):
    counts: dict = {}
    for m, n in zip(modes, occ):
        if n:
            s = _slot(m, resolves_time)
            counts[s] = counts.get(s, 0) + n
    return counts


def _pattern_weight(counts, pattern_events, eta):
    events = set(pattern_events)
    if not events <= set(counts):
        return 0.0
    w = 1.0
    for slot, n in counts.items():
        miss = (1.0 - eta) ** n
        w *= (1.0 - miss) if slot in events else miss
    return w


def pattern_distribution(state: PureState, eta_det: float = 1.0, resolves_time: bool = True) -> dict[DetectionPattern, float]:
    """Probability of every click pattern (including no click) for ``state``."""
    check_probability("eta_det", eta_det)
    dist: dict[DetectionPattern, float] = {}
    for (_, occ), amp in state:
        counts = _slot_counts(state.modes, occ, resolves_time)
        slots = sorted(counts, key=lambda s: (s[0], s[1] or ""))
        p_label = abs(amp) ** 2
        for r in range(len(slots) + 1):
            for subset in itertools.combinations(slots, r):
                w = _pattern_weight(counts, subset, eta_det)
                if w:
                    pat = DetectionPattern(subset)
                    dist[pat] = dist.get(pat, 0.0) + p_label * w
    return dist


def condition_on_pattern(state: PureState, pattern: DetectionPattern, eta_det: float = 1.0,
                         resolves_time: bool = True, protocol: str = "") -> HeraldOutcome:
    """Condition a post-beamsplitter state on a click pattern.

    Distinct photon labels are orthogonal, so the heralded atomic state is the
    mixture ``sum_label w(label) v_label v_label^+``. The returned pure state is
    its principal eigenvector; ``purity`` reports Tr(rho^2)/Tr(rho)^2.
    """
    check_probability("eta_det", eta_det)
    dim = 2 ** len(state.atoms)
    rho = np.zeros((dim, dim), dtype=complex)
    best_vec, best_w = None, 0.0
    for occ, vec in atomic_vectors(state).items():
        w = _pattern_weight(_slot_counts(state.modes, occ, resolves_time), pattern.events, eta_det)
        if w == 0.0:
            continue
        rho += w * np.outer(vec, vec.conj())
        weight = w * float(np.vdot(vec, vec).real)
        if weight > best_w:
            best_vec, best_w = vec, weight
    prob = float(np.trace(rho).real)
    if prob <= 0.0:
        return HeraldOutcome(atomic_state(state.atoms, np.zeros(dim)), 0.0, pattern, protocol, 0.0)
    vals, vecs = np.linalg.eigh(rho / prob)
    principal = vecs[:, -1]
    overlap = np.vdot(principal, best_vec)
    if abs(overlap) > 0:
        principal = principal * (overlap / abs(overlap))
    principal = np.where(np.abs(principal) < 1e-15, 0.0, principal)
    purity = float(np.sum(vals ** 2))
    return HeraldOutcome(atomic_state(state.atoms, principal), prob, pattern, protocol, purity)


def _reduced_fidelity(state: PureState, pattern, eta_det, target: np.ndarray, resolves_time=True) -> float:
    dim = 2 ** len(state.atoms)
    rho = np.zeros((dim, dim), dtype=complex)
    for occ, vec in atomic_vectors(state).items():
        w = _pattern_weight(_slot_counts(state.modes, occ, resolves_time), pattern.events, eta_det)
        if w:
            rho += w * np.outer(vec, vec.conj())
    tr = np.trace(rho).real
    return float(np.real(np.vdot(target, rho @ target)) / tr) if tr > 0 else 0.0


# ---------------------------------------------------------------- type I


def type1_success(p_ap: float, eta_det: float) -> float:
    """P_I = 2 P_ap eta_det (either detector)."""
    return 2.0 * check_probability("p_ap", p_ap) * check_probability("eta_det", eta_det)


def type1_bell_state(phi: float, which: str) -> PureState:
    """(|ud> +/- e^{i phi}|du>)/sqrt2 with + for D1 and - for D2."""
    sign = {"D1": 1.0, "D2": -1.0}[which]
    vec = np.zeros(4, dtype=complex)
    basis = atomic_basis(("A", "B"))
    vec[basis.index((UP, DOWN))] = 1.0
    vec[basis.index((DOWN, UP))] = sign * cmath.exp(1j * phi)
    return atomic_state(("A", "B"), vec / math.sqrt(2.0))


def type1_herald(p_e: float, geom: PathGeometry = None, eta_det: float = 1.0, which: str = "D1",
                 exact: bool = False) -> HeraldOutcome:
    """Herald a two-atom Bell state from a single detected photon.

    ``p_e`` is the per-atom probability of a collected, transmitted photon
    (compose collection and transmission into it before calling).

    The default truncated treatment drops the two-photon term, as in the
    usual first-order algebra; its probability is ``p_e * eta_det`` per
    detector and ``infidelity`` is the p_e floor from an undetected second
    emission. With ``exact=True`` the full product state is propagated and the
    click statistics of threshold detectors are applied.
    """
    check_probability("p_e", p_e)
    check_probability("eta_det", eta_det)
    if which not in DETECTOR_PORT:
        raise ValueError(f"which must be D1 or D2, got {which!r}")
    if p_e > 0.2:
        warnings.warn(f"p_e={p_e} is outside the p_e << 1 regime", RuntimeWarning, stacklevel=2)
    geom = geom or PathGeometry()
    pattern = DetectionPattern(((which, None),))

    pair_a = make_number_pair(p_e, "A", "A")
    emitted = cmath.exp(1j * geom.phi)
    pair_a = pair_a.map_terms(lambda label, amp: amp * emitted if label[1][0] else amp)
    joint = tensor(pair_a, make_number_pair(p_e, "B", "B"))
    if not exact:
        joint = PureState(joint.atoms, joint.modes, {k: v for k, v in joint if sum(k[1]) <= 1})

    out = beamsplitter(joint)
    outcome = condition_on_pattern(out, pattern, 1.0 if not exact else eta_det, protocol="type1")
    if outcome.probability == 0.0:
        return outcome
    target = type1_bell_state(geom.phi, which)
    if exact:
        outcome.infidelity = 1.0 - _reduced_fidelity(out, pattern, eta_det, _vec(target))
    else:
        outcome.probability = p_e * eta_det
        outcome.infidelity = p_e
    return outcome


def _vec(state: PureState) -> np.ndarray:
    return atomic_vectors(state)[()]


def type1_recoil_fidelity(eta: float, nbar: float) -> float:
    """Lamb-Dicke limit fidelity 1 - 4 eta^2 (nbar + 1/2), clamped to [0, 1]."""
    check_nonnegative("eta", eta)
    check_nonnegative("nbar", nbar)
    if eta ** 2 * nbar > 0.1 * (1 + 1e-9):
        warnings.warn(f"eta^2 nbar = {eta ** 2 * nbar:.3g} is outside the Lamb-Dicke limit",
                      RuntimeWarning, stacklevel=2)
    return min(1.0, max(0.0, 1.0 - 4.0 * eta ** 2 * (nbar + 0.5)))


# ---------------------------------------------------------------- type II


def _infer_kind(state: PureState) -> QubitKind:
    channels = {m.channel for m in state.modes}
    for kind in (QubitKind.POLARIZATION, QubitKind.FREQUENCY, QubitKind.TIMEBIN):
        if channels == set(QUBIT_CHANNELS[kind]):
            return kind
    raise ValueError(f"modes {sorted(map(str, state.modes))} do not form a two-channel photonic qubit pair")


def _photonic_bell_states(kind: QubitKind, modes) -> dict[str, PureState]:
    up, down = QUBIT_CHANNELS[kind]

    def pp(ca, cb):
        return ket({}, {Mode("A", ca): 1, Mode("B", cb): 1}, modes=modes)

    s = 1.0 / math.sqrt(2.0)
    return {
        "phi+": (pp(up, up) + pp(down, down)).scale(s),
        "phi-": (pp(up, up) - pp(down, down)).scale(s),
        "psi+": (pp(up, down) + pp(down, up)).scale(s),
        "psi-": (pp(up, down) - pp(down, up)).scale(s),
    }


def bell_decompose(state: PureState) -> list[BellComponent]:
    """Split a two-pair state into photonic Bell states and atomic co-states.

    The co-states are unnormalized partial inner products, so
    ``sum(tensor(c.atomic, c.photonic))`` reconstructs ``state``.
    """
    kind = _infer_kind(state)
    if set(state.atoms) != {"A", "B"}:
        raise ValueError(f"expected atoms A and B, got {state.atoms}")
    for (_, occ), _amp in state:
        per_port = {"A": 0, "B": 0}
        for m, n in zip(state.modes, occ):
            per_port[m.port] += n
        if per_port != {"A": 1, "B": 1}:
            raise ValueError("state is not a product of two single-photon atom-photon pairs")
    bells = _photonic_bell_states(kind, state.modes)
    comps = []
    for name, bell in bells.items():
        dim = 2 ** len(state.atoms)
        co = np.zeros(dim, dtype=complex)
        basis = atomic_basis(state.atoms)
        index = {a: i for i, a in enumerate(basis)}
        bell_terms = {occ: amp for (_, occ), amp in bell}
        for (atoms, occ), amp in state:
            b = bell_terms.get(occ)
            if b is not None:
                co[index[atoms]] += b.conjugate() * amp
        photonic = PureState((), state.modes, {((), occ): amp for occ, amp in bell_terms.items()})
        comps.append(BellComponent(name, photonic, atomic_state(state.atoms, co)))
    return comps


def recompose(components: list[BellComponent], like: PureState) -> PureState:
    total = PureState(like.atoms, like.modes, {})
    for comp in components:
        total = total + reorder_modes(tensor(comp.atomic, comp.photonic), like.modes)
    return total


def path_offset_phase(geom: PathGeometry) -> complex:
    """exp(i delta_omega delta_x / c)."""
    return cmath.exp(1j * geom.delta_omega * geom.delta_x / SPEED_OF_LIGHT)


def type2_input(alpha_a, beta_a, alpha_b, beta_b, kind, geom: PathGeometry = None,
                common_phase: float = 0.0) -> PureState:
    """Joint two-pair state fed to the beamsplitter.

    The path offset puts ``path_offset_phase`` on atom A's P_down photon;
    ``common_phase`` multiplies both photons by the same phase factor.
    """
    kind = QubitKind(kind)
    pair_a = make_pair(kind, alpha_a, beta_a, "A", "A")
    pair_b = make_pair(kind, alpha_b, beta_b, "B", "B")
    if geom is not None:
        offset = path_offset_phase(geom)
        pair_a = pair_a.map_terms(lambda label, amp: amp * offset if label[0][0] == DOWN else amp)
    if common_phase:
        c = cmath.exp(1j * common_phase)
        pair_a = pair_a.scale(c)
        pair_b = pair_b.scale(c)
    return tensor(pair_a, pair_b)


def type2_herald(alpha_a, beta_a, alpha_b, beta_b, kind=QubitKind.FREQUENCY,
                 pattern: DetectionPattern = COINCIDENCE, geom: PathGeometry = None,
                 eta_det: float = 1.0, p_ap: float = 1.0, common_phase: float = 0.0) -> HeraldOutcome:
    """Two-photon herald and heralded gate for frequency or time-bin qubits.

    The returned probability is exact for threshold detectors with efficiency
    ``eta_det``, scaled by ``p_ap**2`` for pair generation and collection.
    For balanced inputs it equals ``p_B (p_ap eta_det)**2``.
    """
    kind = QubitKind(kind)
    if kind not in (QubitKind.FREQUENCY, QubitKind.TIMEBIN):
        raise ValueError(f"type II heralding is modeled for frequency and timebin qubits, not {kind.value}")
    if kind is QubitKind.FREQUENCY and pattern.timed:
        raise ValueError("frequency-qubit patterns cannot carry time-bin labels")
    if kind is QubitKind.TIMEBIN and not all(t is not None for _, t in pattern.events):
        raise ValueError("time-bin patterns need a time label on every event")
    if len(pattern.events) not in (1, 2):
        raise ValueError(f"a herald pattern has 1 or 2 events, got {len(pattern.events)}")
    check_probability("p_ap", p_ap)
    joint = type2_input(alpha_a, beta_a, alpha_b, beta_b, kind, geom, common_phase)
    out = beamsplitter(joint)
    outcome = condition_on_pattern(out, pattern, eta_det, resolves_time=(kind is QubitKind.TIMEBIN),
                                   protocol=f"type2-{kind.value}")
    outcome.probability *= p_ap ** 2
    return outcome


def type2_success(p_ap: float, eta_det: float, p_b: float) -> float:
    """P_II = p_B (P_ap eta_det)^2."""
    check_probability("p_ap", p_ap)
    check_probability("eta_det", eta_det)
    check_probability("p_b", p_b)
    return p_b * (p_ap * eta_det) ** 2


def heralded_gate_matrix() -> np.ndarray:
    """(1/2) Z_A (I - Z_A Z_B) in the |uu>, |ud>, |du>, |dd> basis."""
    z = np.diag([1.0, -1.0])
    za = np.kron(z, np.eye(2))
    zb = np.kron(np.eye(2), z)
    return 0.5 * za @ (np.eye(4) - za @ zb)
