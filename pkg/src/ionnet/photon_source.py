"""Entangled atom-photon pair states and Yb-171 level presets."""
from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .hilbert import DOWN, UP, Mode, PureState, make_label
from .validation import check_probability

NORM_TOL = 1e-9
DEFAULT_RESOLVE_THRESHOLD = 0.01


class QubitKind(str, enum.Enum):
    NUMBER = "number"
    POLARIZATION = "polarization"
    FREQUENCY = "frequency"
    TIMEBIN = "timebin"


# (channel carrying P_up, channel carrying P_down)
QUBIT_CHANNELS = {
    QubitKind.NUMBER: ("none",),
    QubitKind.POLARIZATION: ("H", "V"),
    QubitKind.FREQUENCY: ("red", "blue"),
    QubitKind.TIMEBIN: ("t2", "t1"),
}


def photon_modes(kind: QubitKind, port: str) -> tuple[Mode, ...]:
    kind = QubitKind(kind)
    return tuple(Mode(port, ch) for ch in sorted(QUBIT_CHANNELS[kind], key=_channel_order))


def _channel_order(ch):
    return ("none", "H", "V", "red", "blue", "t1", "t2").index(ch)


def _pair(atom, port, kind, up_amp, down_amp):
    kind = QubitKind(kind)
    modes = photon_modes(kind, port)
    up_ch, down_ch = QUBIT_CHANNELS[kind]
    terms = {
        make_label((atom,), modes, {atom: UP}, {Mode(port, up_ch): 1}): up_amp,
        make_label((atom,), modes, {atom: DOWN}, {Mode(port, down_ch): 1}): down_amp,
    }
    return PureState((atom,), modes, terms)


def _check_normalized(alpha, beta):
    total = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"|alpha|^2 + |beta|^2 must equal 1, got {total:.12g}")


def make_number_pair(p_e: float, atom: str = "A", port: str = None) -> PureState:
    """sqrt(1-p_e)|up>|0> + sqrt(p_e)|down>|1>."""
    check_probability("p_e", p_e)
    port = port or atom
    mode = Mode(port)
    terms = {
        make_label((atom,), (mode,), {atom: UP}, {}): math.sqrt(1.0 - p_e),
        make_label((atom,), (mode,), {atom: DOWN}, {mode: 1}): math.sqrt(p_e),
    }
    return PureState((atom,), (mode,), terms)


def make_polarization_pair(p_up: float, p_down: float, atom: str = "A", port: str = None) -> PureState:
    """sqrt(p_up)|up>|1_H 0_V> + sqrt(p_down)|down>|0_H 1_V>."""
    check_probability("p_up", p_up)
    check_probability("p_down", p_down)
    if abs(p_up + p_down - 1.0) > NORM_TOL:
        raise ValueError(f"p_up + p_down must equal 1, got {p_up + p_down:.12g}")
    return _pair(atom, port or atom, QubitKind.POLARIZATION, math.sqrt(p_up), math.sqrt(p_down))


def make_frequency_pair(alpha: complex, beta: complex, atom: str = "A", port: str = None) -> PureState:
    """alpha|up>|1_r 0_b> + beta|down>|0_r 1_b>."""
    _check_normalized(alpha, beta)
    return _pair(atom, port or atom, QubitKind.FREQUENCY, complex(alpha), complex(beta))


def make_timebin_pair(alpha: complex, beta: complex, atom: str = "A", port: str = None) -> PureState:
    """beta|up>|0_t1 1_t2> - alpha|down>|1_t1 0_t2>.

    The pi pulse between the two excitations swaps the roles of alpha and
    beta and introduces the minus sign.
    """
    _check_normalized(alpha, beta)
    return _pair(atom, port or atom, QubitKind.TIMEBIN, complex(beta), -complex(alpha))


def make_pair(kind: QubitKind, alpha: complex, beta: complex, atom: str = "A", port: str = None) -> PureState:
    """Dispatch on qubit kind with (alpha, beta) as the atomic input amplitudes.

    For polarization pairs the amplitudes are taken as ``sqrt(p_up)``,
    ``sqrt(p_down)`` with their phases kept.
    """
    kind = QubitKind(kind)
    if kind is QubitKind.FREQUENCY:
        return make_frequency_pair(alpha, beta, atom, port)
    if kind is QubitKind.TIMEBIN:
        return make_timebin_pair(alpha, beta, atom, port)
    if kind is QubitKind.POLARIZATION:
        _check_normalized(alpha, beta)
        return _pair(atom, port or atom, kind, complex(alpha), complex(beta))
    raise ValueError("number qubits are built from p_e with make_number_pair")


@dataclass(frozen=True)
class ResolvabilityCheck:
    """Separation of the two photonic components versus the transition linewidth.

    ``delta`` is an angular-frequency splitting for frequency qubits and a
    time separation for time-bin qubits.
    """

    delta: float
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


def resolvable(check: ResolvabilityCheck, kind: QubitKind) -> float:
    """Overlap metric between the two photonic components; small means resolved.

    Frequency qubits return Gamma/|delta_omega|; time-bin qubits return
    exp(-Gamma |t2 - t1|). Compare with :data:`DEFAULT_RESOLVE_THRESHOLD`.
    """
    kind = QubitKind(kind)
    if kind is QubitKind.FREQUENCY:
        if check.delta == 0:
            return math.inf
        return check.gamma / abs(check.delta)
    if kind is QubitKind.TIMEBIN:
        return math.exp(-check.gamma * abs(check.delta))
    raise ValueError(f"no resolvability notion for {kind.value} qubits")


def is_resolved(check: ResolvabilityCheck, kind: QubitKind, threshold: float = DEFAULT_RESOLVE_THRESHOLD) -> bool:
    return resolvable(check, kind) <= threshold


@dataclass(frozen=True)
class LevelPreset:
    name: str
    wavelength: float  # metres
    kind: QubitKind
    branch_divisor: float = 1.0
    p_e: float | None = None
    notes: str = ""

    def __post_init__(self):
        if self.branch_divisor < 1:
            raise ValueError(f"branch_divisor must be >= 1, got {self.branch_divisor}")
        if self.p_e is not None and not 0 < self.p_e <= 1:
            raise ValueError(f"p_e must lie in (0, 1], got {self.p_e}")

    @property
    def wavelength_nm(self) -> float:
        return self.wavelength * 1e9

    @property
    def effective_p_e(self) -> float:
        """p_e reduced by the branching penalty."""
        if self.p_e is None:
            raise ValueError(f"preset {self.name!r} has no p_e; supply one with with_p_e()")
        return self.p_e / self.branch_divisor

    def with_p_e(self, p_e: float) -> LevelPreset:
        return replace(self, p_e=p_e)


# 55:1 and 475:1 branching ratios leave 1/56 and 1/476 of decays on the IR line
_BRANCH_935 = 56.0
_BRANCH_1300 = 476.0

PRESETS = {
    p.name: p
    for p in (
        LevelPreset("uv_number", 370e-9, QubitKind.NUMBER, 1.0,
                    notes="S1/2|0,0> -> P1/2|1,-1> -> S1/2|1,-1>"),
        LevelPreset("uv_polarization", 370e-9, QubitKind.POLARIZATION, 1.0,
                    notes="P1/2|0,0> decays to S1/2|1,+1> and |1,-1>"),
        LevelPreset("uv_frequency", 370e-9, QubitKind.FREQUENCY, 1.0,
                    notes="S1/2|1,0> <-> P1/2|0,0>, S1/2|0,0> <-> P1/2|1,0>"),
        LevelPreset("uv_timebin", 370e-9, QubitKind.TIMEBIN, 1.0,
                    notes="S1/2|1,0> <-> P1/2|0,0>, S1/2|0,0> idle"),
        LevelPreset("ir935_polarization", 935e-9, QubitKind.POLARIZATION, _BRANCH_935,
                    notes="3[3/2]1/2 -> D3/2, 297 nm pi excitation"),
        LevelPreset("ir935_frequency", 935e-9, QubitKind.FREQUENCY, _BRANCH_935,
                    notes="3[3/2]1/2 -> D3/2, pi-polarized photons only"),
        LevelPreset("ir1300_frequency", 1.3e-6, QubitKind.FREQUENCY, _BRANCH_1300,
                    notes="P3/2 -> D3/2, 329 nm excitation"),
    )
}


def preset(name: str, p_e: float = None, table: dict[str, LevelPreset] = None) -> LevelPreset:
    table = PRESETS if table is None else table
    try:
        found = table[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; valid names: {', '.join(sorted(table))}") from None
    return found if p_e is None else found.with_p_e(p_e)


def load_presets(path) -> dict[str, LevelPreset]:
    """Read presets from an INI file, one section per preset.

    Keys per section: ``wavelength_nm``, ``kind``, ``branch_divisor`` and the
    optional ``p_e`` and ``notes``. Sections named like a built-in preset
    inherit its unspecified fields.
    """
    parser = configparser.ConfigParser()
    with open(Path(path), encoding="utf-8") as fh:
        parser.read_file(fh)
    table = dict(PRESETS)
    for name in parser.sections():
        sec = parser[name]
        base = PRESETS.get(name)
        if base is None and ("wavelength_nm" not in sec or "kind" not in sec):
            raise ValueError(f"preset {name!r}: wavelength_nm and kind are required")
        p_e = sec.get("p_e")
        table[name] = LevelPreset(
            name=name,
            wavelength=float(sec["wavelength_nm"]) * 1e-9 if "wavelength_nm" in sec else base.wavelength,
            kind=QubitKind(sec.get("kind", base.kind.value if base else None)),
            branch_divisor=sec.getfloat("branch_divisor", base.branch_divisor if base else 1.0),
            p_e=float(p_e) if p_e is not None else (base.p_e if base else None),
            notes=sec.get("notes", base.notes if base else ""),
        )
    return table
