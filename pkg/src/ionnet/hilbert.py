"""Sparse pure states over hybrid atom (x) photon-mode bases.

A basis label is a pair ``(atoms, occupations)``: ``atoms`` is a tuple of
``UP``/``DOWN`` values, one per named atom, and ``occupations`` is a tuple of
photon counts, one per :class:`Mode`. Labels that are absent from a state
carry amplitude zero.

>>> s = ket({"A": UP}, {Mode("A"): 1})
>>> s.amplitude({"A": UP}, {Mode("A"): 1})
(1+0j)
"""
from __future__ import annotations

import cmath
import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

import numpy as np

UP = 0
DOWN = 1
_ATOM_SYMBOL = {UP: "u", DOWN: "d"}

PORTS = ("A", "B")
CHANNELS = ("none", "H", "V", "red", "blue", "t1", "t2")

ATOL = 1e-12


@dataclass(frozen=True, order=True)
class Mode:
    """A photon mode: a spatial port plus an internal channel label."""

    port: str
    channel: str = "none"

    def __post_init__(self):
        if self.port not in PORTS:
            raise ValueError(f"port must be one of {PORTS}, got {self.port!r}")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")

    def __str__(self):
        return self.port if self.channel == "none" else f"{self.port}.{self.channel}"


Label = tuple[tuple[int, ...], tuple[int, ...]]


class PureState:
    """Immutable sparse superposition of basis labels.

    Parameters
    ----------
    atoms : sequence of str
        Names of the atomic qubits, in label order.
    modes : sequence of Mode
        Photon modes, in label order.
    terms : mapping
        ``(atom_values, occupations) -> complex amplitude``.
    """

    __slots__ = ("atoms", "modes", "_terms")

    def __init__(self, atoms: Iterable[str], modes: Iterable[Mode], terms: Mapping[Label, complex] = None):
        atoms = tuple(atoms)
        modes = tuple(modes)
        if len(set(atoms)) != len(atoms):
            raise ValueError(f"duplicate atom names: {atoms}")
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate modes: {modes}")
        clean = {}
        for (a, n), amp in (terms or {}).items():
            a = tuple(int(v) for v in a)
            n = tuple(int(v) for v in n)
            if len(a) != len(atoms) or len(n) != len(modes):
                raise ValueError(f"label {(a, n)} does not match basis ({len(atoms)} atoms, {len(modes)} modes)")
            if any(v not in (UP, DOWN) for v in a):
                raise ValueError(f"atom values must be UP or DOWN, got {a}")
            if any(v < 0 for v in n):
                raise ValueError(f"occupations must be >= 0, got {n}")
            amp = complex(amp)
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"non-finite amplitude {amp} for label {(a, n)}")
            if amp != 0:
                clean[(a, n)] = clean.get((a, n), 0j) + amp
        self.atoms = atoms
        self.modes = modes
        self._terms = clean

    @property
    def terms(self) -> dict[Label, complex]:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __repr__(self):
        if not self._terms:
            return "PureState(0)"
        parts = [f"({amp:.4g}){format_label(self, label)}" for label, amp in self._terms.items()]
        return "PureState(" + " + ".join(parts) + ")"

    def same_basis(self, other: PureState) -> bool:
        return self.atoms == other.atoms and self.modes == other.modes

    def amplitude(self, atoms: Mapping[str, int] = None, photons: Mapping[Mode, int] = None) -> complex:
        return self._terms.get(make_label(self.atoms, self.modes, atoms, photons), 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._terms.values()))

    def normalize(self) -> PureState:
        nrm = self.norm()
        if nrm == 0.0:
            return self
        return self.scale(1.0 / nrm)

    def scale(self, factor: complex) -> PureState:
        return PureState(self.atoms, self.modes, {k: factor * v for k, v in self._terms.items()})

    def __add__(self, other: PureState) -> PureState:
        _require_same_basis(self, other)
        terms = dict(self._terms)
        for k, v in other._terms.items():
            terms[k] = terms.get(k, 0j) + v
        return PureState(self.atoms, self.modes, terms)

    def __sub__(self, other: PureState) -> PureState:
        return self + other.scale(-1.0)

    def map_terms(self, func: Callable[[Label, complex], complex]) -> PureState:
        """Return a state with each amplitude replaced by ``func(label, amp)``."""
        return PureState(self.atoms, self.modes, {k: func(k, v) for k, v in self._terms.items()})

    def occupations(self, label: Label) -> dict[Mode, int]:
        return dict(zip(self.modes, label[1]))

    def to_records(self) -> list[tuple[str, float, float]]:
        """Serialize as ``[(label, re, im), ...]`` in sorted label order."""
        return [
            (format_label(self, label), amp.real, amp.imag)
            for label, amp in sorted(self._terms.items())
        ]


def _require_same_basis(a: PureState, b: PureState):
    if not a.same_basis(b):
        raise ValueError(
            f"basis mismatch: atoms {a.atoms} vs {b.atoms}, modes {a.modes} vs {b.modes}"
        )


def make_label(atom_names, modes, atoms: Mapping[str, int] = None, photons: Mapping[Mode, int] = None) -> Label:
    atoms = dict(atoms or {})
    photons = dict(photons or {})
    unknown = set(atoms) - set(atom_names)
    if unknown:
        raise ValueError(f"unknown atoms {sorted(unknown)}")
    unknown = set(photons) - set(modes)
    if unknown:
        raise ValueError(f"unknown modes {sorted(map(str, unknown))}")
    a = tuple(atoms.get(name, UP) for name in atom_names)
    n = tuple(photons.get(m, 0) for m in modes)
    return a, n


def format_label(state: PureState, label: Label) -> str:
    a, n = label
    atoms = ",".join(f"{name}={_ATOM_SYMBOL[v]}" for name, v in zip(state.atoms, a))
    photons = ",".join(f"{m}={k}" for m, k in zip(state.modes, n) if k)
    return f"|{atoms};{photons or 'vac'}>"


def ket(atoms: Mapping[str, int] = None, photons: Mapping[Mode, int] = None, modes: Iterable[Mode] = None) -> PureState:
    """Single basis ket with unit amplitude.

    ``modes`` fixes the mode list; by default it is the sorted keys of ``photons``.
    """
    atoms = dict(atoms or {})
    photons = dict(photons or {})
    modes = tuple(modes) if modes is not None else tuple(sorted(photons))
    names = tuple(atoms)
    return PureState(names, modes, {make_label(names, modes, atoms, photons): 1.0})


def empty_like(state: PureState) -> PureState:
    return PureState(state.atoms, state.modes, {})


def tensor(a: PureState, b: PureState) -> PureState:
    """Tensor product; atom names and modes of the factors must be disjoint."""
    if set(a.atoms) & set(b.atoms):
        raise ValueError(f"overlapping atoms: {sorted(set(a.atoms) & set(b.atoms))}")
    if set(a.modes) & set(b.modes):
        raise ValueError(f"overlapping modes: {sorted(map(str, set(a.modes) & set(b.modes)))}")
    terms = {}
    for (aa, an), x in a._terms.items():
        for (ba, bn), y in b._terms.items():
            terms[(aa + ba, an + bn)] = x * y
    return PureState(a.atoms + b.atoms, a.modes + b.modes, terms)


def project(state: PureState, predicate: Callable[[dict[Mode, int]], bool]) -> tuple[PureState, float]:
    """Keep the labels whose photon occupations satisfy ``predicate``.

    Returns the renormalized post-measurement state and the probability of the
    outcome. A zero-probability outcome yields an empty state, not an error.
    """
    kept = {
        label: amp
        for label, amp in state._terms.items()
        if predicate(dict(zip(state.modes, label[1])))
    }
    prob = sum(abs(v) ** 2 for v in kept.values())
    if prob == 0.0:
        return empty_like(state), 0.0
    return PureState(state.atoms, state.modes, kept).scale(1.0 / math.sqrt(prob)), prob


def inner(a: PureState, b: PureState) -> complex:
    """<a|b>."""
    _require_same_basis(a, b)
    small, large = (a._terms, b._terms) if len(a) <= len(b) else (b._terms, a._terms)
    total = 0j
    for k in small:
        if k in large:
            total += a._terms[k].conjugate() * b._terms[k]
    return total


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 for normalized states; blind to global phase."""
    return min(1.0, abs(inner(a, b)) ** 2)


def reorder_modes(state: PureState, modes: Iterable[Mode]) -> PureState:
    """Express ``state`` over a permuted (or extended) mode list."""
    modes = tuple(modes)
    missing = set(state.modes) - set(modes)
    if missing:
        raise ValueError(f"target mode list drops {sorted(map(str, missing))}")
    index = [state.modes.index(m) if m in state.modes else None for m in modes]
    terms = {}
    for (a, n), amp in state._terms.items():
        terms[(a, tuple(n[i] if i is not None else 0 for i in index))] = amp
    return PureState(state.atoms, modes, terms)


def atomic_basis(atoms: tuple[str, ...]) -> list[tuple[int, ...]]:
    """All atom-value tuples in lexicographic order (UP before DOWN)."""
    out = [()]
    for _ in atoms:
        out = [prev + (v,) for prev in out for v in (UP, DOWN)]
    return out


def atomic_vectors(state: PureState) -> dict[tuple[int, ...], np.ndarray]:
    """Group a joint state by photon occupation.

    Returns ``{occupations: atomic amplitude vector}`` in the order given by
    :func:`atomic_basis`.
    """
    basis = atomic_basis(state.atoms)
    index = {a: i for i, a in enumerate(basis)}
    groups: dict[tuple[int, ...], np.ndarray] = {}
    for (a, n), amp in state._terms.items():
        vec = groups.setdefault(n, np.zeros(len(basis), dtype=complex))
        vec[index[a]] += amp
    return groups


def atomic_state(atoms: tuple[str, ...], vector: np.ndarray) -> PureState:
    """Build a photon-free state from an amplitude vector over :func:`atomic_basis`."""
    basis = atomic_basis(atoms)
    vector = np.asarray(vector, dtype=complex)
    if vector.shape != (len(basis),):
        raise ValueError(f"expected vector of length {len(basis)}, got shape {vector.shape}")
    return PureState(atoms, (), {(a, ()): v for a, v in zip(basis, vector) if abs(v) > 0})


def atomic_vector(state: PureState) -> np.ndarray:
    """Amplitude vector of a photon-free state over :func:`atomic_basis`."""
    if state.modes:
        groups = atomic_vectors(state)
        if len(groups) > 1:
            raise ValueError("state still carries photon degrees of freedom")
        return next(iter(groups.values()), np.zeros(2 ** len(state.atoms), dtype=complex))
    return atomic_vectors(state).get((), np.zeros(2 ** len(state.atoms), dtype=complex))


def drop_photons(state: PureState) -> PureState:
    """Discard the photon register of a state whose photons are in one label."""
    return atomic_state(state.atoms, atomic_vector(state))


def phase(theta: float) -> complex:
    return cmath.exp(1j * theta)
