import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from ionnet.hilbert import DOWN, UP, Mode, PureState, atomic_state, atomic_vector, fidelity, inner, ket, tensor
from ionnet.heralding import (COINCIDENCE, DEFAULT_P_B, HERALDED_GATE, DetectionPattern, Detector, PathGeometry,
                              beamsplitter, bell_decompose, pattern_distribution, path_offset_phase, recompose,
                              type1_bell_state, type1_herald, type1_recoil_fidelity, type1_success, type2_herald,
                              type2_input, type2_success)
from ionnet.photon_source import QubitKind, make_number_pair

from conftest import random_qubit

A, B = Mode("A"), Mode("B")
S2 = 1 / math.sqrt(2)
AB = ("A", "B")


# ------------------------------------------------------------ dense oracle

CUT = 3  # occupations 0..2 per mode


def _ladder():
    a = np.zeros((CUT, CUT))
    for n in range(1, CUT):
        a[n - 1, n] = math.sqrt(n)
    return a


def _oracle_unitary(sign):
    """exp(sign * pi/4 (a^+ b - a b^+)) on two truncated modes; exact for n_a + n_b <= 2."""
    a = np.kron(_ladder(), np.eye(CUT))
    b = np.kron(np.eye(CUT), _ladder())
    gen = a.T @ b - a @ b.T
    return expm(sign * math.pi / 4 * gen)


def _idx(na, nb):
    return na * CUT + nb


def _pinned_unitary():
    # choose the rotation sense that sends |0,1> to (|0,1> + |1,0>)/sqrt2
    for sign in (1, -1):
        u = _oracle_unitary(sign)
        col = u[:, _idx(0, 1)]
        if abs(col[_idx(1, 0)] - S2) < 1e-12 and abs(col[_idx(0, 1)] - S2) < 1e-12:
            return u
    raise AssertionError("no rotation sense reproduces the single-photon output")


U_BS = _pinned_unitary()


def test_single_photon_output():
    out = beamsplitter(ket({}, {A: 0, B: 1}))
    assert out.amplitude({}, {A: 0, B: 1}) == pytest.approx(S2, abs=1e-12)
    assert out.amplitude({}, {A: 1, B: 0}) == pytest.approx(S2, abs=1e-12)
    assert len(out) == 2


def test_two_photon_output_and_hom():
    out = beamsplitter(ket({}, {A: 1, B: 1}))
    assert abs(out.amplitude({}, {A: 2, B: 0}) - S2) <= 1e-12
    assert abs(out.amplitude({}, {A: 0, B: 2}) + S2) <= 1e-12
    assert out.amplitude({}, {A: 1, B: 1}) == 0  # exactly, not approximately


def test_vacuum_is_invariant():
    out = beamsplitter(ket({"A": UP}, {A: 0, B: 0}))
    assert out.terms == ket({"A": UP}, {A: 0, B: 0}).terms


def test_occupation_above_two_rejected():
    with pytest.raises(ValueError, match="exceeds"):
        beamsplitter(ket({}, {A: 3, B: 0}))


def test_missing_port_mode_added():
    out = beamsplitter(ket({}, {Mode("A", "red"): 1}))
    assert Mode("B", "red") in out.modes
    assert out.norm() == pytest.approx(1.0)


def _oracle_apply(occ_amps):
    """Two-channel (red, blue) oracle: kron of per-channel unitaries."""
    u = np.kron(U_BS, U_BS)
    vec = np.zeros(CUT ** 4, dtype=complex)
    for (ra, rb, ba, bb), amp in occ_amps.items():
        vec[_idx(ra, rb) * CUT ** 2 + _idx(ba, bb)] += amp
    return u @ vec


@given(st.integers(0, 2 ** 32 - 1))
def test_beamsplitter_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    modes = (Mode("A", "red"), Mode("B", "red"), Mode("A", "blue"), Mode("B", "blue"))
    allowed = [o for o in itertools.product(range(3), repeat=4) if o[0] + o[1] <= 2 and o[2] + o[3] <= 2]
    picks = rng.choice(len(allowed), size=5, replace=False)
    occ_amps = {allowed[i]: complex(*rng.normal(size=2)) for i in picks}
    state = PureState((), modes, {((), o): v for o, v in occ_amps.items()})
    out = beamsplitter(state)
    expect = _oracle_apply(occ_amps)
    got = np.zeros_like(expect)
    order = [out.modes.index(m) for m in modes]
    for (_, occ), amp in out:
        ra, rb, ba, bb = (occ[i] for i in order)
        got[_idx(ra, rb) * CUT ** 2 + _idx(ba, bb)] += amp
    assert np.max(np.abs(got - expect)) < 1e-12
    assert out.norm() == pytest.approx(state.norm(), rel=1e-12)


# ------------------------------------------------------------- detection


def test_detection_pattern_parse_and_str():
    p = DetectionPattern.parse("D2@t2, D1@t1")
    assert p.events == (("D1", "t1"), ("D2", "t2"))
    assert str(p) == "D1@t1,D2@t2"
    assert p.timed and not COINCIDENCE.timed
    with pytest.raises(ValueError):
        DetectionPattern.parse("D3")
    with pytest.raises(ValueError):
        DetectionPattern.parse("D1@t3")


def test_detector_validation():
    assert Detector("D1", 0.5).efficiency == 0.5
    with pytest.raises(ValueError, match="frequency"):
        Detector("D1", resolves_frequency=True)
    with pytest.raises(ValueError):
        Detector("D1", 1.5)


# ---------------------------------------------------------------- type I


def test_type1_d1_state_at_zero_phase():
    out = type1_herald(0.05, PathGeometry(), which="D1")
    ref = (ket({"A": UP, "B": DOWN}) + ket({"A": DOWN, "B": UP})).scale(S2)
    assert fidelity(out.atomic_state, ref) == pytest.approx(1.0, abs=1e-12)
    assert out.infidelity == 0.05
    assert out.probability == pytest.approx(0.05)


def test_type1_zero_emission():
    out = type1_herald(0.0)
    assert out.probability == 0.0
    assert len(out.atomic_state) == 0


def test_type1_detectors_give_orthogonal_states():
    d1 = type1_herald(0.01, which="D1").atomic_state
    d2 = type1_herald(0.01, which="D2").atomic_state
    assert fidelity(d1, d2) < 1e-24


@pytest.mark.parametrize("phi", [0.3, 1.1, -2.0])
def test_type1_phase_sign(phi):
    geom = PathGeometry(delta_k=phi, delta_x=1.0)
    for which in ("D1", "D2"):
        got = type1_herald(0.01, geom, which=which).atomic_state
        assert fidelity(got, type1_bell_state(phi, which)) == pytest.approx(1.0, abs=1e-12)
        v_plus = atomic_vector(got)
        v_minus = atomic_vector(type1_herald(0.01, PathGeometry(-phi, 1.0), which=which).atomic_state)
        # opposite path phases give complex-conjugate relative phases
        r_plus = v_plus[2] / v_plus[1]
        r_minus = v_minus[2] / v_minus[1]
        assert abs(r_plus - r_minus.conjugate()) < 1e-12


def test_type1_high_p_e_warns():
    with pytest.warns(RuntimeWarning, match="p_e"):
        type1_herald(0.3)


@pytest.mark.parametrize("p_e,eta", [(0.01, 1.0), (0.05, 0.3), (0.2, 0.05)])
def test_type1_exact_infidelity(p_e, eta):
    # Bell part weight p(1-p) eta; double emission bunches to one port with
    # weight p^2/2 and clicks with probability 1-(1-eta)^2
    bell = p_e * (1 - p_e) * eta
    double = p_e ** 2 / 2 * (1 - (1 - eta) ** 2)
    out = type1_herald(p_e, eta_det=eta, exact=True)
    assert out.infidelity == pytest.approx(double / (bell + double), rel=1e-10)
    assert out.probability == pytest.approx(bell + double, rel=1e-10)


def test_type1_exact_completeness():
    joint = tensor(make_number_pair(0.1, "A", "A"), make_number_pair(0.1, "B", "B"))
    dist = pattern_distribution(beamsplitter(joint), eta_det=0.4)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_type1_success():
    assert type1_success(0.002, 0.2) == pytest.approx(0.0008)


@pytest.mark.parametrize("eta,nbar,expect", [(0.0, 7.0, 1.0), (0.1, 2.0, 0.9), (0.1, 10.0, 0.58)])
def test_recoil_fidelity(eta, nbar, expect):
    assert type1_recoil_fidelity(eta, nbar) == pytest.approx(expect, abs=1e-12)


def test_recoil_fidelity_guards():
    with pytest.raises(ValueError):
        type1_recoil_fidelity(-0.1, 1)
    with pytest.warns(RuntimeWarning, match="Lamb-Dicke"):
        assert type1_recoil_fidelity(0.5, 1.0) == 0.0


# --------------------------------------------------------------- type II


def _gate_target(qa, qb, offset=1.0):
    v = HERALDED_GATE @ np.kron([qa[0], qa[1] * offset], qb)
    return atomic_state(AB, v / np.linalg.norm(v))


def test_balanced_frequency_gives_singlet():
    out = type2_herald(S2, S2, S2, S2, "frequency")
    singlet = (ket({"A": UP, "B": DOWN}) - ket({"A": DOWN, "B": UP})).scale(S2)
    assert fidelity(out.atomic_state, singlet) >= 1 - 1e-10
    assert out.probability == pytest.approx(DEFAULT_P_B[QubitKind.FREQUENCY], abs=1e-12)


@pytest.mark.parametrize("qa,qb", [((1, 0), (1, 0)), ((0, 1), (0, 1))])
def test_equal_atoms_give_null_result(qa, qb):
    assert type2_herald(*qa, *qb, "frequency").probability == 0.0


def test_gate_matrix_on_random_inputs(rng):
    for _ in range(20):
        qa, qb = random_qubit(rng), random_qubit(rng)
        out = type2_herald(*qa, *qb, "frequency")
        assert fidelity(out.atomic_state, _gate_target(qa, qb)) >= 1 - 1e-10
        # coincidence probability is the weight of the antisymmetric component
        ab, ba = qa[0] * qb[1], qa[1] * qb[0]
        assert out.probability == pytest.approx((abs(ab) ** 2 + abs(ba) ** 2) / 2, abs=1e-12)


def test_path_offset_phase():
    assert path_offset_phase(PathGeometry()) == 1
    c = 299_792_458.0
    assert path_offset_phase(PathGeometry(delta_x=1.0, delta_omega=math.pi * c)) == pytest.approx(-1, abs=1e-12)
    assert abs(path_offset_phase(PathGeometry(delta_x=0.37, delta_omega=2e9))) == pytest.approx(1.0)


def test_path_offset_enters_heralded_state(rng):
    geom = PathGeometry(delta_x=0.1, delta_omega=7e9)
    qa, qb = random_qubit(rng), random_qubit(rng)
    out = type2_herald(*qa, *qb, "frequency", geom=geom)
    assert fidelity(out.atomic_state, _gate_target(qa, qb, path_offset_phase(geom))) >= 1 - 1e-10


@given(st.floats(-10, 10), st.integers(0, 2 ** 32 - 1))
def test_common_phase_immunity(theta, seed):
    rng = np.random.default_rng(seed)
    qa, qb = random_qubit(rng), random_qubit(rng)
    ref = type2_herald(*qa, *qb, "frequency")
    if ref.probability < 1e-9:
        return
    got = type2_herald(*qa, *qb, "frequency", common_phase=theta)
    assert fidelity(got.atomic_state, ref.atomic_state) == pytest.approx(1.0, abs=1e-10)


def _timebin_costate(qa, qb, sign):
    # effective amplitudes after the pi pulse are (beta, -alpha)
    ea, eb = (qa[1], -qa[0]), (qb[1], -qb[0])
    v = np.array([0, ea[0] * eb[1], sign * ea[1] * eb[0], 0])
    return atomic_state(AB, v / np.linalg.norm(v))


def test_timebin_patterns(rng):
    for _ in range(5):
        qa, qb = random_qubit(rng), random_qubit(rng)
        diff = type2_herald(*qa, *qb, "timebin", DetectionPattern.parse("D1@t1,D2@t2"))
        same = type2_herald(*qa, *qb, "timebin", DetectionPattern.parse("D1@t1,D1@t2"))
        assert fidelity(diff.atomic_state, _timebin_costate(qa, qb, -1)) >= 1 - 1e-10
        assert fidelity(same.atomic_state, _timebin_costate(qa, qb, +1)) >= 1 - 1e-10


def test_timebin_balanced_success_is_half():
    total = sum(
        type2_herald(S2, S2, S2, S2, "timebin", DetectionPattern.parse(p)).probability
        for p in ("D1@t1,D2@t2", "D2@t1,D1@t2", "D1@t1,D1@t2", "D2@t1,D2@t2")
    )
    assert total == pytest.approx(DEFAULT_P_B[QubitKind.TIMEBIN], abs=1e-12)


def test_type2_pattern_kind_mismatch():
    with pytest.raises(ValueError, match="time-bin labels"):
        type2_herald(S2, S2, S2, S2, "frequency", DetectionPattern.parse("D1@t1,D2@t2"))
    with pytest.raises(ValueError, match="time label"):
        type2_herald(S2, S2, S2, S2, "timebin", COINCIDENCE)
    with pytest.raises(ValueError, match="frequency and timebin"):
        type2_herald(S2, S2, S2, S2, "polarization")


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["frequency", "timebin"]), st.floats(0.05, 1.0))
def test_herald_probabilities_complete(seed, kind, eta):
    rng = np.random.default_rng(seed)
    qa, qb = random_qubit(rng), random_qubit(rng)
    out = beamsplitter(type2_input(*qa, *qb, kind))
    dist = pattern_distribution(out, eta, resolves_time=(kind == "timebin"))
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_type2_success():
    assert type2_success(1, 1, 0.25) == 0.25
    assert type2_success(0, 0.5, 0.25) == 0.0
    assert DEFAULT_P_B[QubitKind.FREQUENCY] == 0.25
    assert DEFAULT_P_B[QubitKind.TIMEBIN] == 0.5


def test_type2_probability_scales_with_efficiencies():
    out = type2_herald(S2, S2, S2, S2, "frequency", eta_det=0.5, p_ap=0.1)
    assert out.probability == pytest.approx(type2_success(0.1, 0.5, 0.25), rel=1e-12)


# ---------------------------------------------------------- Bell algebra


def test_bell_decompose_balanced():
    state = type2_input(S2, S2, S2, S2, "frequency")
    comps = {c.name: c for c in bell_decompose(state)}
    co = atomic_vector(comps["psi-"].atomic)
    expect = np.array([0, 1, -1, 0]) / (2 * math.sqrt(2))
    assert np.max(np.abs(co - expect)) < 1e-12


def test_bell_decompose_no_cross_terms():
    comps = {c.name: c for c in bell_decompose(type2_input(1, 0, 1, 0, "frequency"))}
    assert comps["psi+"].atomic.norm() == 0
    assert comps["psi-"].atomic.norm() == 0


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["frequency", "timebin", "polarization"]))
def test_bell_recomposition(seed, kind):
    rng = np.random.default_rng(seed)
    qa, qb = random_qubit(rng), random_qubit(rng)
    from ionnet.photon_source import make_pair
    state = tensor(make_pair(kind, *qa, "A", "A"), make_pair(kind, *qb, "B", "B"))
    back = recompose(bell_decompose(state), state)
    diff = back - state
    assert diff.norm() < 1e-12


def test_bell_decompose_rejects_non_pair_states():
    with pytest.raises(ValueError):
        bell_decompose(ket({"A": UP, "B": UP}, {A: 1, B: 1}))
    joint = tensor(make_number_pair(0.1, "A", "A"), make_number_pair(0.1, "B", "B"))
    with pytest.raises(ValueError):
        bell_decompose(joint)


def test_outcome_record():
    rec = type2_herald(S2, S2, S2, S2, "frequency").to_record()
    assert list(rec) == ["protocol", "pattern", "probability", "atomic_state"]
    assert rec["pattern"] == [["D1", None], ["D2", None]]
    labels = [r[0] for r in rec["atomic_state"]]
    assert labels == ["|A=u,B=d;vac>", "|A=d,B=u;vac>"]
