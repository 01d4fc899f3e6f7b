import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ionnet.network import (SECONDS_PER_YEAR, NetworkParams, atom_photon_success, bell_separation, cluster_time,
                            deterministic_gate_time, human_duration, network_report, repeater_time,
                            seconds_to_years, years_to_seconds)


def test_atom_photon_success():
    assert atom_photon_success(1, 1, 1) == 1
    assert atom_photon_success(0.5, 0.02, 0.2) == pytest.approx(0.002)
    assert atom_photon_success(0.5, 0.0, 0.2) == 0
    with pytest.raises(ValueError, match="p_c"):
        atom_photon_success(0.5, 1.2, 0.2)


def test_gate_time():
    assert deterministic_gate_time(1e-6, 0.1) == pytest.approx(10e-6)
    assert deterministic_gate_time(1e-6, 1.0) == 1e-6
    assert deterministic_gate_time(1e-6, 0.05) == pytest.approx(2 * deterministic_gate_time(1e-6, 0.1))
    with pytest.raises(ValueError, match="P"):
        deterministic_gate_time(1e-6, 0.0)


def test_repeater_time():
    assert repeater_time(2, 1e-6, 0.1) == pytest.approx(10e-6, rel=1e-15)
    assert repeater_time(16, 1e-6, 0.1) == pytest.approx(40e-6, rel=1e-15)
    assert repeater_time(1e6, 1e-6, 0.1) / repeater_time(1e3, 1e-6, 0.1) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(ValueError, match="n_nodes"):
        repeater_time(1, 1e-6, 0.1)


def _cluster_reference(n, P, eps, tau):
    # direct transcription with numpy logs, as a cross-check of the branches
    L = np.log(2 * n / eps)
    return tau * (P ** -np.log2(4 / P - 3) + np.log2(4 * (L - 1) / P) / P + L / P)


def test_cluster_headlines():
    t = cluster_time(1e3, 0.1, 0.1, 1e-6)
    assert t == pytest.approx(0.162, rel=0.05)
    assert t == pytest.approx(_cluster_reference(1e3, 0.1, 0.1, 1e-6), rel=1e-12)
    years = seconds_to_years(cluster_time(1e3, 0.01, 0.1, 1e-6))
    assert years == pytest.approx(5.9e3, rel=0.1)
    rel = (cluster_time(1e6, 0.1, 0.1, 1e-6) - t) / t * 100
    assert abs(rel - 0.05) <= 0.02


@pytest.mark.parametrize("kwargs,match", [
    (dict(n=1e3, P=1.0, epsilon=0.1), "P must lie"),
    (dict(n=1e3, P=0.0, epsilon=0.1), "P must lie"),
    (dict(n=1e3, P=0.1, epsilon=1.0), "epsilon"),
    (dict(n=1.0, P=0.1, epsilon=0.1), "n must be"),
])
def test_cluster_domain(kwargs, match):
    with pytest.raises(ValueError, match=match):
        cluster_time(tau_rep=1e-6, **kwargs)


def test_cluster_accepts_fractional_n():
    assert cluster_time(1234.5, 0.1, 0.1, 1e-6) > cluster_time(1234, 0.1, 0.1, 1e-6)


def test_cluster_decreasing_in_p():
    ps = np.geomspace(0.001, 0.5, 200)
    ts = [cluster_time(1e3, p, 0.1, 1e-6) for p in ps]
    assert all(b < a for a, b in zip(ts, ts[1:]))


def test_bell_separation():
    assert bell_separation(10e-6) == pytest.approx(2997.92458, rel=1e-12)
    assert bell_separation(1.0) == 299_792_458.0
    assert bell_separation(4e-6) * 2.5 == pytest.approx(bell_separation(10e-6))


@given(st.floats(1e-9, 1e15))
def test_year_round_trip(seconds):
    assert years_to_seconds(seconds_to_years(seconds)) == pytest.approx(seconds, rel=1e-9)
    assert seconds_to_years(seconds) == pytest.approx(seconds / 3.1557e7, rel=2e-5)


def test_human_duration():
    assert human_duration(0.16216) == "162 ms"
    assert human_duration(2.5e-6) == "2.5 us"
    assert human_duration(5846.37 * SECONDS_PER_YEAR) == "5.846e+03 years"
    assert human_duration(7200) == "2 h"
    with pytest.raises(ValueError):
        human_duration(-1)


def test_report_keys_and_positivity():
    rep = network_report(NetworkParams())
    assert list(rep) == ["inputs", "P_ap", "P_I", "P_II", "t_gate", "t_repeater", "T_cluster_seconds",
                         "T_cluster_human", "bell_distance_m"]
    assert all(v > 0 for k, v in rep.items() if k not in ("inputs", "T_cluster_human"))
    assert rep["P_I"] == pytest.approx(2 * rep["P_ap"] * 0.2)
    assert rep["P_II"] == pytest.approx(0.25 * (rep["P_ap"] * 0.2) ** 2)


def test_params_validation():
    with pytest.raises(ValueError, match="epsilon"):
        NetworkParams(epsilon=0.0)
    with pytest.raises(ValueError, match="N_nodes"):
        NetworkParams(N_nodes=1)
    with pytest.raises(ValueError, match="p_e"):
        NetworkParams(p_e=0.0)


def test_cluster_time_is_fast():
    start = time.perf_counter()
    for _ in range(1000):
        cluster_time(1e3, 0.1, 0.1, 1e-6)
    assert (time.perf_counter() - start) / 1000 < 1e-3
