"""Quantum networking calculators for trapped-ion nodes.

Sparse Fock-space states and beamsplitter heralding, ion-chain radiation
patterns, photon collection optics and network time-resource estimates.
"""
__version__ = "0.1.0"

from .hilbert import Mode, PureState, fidelity, ket, tensor
from .photon_source import QubitKind, make_pair, preset
from .heralding import DetectionPattern, PathGeometry, beamsplitter, type1_herald, type2_herald
from .ion_crystal import IonChain, SpreadScalingFit, equilibrium_positions
from .light_collection import MirrorFiberCoupling, cavity_collection, sigma_coupling_analytic
from .network import NetworkParams, cluster_time, network_report

__all__ = [
    "Mode", "PureState", "fidelity", "ket", "tensor",
    "QubitKind", "make_pair", "preset",
    "DetectionPattern", "PathGeometry", "beamsplitter", "type1_herald", "type2_herald",
    "IonChain", "SpreadScalingFit", "equilibrium_positions",
    "MirrorFiberCoupling", "cavity_collection", "sigma_coupling_analytic",
    "NetworkParams", "cluster_time", "network_report",
]
