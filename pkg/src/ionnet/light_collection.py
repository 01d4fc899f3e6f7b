"""Photon collection: parabolic mirror to single-mode fiber, and cavities.

Mirror geometry: paraboloid z(rho) = rho^2 / 4f - f with the ion at the
focus and the quantization axis along the symmetry axis. Lengths may be in
any unit as long as f, rho and the fiber waist w share it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .numerics import QuadratureError, gamma_m1_scaled
from .validation import check_positive, check_probability

_C = math.sqrt(3.0 / (16.0 * math.pi))
_N_PHI = 32
LEFT_CIRCULAR = (1.0 / math.sqrt(2.0), -1j / math.sqrt(2.0))
RIGHT_CIRCULAR = (1.0 / math.sqrt(2.0), 1j / math.sqrt(2.0))


@dataclass(frozen=True)
class Paraboloid:
    f: float
    rho_max: float = math.inf

    def __post_init__(self):
        check_positive("f", self.f)
        check_positive("rho_max", self.rho_max)


@dataclass(frozen=True)
class FiberMode:
    """Gaussian fiber mode exp(-(rho/w)^2) (alpha x + beta y)."""

    w: float
    jones: tuple[complex, complex] = LEFT_CIRCULAR

    def __post_init__(self):
        check_positive("w", self.w)
        a, b = self.jones
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-9:
            raise ValueError(f"Jones vector must be normalized, got {self.jones}")


def _check_m(m):
    if m not in (-1, 0, 1):
        raise ValueError(f"transition index m must be -1, 0 or +1, got {m}")


def reflected_field(m: int, f: float, rho, phi):
    """Collimated field after the mirror as (E_rho, E_phi) complex components."""
    _check_m(m)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be >= 0")
    phi = np.asarray(phi, dtype=float)
    s = rho ** 2 + 4.0 * f ** 2
    amp = 1j * 4.0 * f / s * _C
    if m == 0:
        e_rho = -amp * 4.0 * f * rho / s
        return e_rho * np.ones_like(phi), np.zeros(np.broadcast(e_rho, phi).shape, dtype=complex)
    sgn = float(m)
    pref = sgn * amp * np.exp(1j * sgn * phi)
    e_rho = pref * (-(rho ** 2 - 4.0 * f ** 2) / s)
    e_phi = pref * (sgn * 1j) * np.ones_like(rho)
    return e_rho, e_phi


def _quad_checked(func, a, b, rtol):
    value, err = integrate.quad(func, a, b, epsabs=0.0, epsrel=rtol * 1e-2, limit=400)
    achieved = err / max(abs(value), 1e-300)
    if achieved > rtol:
        raise QuadratureError("adaptive quadrature missed its tolerance", achieved)
    return value


def fiber_overlap_numeric(m: int, mirror: Paraboloid, fiber: FiberMode, rtol: float = 1e-8) -> float:
    """Mode overlap T_{1,m} by direct quadrature.

    The azimuthal integral uses a periodic trapezoid rule (exact for the
    finite Fourier content of the integrand); the radial integrals use
    adaptive Gauss-Kronrod quadrature.
    """
    _check_m(m)
    f, w = mirror.f, fiber.w
    alpha, beta = fiber.jones
    phi = np.arange(_N_PHI) * (2.0 * math.pi / _N_PHI)
    cphi, sphi = np.cos(phi), np.sin(phi)
    # G . rho_hat and G . phi_hat per azimuth, without the Gaussian envelope
    g_rho = alpha * cphi + beta * sphi
    g_phi = -alpha * sphi + beta * cphi
    dphi = 2.0 * math.pi / _N_PHI

    def angular(rho):
        e_rho, e_phi = reflected_field(m, f, rho, phi)
        terms = e_rho * g_rho + e_phi * g_phi
        weight = dphi * rho * math.exp(-(rho / w) ** 2)
        # last entry is a non-cancelling magnitude scale for the error test
        mag = np.sum(np.abs(e_rho * g_rho) + np.abs(e_phi * g_phi))
        total = np.sum(terms)
        return np.array([total.real, total.imag, mag]) * weight

    def power(rho):
        e_rho, e_phi = reflected_field(m, f, rho, 0.0)
        return 2.0 * math.pi * rho * (abs(e_rho) ** 2 + abs(e_phi) ** 2)

    upper = mirror.rho_max
    scale = max(f, w)
    # split at the field and fiber scales so the adaptive rule sees both
    breaks = [0.0] + [b for b in sorted({w, 2.0 * f, 4.0 * w, 8.0 * scale}) if b < upper] + [upper]
    vec = np.zeros(3)
    err = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        part, e = integrate.quad_vec(angular, a, b, epsabs=0.0, epsrel=rtol * 1e-2, norm="max", limit=400)
        vec += part
        err += e
    num = complex(vec[0], vec[1])
    # cancelling integrands (pi light) are judged against the magnitude scale
    if err > max(rtol * abs(num), 1e-13 * vec[2]):
        raise QuadratureError("overlap numerator missed its tolerance", err / max(abs(num), 1e-300))
    if abs(num) <= 1e-13 * vec[2]:
        return 0.0
    numerator = abs(num) ** 2
    e_norm = _quad_checked(power, 0.0, 2.0 * f, rtol) + _quad_checked(power, 2.0 * f, math.inf, rtol)
    g_norm = _quad_checked(lambda r: 2.0 * math.pi * r * math.exp(-2.0 * (r / w) ** 2), 0.0, math.inf, rtol)
    return numerator / (e_norm * g_norm)


def polarization_factor(m: int, jones) -> float:
    """|alpha + i beta|^2 for m=+1, |alpha - i beta|^2 for m=-1."""
    alpha, beta = jones
    return abs(alpha + m * 1j * beta) ** 2


def sigma_coupling_analytic(f: float, fiber: FiberMode, rho_max: float = math.inf, m: int = 1) -> float:
    """Closed-form sigma-light fiber coupling P_sigma.

    P = (3/2)(2f/w)^6 |alpha +/- i beta|^2 e^{2 x0} |Gamma(-1, x0) - Gamma(-1, x1)|^2
    with x0 = 4 f^2 / w^2 and x1 = (rho_max^2 + 4 f^2) / w^2. The incomplete
    gamma functions are carried in scaled form, so no factor overflows.
    """
    if m not in (-1, 1):
        raise ValueError(f"sigma coupling needs m = +1 or -1, got {m}")
    check_positive("f", f)
    w = fiber.w
    pol = polarization_factor(m, fiber.jones)
    if pol == 0.0:
        return 0.0
    if rho_max <= 0:
        return 0.0
    x0 = (2.0 * f / w) ** 2
    scaled = gamma_m1_scaled(x0)
    if math.isfinite(rho_max):
        x1 = (rho_max ** 2 + 4.0 * f ** 2) / w ** 2
        scaled -= math.exp(x0 - x1) * gamma_m1_scaled(x1)
    return 1.5 * (2.0 * f / w) ** 6 * pol * scaled ** 2


class FocusOptimum(NamedTuple):
    f_star: float
    p_star: float


def optimize_focus(fiber: FiberMode, rho_max: float = math.inf, m: int = 1,
                   bracket=(0.05, 5.0), scan_points: int = 64, xtol: float = 1e-6) -> FocusOptimum:
    """Focal length maximizing P_sigma for a given fiber waist and mirror radius.

    A log-spaced scan over f/w brackets the peak; golden-section search
    refines it to ``xtol`` in f/w.
    """
    w = fiber.w
    lo, hi = bracket
    grid = np.geomspace(lo, hi, scan_points)
    values = np.array([sigma_coupling_analytic(x * w, fiber, rho_max, m) for x in grid])
    i = int(np.argmax(values))
    if i == 0 or i == len(grid) - 1:
        raise ValueError(
            f"no interior maximum of P_sigma in f/w in [{lo}, {hi}]: "
            f"P({lo}) = {values[0]:.6g}, P({hi}) = {values[-1]:.6g}"
        )

    def neg(x):
        return -sigma_coupling_analytic(x * w, fiber, rho_max, m)

    res = optimize.minimize_scalar(neg, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                                   tol=xtol / grid[i])
    return FocusOptimum(float(res.x) * w, float(-res.fun))


class MirrorFiberCoupling(BaseEstimator):
    """Parabolic-mirror fiber coupling as an estimator over f/w.

    ``fit`` finds the optimal focus; ``predict(f_over_w)`` evaluates the
    analytic coupling curve.

    Attributes
    ----------
    f_over_w_ : float
    efficiency_ : float
    """

    def __init__(self, waist=1.0, rho_max=math.inf, jones=LEFT_CIRCULAR, transition=1):
        self.waist = waist
        self.rho_max = rho_max
        self.jones = jones
        self.transition = transition

    def _fiber(self):
        return FiberMode(self.waist, tuple(self.jones))

    def fit(self, X=None, y=None):
        opt = optimize_focus(self._fiber(), self.rho_max, self.transition)
        self.f_over_w_ = opt.f_star / self.waist
        self.efficiency_ = opt.p_star
        return self

    def predict(self, X):
        x = check_array(X, ensure_2d=False).ravel()
        fiber = self._fiber()
        return np.array([sigma_coupling_analytic(v * self.waist, fiber, self.rho_max, self.transition) for v in x])

    def score(self, X=None, y=None):
        check_is_fitted(self)
        return self.efficiency_


def mirror_gate_coincidence(eta: float, p_b: float) -> float:
    """Gate coincidence with a mirror: p_B (eta/8)^2.

    The three halvings are fiber coupling, Clebsch-Gordan weight and the
    polarizer that erases which-transition information.
    """
    check_probability("eta", eta)
    check_probability("p_b", p_b)
    return p_b * (eta * 0.125) ** 2


@dataclass(frozen=True)
class CavityParams:
    g: float
    kappa: float
    gamma: float
    t_out: float
    loss_total: float

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "t_out", "loss_total"):
            v = getattr(self, name)
            if name == "g":
                if not v >= 0:
                    raise ValueError(f"g must be >= 0, got {v}")
            else:
                check_positive(name, v)
        if self.t_out > self.loss_total:
            raise ValueError(f"t_out ({self.t_out}) cannot exceed loss_total ({self.loss_total})")


class CavityReport(NamedTuple):
    cooperativity: float
    p_c: float
    factors: tuple[float, float, float]  # outcoupling, rate, purcell

    def to_record(self):
        return {"C": self.cooperativity, "p_c": self.p_c, "factors": list(self.factors)}


def cavity_collection(params: CavityParams) -> CavityReport:
    """Cooperativity C = g^2/(kappa Gamma) and collection probability p_c."""
    coop = params.g ** 2 / (params.kappa * params.gamma)
    outcoupling = params.t_out / params.loss_total
    rate = 2.0 * params.kappa / (2.0 * params.kappa + params.gamma)
    purcell = 2.0 * coop / (1.0 + 2.0 * coop)
    return CavityReport(coop, outcoupling * rate * purcell, (outcoupling, rate, purcell))
