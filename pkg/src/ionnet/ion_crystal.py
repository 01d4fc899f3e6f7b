"""Linear ion chains: statics, normal modes and the elastic radiation pattern.

Lengths are in units of d = (e^2 / (4 pi eps0 M omega_a^2))^(1/3) and
frequencies in units of the axial centre-of-mass frequency omega_a. The
crystal axis is x, the in-plane transverse direction is y and the
quantization axis is normal to the scattering plane.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import constants, integrate
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .numerics import QuadratureError, gauss_laguerre_integrate
from .validation import check_nonnegative, check_positive

MAX_IONS = 100


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message}; residual {residual:.3e}")
        self.residual = residual


class ZigZagError(ValueError):
    """A transverse mode frequency is imaginary: the chain is not linear."""


# ------------------------------------------------------------------ statics


def _coulomb_gradient(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d ** 2, axis=1)


def _energy(u):
    d = np.abs(u[:, None] - u[None, :])
    iu = np.triu_indices(len(u), 1)
    return 0.5 * float(np.sum(u ** 2)) + float(np.sum(1.0 / d[iu]))


def _inv_cube_distances(u):
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    return 1.0 / d ** 3


def axial_hessian(u) -> np.ndarray:
    """Dimensionless axial Hessian; eigenvalues are (omega_m / omega_a)^2."""
    k = _inv_cube_distances(np.asarray(u, dtype=float))
    h = -2.0 * k
    h[np.diag_indices_from(h)] = 1.0 + 2.0 * k.sum(axis=1)
    return h


def transverse_hessian(u, anisotropy: float) -> np.ndarray:
    """Dimensionless transverse Hessian for omega_t / omega_a = ``anisotropy``."""
    k = _inv_cube_distances(np.asarray(u, dtype=float))
    h = k.copy()
    h[np.diag_indices_from(h)] = anisotropy ** 2 - k.sum(axis=1)
    return h


def equilibrium_positions(n: int, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Axial equilibrium positions of ``n`` ions, ascending, in units of d.

    Damped Newton iteration from uniform spacing. The potential is convex on
    the ordered configurations, so backtracking on the energy converges
    globally.
    """
    n = int(n)
    if not 1 <= n <= MAX_IONS:
        raise ValueError(f"n must be in [1, {MAX_IONS}], got {n}")
    if n == 1:
        return np.zeros(1)
    half = 0.5 * (n - 1) * 2.0 * n ** -0.56
    u = np.linspace(-half, half, n)
    residual = math.inf
    for _ in range(max_iter):
        g = _coulomb_gradient(u)
        residual = float(np.max(np.abs(g)))
        if residual < tol:
            break
        step = np.linalg.solve(axial_hessian(u), g)
        e0 = _energy(u)
        t = 1.0
        while True:
            trial = u - t * step
            if np.all(np.diff(trial) > 0):
                # energy stalls at roundoff near the minimum; the residual does not
                if _energy(trial) <= e0 or np.max(np.abs(_coulomb_gradient(trial))) < residual or t < 1e-8:
                    break
            t *= 0.5
        u = trial
    else:
        residual = float(np.max(np.abs(_coulomb_gradient(u))))
        if residual >= tol:
            raise ConvergenceError(f"equilibrium for n={n} did not converge in {max_iter} iterations", residual)
    # enforce the reflection symmetry exactly
    return 0.5 * (u - u[::-1])


def pairwise_spread(u) -> float:
    """sum_{p > p'} (U_p - U_p')^2."""
    u = np.asarray(u, dtype=float)
    d = u[:, None] - u[None, :]
    return float(np.sum(np.triu(d, 1) ** 2))


# ------------------------------------------------------------- normal modes


class NormalModes(NamedTuple):
    axial_freqs: np.ndarray
    transverse_freqs: np.ndarray
    axial_vectors: np.ndarray
    transverse_vectors: np.ndarray


def _fix_signs(vecs):
    vecs = vecs.copy()
    for m in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, m]) > 1e-10)
        if nz.size and vecs[nz[0], m] < 0:
            vecs[:, m] *= -1
    return vecs


def normal_modes(u, anisotropy: float) -> NormalModes:
    """Axial and transverse normal modes of a linear chain.

    Frequencies are ascending in units of omega_a; eigenvector columns give
    the position-to-mode transformation ``A[p, m]``, ``T[p, m]`` with the
    first nonzero entry of each column positive.

    Raises:
        ZigZagError: if a transverse eigenvalue is not positive.
    """
    u = np.asarray(u, dtype=float)
    wa2, va = np.linalg.eigh(axial_hessian(u))
    wt2, vt = np.linalg.eigh(transverse_hessian(u, anisotropy))
    bad = np.flatnonzero(wt2 <= 0)
    if bad.size:
        m = int(bad[0])
        raise ZigZagError(
            f"transverse mode {m} has omega^2 = {wt2[m]:.4g} omega_a^2 <= 0; "
            f"anisotropy {anisotropy} is too small for a linear chain of {len(u)} ions"
        )
    return NormalModes(np.sqrt(wa2), np.sqrt(wt2), _fix_signs(va), _fix_signs(vt))


# ----------------------------------------------------------- cross-section


def scattering_vector(theta_in, theta_out):
    """Components (dk.x, dk.y) of k_out_hat - k_in_hat for in-plane angles."""
    theta_in = np.asarray(theta_in, dtype=float)
    theta_out = np.asarray(theta_out, dtype=float)
    return np.cos(theta_out) - np.cos(theta_in), np.sin(theta_out) - np.sin(theta_in)


def yb171_linewidth_ratio(eta_lambda: float, wavelength: float = 369.5e-9, linewidth_hz: float = 19.6e6) -> float:
    """Gamma / omega_a for Yb-171 on the 370 nm line when eta_lambda = k d.

    eta_lambda fixes d and hence the axial frequency.
    """
    k = 2.0 * math.pi / wavelength
    d = eta_lambda / k
    mass = 170.936 * constants.atomic_mass
    omega_a = math.sqrt(constants.e ** 2 / (4.0 * math.pi * constants.epsilon_0 * mass * d ** 3))
    return 2.0 * math.pi * linewidth_hz / omega_a


def doppler_parameters(freqs, recoil_scale: float, linewidth_ratio: float):
    """Lamb-Dicke parameters and Doppler-limit occupations per mode.

    ``recoil_scale`` is sqrt(hbar k^2 Gamma / (2 M omega_a^2)) and
    ``linewidth_ratio`` is Gamma / omega_a. Returns ``(eta_m, nbar_m)`` with
    nbar_m = Gamma / (2 omega_m) and eta_m = k sqrt(hbar / (2 M omega_m)).
    """
    freqs = np.asarray(freqs, dtype=float)
    eta = recoil_scale / np.sqrt(linewidth_ratio * freqs)
    nbar = linewidth_ratio / (2.0 * freqs)
    return eta, nbar


def pair_sum(u, axial_vectors, transverse_vectors, eta_lambda, eta_axial, eta_transverse,
             nbar_axial, nbar_transverse, dkx, dky, debye_waller=True) -> np.ndarray:
    """Complex double sum over ion pairs of phase times Debye-Waller factors.

    Vectorized over the angle arrays ``dkx``, ``dky``. The real part is the
    raw differential cross-section.
    """
    u = np.asarray(u, dtype=float)
    dkx = np.atleast_1d(np.asarray(dkx, dtype=float))
    dky = np.atleast_1d(np.asarray(dky, dtype=float))
    du = u[:, None] - u[None, :]
    if debye_waller:
        wa = (np.asarray(eta_axial) ** 2) * (np.asarray(nbar_axial) + 0.5)
        wt = (np.asarray(eta_transverse) ** 2) * (np.asarray(nbar_transverse) + 0.5)
        da = axial_vectors[:, None, :] - axial_vectors[None, :, :]
        dt = transverse_vectors[:, None, :] - transverse_vectors[None, :, :]
        sa = np.einsum("pqm,m->pq", da ** 2, wa)
        st = np.einsum("pqm,m->pq", dt ** 2, wt)
    else:
        sa = st = np.zeros_like(du)
    iu = np.triu_indices(len(u), 1)
    phase = eta_lambda * du[iu][:, None] * dkx[None, :]
    damp = np.exp(-sa[iu][:, None] * dkx[None, :] ** 2 - st[iu][:, None] * dky[None, :] ** 2)
    upper = np.sum(np.exp(1j * phase) * damp, axis=0)
    lower = np.sum(np.exp(-1j * phase) * damp, axis=0)
    return len(u) + upper + lower


class IonChain(TransformerMixin, BaseEstimator):
    """Linear ion chain whose ``transform`` maps scattering angles to intensity.

    Parameters
    ----------
    n_ions : int
    eta_lambda : float
        |k| d, wavevector magnitude times the chain length unit.
    anisotropy : float
        omega_t / omega_a.
    recoil_scale : float
        sqrt(hbar k^2 Gamma / (2 M omega_a^2)); 1 reproduces Doppler-cooled
        chains at the reference scale.
    linewidth_ratio : float or None
        Gamma / omega_a. ``None`` derives it from Yb-171 constants and
        ``eta_lambda``.
    nbar_axial, nbar_transverse : array-like or None
        Per-mode thermal occupations overriding the Doppler-limit default.
    theta_in : float
        Excitation direction in the scattering plane; 0 is along the axis.

    Attributes
    ----------
    positions_ : ndarray of shape (n_ions,)
    axial_freqs_, transverse_freqs_ : ndarray of shape (n_ions,)
    axial_vectors_, transverse_vectors_ : ndarray of shape (n_ions, n_ions)
    lamb_dicke_axial_, lamb_dicke_transverse_ : ndarray of shape (n_ions,)
    nbar_axial_, nbar_transverse_ : ndarray of shape (n_ions,)
    """

    def __init__(self, n_ions=3, eta_lambda=600.0, anisotropy=10.0, recoil_scale=1.0,
                 linewidth_ratio=None, nbar_axial=None, nbar_transverse=None, theta_in=0.0):
        self.n_ions = n_ions
        self.eta_lambda = eta_lambda
        self.anisotropy = anisotropy
        self.recoil_scale = recoil_scale
        self.linewidth_ratio = linewidth_ratio
        self.nbar_axial = nbar_axial
        self.nbar_transverse = nbar_transverse
        self.theta_in = theta_in

    def fit(self, X=None, y=None):
        check_positive("eta_lambda", self.eta_lambda)
        check_positive("anisotropy", self.anisotropy)
        check_nonnegative("recoil_scale", self.recoil_scale)
        ratio = self.linewidth_ratio
        if ratio is None:
            ratio = yb171_linewidth_ratio(self.eta_lambda)
        check_positive("linewidth_ratio", ratio)

        self.positions_ = equilibrium_positions(self.n_ions)
        modes = normal_modes(self.positions_, self.anisotropy)
        self.axial_freqs_ = modes.axial_freqs
        self.transverse_freqs_ = modes.transverse_freqs
        self.axial_vectors_ = modes.axial_vectors
        self.transverse_vectors_ = modes.transverse_vectors
        self.linewidth_ratio_ = ratio
        self.lamb_dicke_axial_, nbar_a = doppler_parameters(self.axial_freqs_, self.recoil_scale, ratio)
        self.lamb_dicke_transverse_, nbar_t = doppler_parameters(self.transverse_freqs_, self.recoil_scale, ratio)
        self.nbar_axial_ = self._occupations(self.nbar_axial, nbar_a, "nbar_axial")
        self.nbar_transverse_ = self._occupations(self.nbar_transverse, nbar_t, "nbar_transverse")
        return self

    def _occupations(self, given, default, name):
        if given is None:
            return default
        arr = np.broadcast_to(np.asarray(given, dtype=float), default.shape).copy()
        if np.any(arr < -0.5):
            raise ValueError(f"{name} must be >= -1/2 per mode")
        return arr

    def pair_sum(self, theta_out, theta_in=None, debye_waller=True):
        check_is_fitted(self)
        theta_in = self.theta_in if theta_in is None else theta_in
        dkx, dky = scattering_vector(theta_in, theta_out)
        return pair_sum(
            self.positions_, self.axial_vectors_, self.transverse_vectors_, self.eta_lambda,
            self.lamb_dicke_axial_, self.lamb_dicke_transverse_, self.nbar_axial_, self.nbar_transverse_,
            dkx, dky, debye_waller,
        )

    def cross_section(self, theta_out, theta_in=None, normalize=False, debye_waller=True):
        """Differential cross-section at ``theta_out``; divided by N^2 if ``normalize``."""
        values = self.pair_sum(theta_out, theta_in, debye_waller).real
        if normalize:
            values = values / self.n_ions ** 2
        return values

    def transform(self, X):
        """Normalized intensity for each row's outgoing angle (first column)."""
        X = check_array(X, ensure_2d=False)
        theta = X[:, 0] if X.ndim == 2 else X
        return self.cross_section(theta, normalize=True).reshape(-1, 1)

    def radiation_pattern(self, grid=2048, theta_in=None):
        """Normalized pattern on ``grid`` outgoing angles spanning a full turn.

        The grid contains the forward direction theta_out = theta_in exactly.
        """
        if grid < 2:
            raise ValueError(f"grid must be >= 2, got {grid}")
        theta_in = self.theta_in if theta_in is None else theta_in
        offsets = (np.arange(grid) - grid // 2) * (2.0 * math.pi / grid)
        theta = theta_in + offsets
        return theta, self.cross_section(theta, theta_in, normalize=True)


def sample_cross_section(chain: IonChain, theta_out, samples: int = 100_000, seed: int = 0,
                         theta_in=None, batch: int = 10_000):
    """Monte-Carlo normalized cross-section from sampled mode displacements.

    Each mode coordinate is drawn from N(0, 2 nbar + 1) and the intensity
    |sum_i exp(i phase_i)|^2 / N^2 is averaged. Returns ``(mean, stderr)``
    arrays over ``theta_out``.
    """
    check_is_fitted(chain)
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    theta_in = chain.theta_in if theta_in is None else theta_in
    dkx, dky = scattering_vector(theta_in, np.atleast_1d(theta_out))
    rng = np.random.default_rng(seed)
    # ion displacement per unit mode coordinate, in units of 1/k
    load_a = chain.axial_vectors_ * chain.lamb_dicke_axial_
    load_t = chain.transverse_vectors_ * chain.lamb_dicke_transverse_
    sd_a = np.sqrt(2.0 * chain.nbar_axial_ + 1.0)
    sd_t = np.sqrt(2.0 * chain.nbar_transverse_ + 1.0)
    static = chain.eta_lambda * np.outer(chain.positions_, dkx)
    total = np.zeros_like(dkx)
    total_sq = np.zeros_like(dkx)
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        xa = rng.standard_normal((m, len(sd_a))) * sd_a
        xt = rng.standard_normal((m, len(sd_t))) * sd_t
        da = xa @ load_a.T  # (m, ions)
        dt = xt @ load_t.T
        phase = static[None] + da[:, :, None] * dkx + dt[:, :, None] * dky
        inten = np.abs(np.exp(1j * phase).sum(axis=1)) ** 2 / chain.n_ions ** 2
        total += inten.sum(axis=0)
        total_sq += (inten ** 2).sum(axis=0)
        done += m
    mean = total / samples
    var = np.maximum(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    return mean, np.sqrt(var / samples)


# ----------------------------------------------------- fidelity and spots


def cabrillo_fidelity(eta, nbar, nu_over_gamma, chi, rtol=1e-8):
    """Recoil-limited two-ion fidelity, integrated over the emission time.

    Evaluates int_0^inf dtau e^-tau exp(-4 eta^2 (nbar+1/2)(1 - cos chi cos(nu tau / Gamma)))
    with Gauss-Laguerre rules of doubling order. Sharply peaked, fast
    oscillating integrands that defeat the Laguerre rules fall back to an
    adaptive integral over one trap period, which is exact by periodicity.
    """
    for name, v in (("eta", eta), ("nbar", nbar), ("nu_over_gamma", nu_over_gamma), ("chi", chi)):
        check_nonnegative(name, v)
    a = 4.0 * eta ** 2 * (nbar + 0.5)
    if a == 0.0:
        return 1.0
    cos_chi = math.cos(chi)

    def integrand(t):
        return np.exp(-a * (1.0 - cos_chi * np.cos(nu_over_gamma * t)))

    try:
        value, _ = gauss_laguerre_integrate(integrand, rtol=rtol, max_nodes=_LAGUERRE_MAX_NODES)
    except QuadratureError:
        value = _one_period_integral(integrand, nu_over_gamma, rtol)
    return min(1.0, value)


_LAGUERRE_MAX_NODES = 1024


def _one_period_integral(g, nu, rtol):
    """int_0^inf e^-t g(t) dt for g periodic with period 2 pi / nu."""
    period = 2.0 * math.pi / nu
    span = min(period, 60.0)  # beyond 60 the weight is below double precision
    inner = [x for x in np.arange(1, 64) * (0.5 * period) if x < span]
    value, err = integrate.quad(lambda t: math.exp(-t) * float(g(t)), 0.0, span, points=inner or None,
                                epsabs=0.0, epsrel=rtol * 1e-2, limit=2000)
    if err > rtol * abs(value):
        raise QuadratureError("one-period fidelity integral missed its tolerance", err / abs(value))
    if span == period:
        value /= -math.expm1(-period)
    return value


def cabrillo_fidelity_weak(eta, nbar, chi):
    """Weak-confinement limit exp(-4 eta^2 (nbar+1/2)(1 - cos chi))."""
    check_nonnegative("eta", eta)
    check_nonnegative("nbar", nbar)
    return math.exp(-4.0 * eta ** 2 * (nbar + 0.5) * (1.0 - math.cos(chi)))


class SpotMetrics(NamedTuple):
    spot_width: float  # 2 * delta_theta, radians
    fraction: float  # 2 delta_theta / 2 pi
    witness_floor: float  # (N - 1) / N

    @property
    def half_width(self):
        return 0.5 * self.spot_width


def spot_metrics(n: int, eta_lambda: float) -> SpotMetrics:
    """Forward spot size and the fraction of in-plane photons heralding a W state.

    Uses the scaling law 2 dtheta = 2 * 1.7 (1-f)^(1/4) eta_lambda^(-1/2) N^(-0.21)
    with f = (N-1)/N, and the fraction 0.55 eta_lambda^(-1/2) N^(-0.46).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    check_positive("eta_lambda", eta_lambda)
    f = (n - 1) / n
    width = 2.0 * 1.7 * (1.0 - f) ** 0.25 * eta_lambda ** -0.5 * n ** -0.21
    fraction = 0.55 * eta_lambda ** -0.5 * n ** -0.46
    return SpotMetrics(width, fraction, f)


# ------------------------------------------------------------- spread fit


class SpreadScalingFit(RegressorMixin, BaseEstimator):
    """Power-law fit of the pairwise squared spread against ion number.

    ``fit(N)`` solves the equilibrium for each N (unless ``y`` is given) and
    fits log(spread) = log(prefactor) + exponent * log(N).

    Attributes
    ----------
    prefactor_, exponent_ : float
    r2_ : float
        Coefficient of determination of the log-log fit.
    """

    def __init__(self, min_points=5):
        self.min_points = min_points

    def fit(self, X, y=None):
        n = check_array(X, ensure_2d=False).ravel()
        if n.size < self.min_points:
            raise ValueError(f"need at least {self.min_points} ion numbers, got {n.size}")
        if y is None:
            y = np.array([pairwise_spread(equilibrium_positions(int(k))) for k in n])
        logn, logy = np.log(n), np.log(np.asarray(y, dtype=float))
        slope, intercept = np.polyfit(logn, logy, 1)
        resid = logy - (intercept + slope * logn)
        self.exponent_ = float(slope)
        self.prefactor_ = float(math.exp(intercept))
        self.r2_ = float(1.0 - np.sum(resid ** 2) / np.sum((logy - logy.mean()) ** 2))
        self.spread_ = np.asarray(y, dtype=float)
        return self

    def predict(self, X):
        check_is_fitted(self)
        n = check_array(X, ensure_2d=False).ravel()
        return self.prefactor_ * n ** self.exponent_


def spread_fit(n_range) -> tuple[float, float]:
    """(prefactor, exponent) of the spread power law over ``n_range`` within [5, 50]."""
    n = np.asarray(list(n_range))
    if n.size < 5:
        raise ValueError(f"spread_fit needs at least 5 ion numbers, got {n.size}")
    if n.min() < 5 or n.max() > 50:
        warnings.warn("spread_fit is calibrated for 5 <= N <= 50", RuntimeWarning, stacklevel=2)
    model = SpreadScalingFit().fit(n)
    return model.prefactor_, model.exponent_


@dataclass(frozen=True)
class ScatterGeometry:
    theta_in: float
    theta_out: float

    @property
    def delta_k(self):
        dkx, dky = scattering_vector(self.theta_in, self.theta_out)
        return float(dkx), float(dky)
