"""Circular-statistics primitives and structured linear algebra.

Shared by the map-construction engine and the channel estimator: von Mises
(V-M) distributions for delay/angle variables, steering vectors and their
expectations under a V-M belief, Bessel-ratio utilities, the Khatri-Rao Gram
kernel used by the reduced-complexity estimator, and the least-squares
projection metric that defines map accuracy.

Conventions
-----------
A length-x steering vector is a_x(omega)[n] = exp(-i*n*omega)/sqrt(x) for
n = 0..x-1.  The rectangular-array response factors as
b(theta, phi) = a_M1(theta) kron a_M2(phi).  All functions here are pure and
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ive

__all__ = [
    "VonMises",
    "ComplexGaussian1D",
    "SteeringParams",
    "steering",
    "ura_response",
    "vm_expected_steering",
    "vm_expected_ura",
    "bessel_ratio",
    "bessel_ratio_inv",
    "vm_multiply",
    "vm_mix",
    "khatri_rao_gram",
    "path_dictionary",
    "ls_projection_mse_db",
    "TWO_PI",
]

TWO_PI = 2.0 * np.pi

# Inputs to bessel_ratio_inv at or above 1 are clamped here; Laplace
# approximations can overshoot the valid open interval [0, 1).
_RATIO_CLAMP = 1.0 - 1e-9


def _wrap_2pi(x: float) -> float:
    return float(np.mod(x, TWO_PI))


@dataclass(frozen=True)
class VonMises:
    """Circular distribution with mean direction ``mu`` and concentration ``kappa``.

    ``kappa = 0`` denotes the uniform distribution on the circle; ``mu`` is
    stored reduced modulo 2*pi.
    """

    mu: float
    kappa: float

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")
        object.__setattr__(self, "mu", _wrap_2pi(self.mu))
        object.__setattr__(self, "kappa", float(self.kappa))


@dataclass(frozen=True)
class ComplexGaussian1D:
    """Scalar circularly-symmetric complex Gaussian message (mean, variance)."""

    mean: complex
    var: float

    def __post_init__(self):
        if not (self.var > 0) or not np.isfinite(self.var):
            raise ValueError(f"var must be finite and > 0, got {self.var}")
        object.__setattr__(self, "mean", complex(self.mean))
        object.__setattr__(self, "var", float(self.var))


@dataclass(frozen=True)
class SteeringParams:
    """One path's circular parameters: normalized delay and two directional components.

    ``tau`` lives in [0, 2*pi); ``theta`` and ``phi`` in [-pi, pi).
    """

    tau: float
    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "tau", _wrap_2pi(self.tau))
        object.__setattr__(self, "theta", _wrap_pi(self.theta))
        object.__setattr__(self, "phi", _wrap_pi(self.phi))


def _wrap_pi(x: float) -> float:
    """Reduce an angle to the principal interval [-pi, pi)."""
    return float(np.mod(x + np.pi, TWO_PI) - np.pi)


def steering(x: int, omega: float) -> np.ndarray:
    """Unit-norm steering vector, entry n = exp(-i*n*omega)/sqrt(x)."""
    if x < 1:
        raise ValueError(f"steering length must be >= 1, got {x}")
    n = np.arange(x)
    return np.exp(-1j * n * omega) / np.sqrt(x)


def ura_response(m1: int, m2: int, theta: float, phi: float) -> np.ndarray:
    """Rectangular-array response b(theta, phi) = a_m1(theta) kron a_m2(phi)."""
    return np.kron(steering(m1, theta), steering(m2, phi))


def vm_expected_steering(x: int, d: VonMises) -> np.ndarray:
    """Expectation of steering(x, omega) under omega ~ VonMises(mu, kappa).

    Entry n equals exp(-i*n*mu) * I_n(kappa)/I_0(kappa) / sqrt(x).  The
    Bessel ratio is evaluated through exponentially scaled Bessel functions,
    which stays finite for concentrations up to and beyond 1e8.
    """
    if x < 1:
        raise ValueError(f"steering length must be >= 1, got {x}")
    n = np.arange(x)
    # ive(n, k) = I_n(k) * exp(-k), so the ratio is overflow-free.
    i0 = ive(0, d.kappa)
    ratios = ive(n, d.kappa) / i0
    return np.exp(-1j * n * d.mu) * ratios / np.sqrt(x)


def vm_expected_ura(m1: int, m2: int, d_theta: VonMises, d_phi: VonMises) -> np.ndarray:
    """Expected array response under independent V-M beliefs on theta and phi."""
    return np.kron(vm_expected_steering(m1, d_theta), vm_expected_steering(m2, d_phi))


def bessel_ratio(kappa):
    """A(kappa) = I_1(kappa)/I_0(kappa), stable for large arguments.

    Accepts a scalar or an array; monotone increasing from 0 toward 1.
    """
    kappa = np.asarray(kappa, dtype=float)
    out = ive(1, kappa) / ive(0, kappa)
    if out.ndim == 0:
        return float(out)
    return out


def _bessel_ratio_deriv(kappa: float, a: float) -> float:
    # A'(k) = 1 - A^2 - A/k; beyond k ~ 1e3 that form cancels catastrophically,
    # so switch to the asymptotic 1/(2k^2) + 1/(4k^3).
    if kappa > 1e3:
        return 0.5 / kappa**2 + 0.25 / kappa**3
    if kappa < 1e-12:
        return 0.5
    return 1.0 - a * a - a / kappa


def bessel_ratio_inv(r: float) -> float:
    """Inverse of ``bessel_ratio``; inputs outside [0, 1) are clamped.

    Rational initial guess refined by Newton iterations on A(kappa) - r.
    """
    r = float(r)
    if not np.isfinite(r) or r <= 0.0:
        return 0.0
    if r >= _RATIO_CLAMP:
        r = _RATIO_CLAMP
    if r < 0.53:
        kappa = r * (2.0 - r * r) / (1.0 - r * r)
    else:
        kappa = (1.28 - 0.53 * r * r) * np.tan(0.5 * np.pi * r)
    kappa = max(kappa, 1e-12)
    for _ in range(100):
        a = bessel_ratio(kappa)
        da = _bessel_ratio_deriv(kappa, a)
        step = (a - r) / da
        new = kappa - step
        if new <= 0.0:
            new = 0.5 * kappa
        if abs(new - kappa) <= 1e-13 * (1.0 + abs(new)):
            kappa = new
            break
        kappa = new
    return float(max(kappa, 0.0))


def vm_multiply(a: VonMises, b: VonMises) -> VonMises:
    """Product of two V-M densities, itself V-M via the complex resultant.

    kappa_out * exp(i*mu_out) = kappa_a * exp(i*mu_a) + kappa_b * exp(i*mu_b).
    """
    z = a.kappa * np.exp(1j * a.mu) + b.kappa * np.exp(1j * b.mu)
    kappa = float(np.abs(z))
    mu = float(np.angle(z)) if kappa > 0.0 else 0.0
    return VonMises(mu=mu, kappa=kappa)


def vm_mix(old: VonMises, new: VonMises, weight_new: float) -> VonMises:
    """Convex resultant-vector combination used for message damping.

    ``weight_new = 1`` returns ``new`` exactly.
    """
    z = (1.0 - weight_new) * old.kappa * np.exp(1j * old.mu) + weight_new * new.kappa * np.exp(1j * new.mu)
    kappa = float(np.abs(z))
    mu = float(np.angle(z)) if kappa > 0.0 else 0.0
    return VonMises(mu=mu, kappa=kappa)


def khatri_rao_gram(B: np.ndarray, Af: np.ndarray, Qinv: np.ndarray) -> np.ndarray:
    """Gram matrix of a column-wise Khatri-Rao dictionary under a spatial weighting.

    For A with columns B[:, l] kron Af[:, l], returns
    A^H (Qinv kron I) A = (B^H Qinv B) * (Af^H Af) elementwise, avoiding the
    dense Kronecker product.
    """
    B = np.asarray(B)
    Af = np.asarray(Af)
    Qinv = np.asarray(Qinv)
    if B.ndim != 2 or Af.ndim != 2 or Qinv.ndim != 2:
        raise ValueError("khatri_rao_gram expects 2-D arrays")
    M, L = B.shape
    if Af.shape[1] != L:
        raise ValueError(f"column count mismatch: B has {L}, Af has {Af.shape[1]}")
    if Qinv.shape != (M, M):
        raise ValueError(f"Qinv must be {M}x{M}, got {Qinv.shape}")
    return (B.conj().T @ Qinv @ B) * (Af.conj().T @ Af)


def ls_projection_mse_db(H: np.ndarray, A: np.ndarray, floor_db: float = -200.0) -> float:
    """Mean least-squares projection residual of channels onto span(A), in dB.

    ``H`` holds one channel per row (a single vector is accepted); the
    residual per slot is ||h - A A^+ h||^2 / dim(h), averaged over slots.
    Rank decisions use an SVD cutoff of 1e-10 times the largest singular
    value.  Ratios below 1e-20 report the ``floor_db`` floor.
    """
    H = np.atleast_2d(np.asarray(H))
    dim = H.shape[1]
    if A is None or A.size == 0:
        resid = H
    else:
        A = np.asarray(A)
        if A.shape[0] != dim:
            raise ValueError(f"dictionary rows {A.shape[0]} != channel dim {dim}")
        U, s, _ = np.linalg.svd(A, full_matrices=False)
        keep = s > 1e-10 * s[0] if s.size else np.zeros(0, dtype=bool)
        Uk = U[:, keep]
        resid = H - (H @ Uk.conj()) @ Uk.T
    ratio = float(np.mean(np.sum(np.abs(resid) ** 2, axis=1))) / dim
    return float(10.0 * np.log10(max(ratio, 10.0 ** (floor_db / 10.0))))
