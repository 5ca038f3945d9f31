"""Von Mises plasticity with isotropic hardening.

Plane-strain stress/strain tensors are stored as arrays with a trailing
dimension of 4: (xx, yy, zz, xy).  All operations are pure and broadcast
over leading dimensions, so a single material point and a whole node field
use the same code path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

XX, YY, ZZ, XY = 0, 1, 2, 3


class ReturnMappingError(RuntimeError):
    """Newton iteration failed to satisfy the yield equality within I_max."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"return mapping not converged after {iterations} iterations "
            f"(|residual| = {residual:.3e} GPa)"
        )


@dataclass(frozen=True)
class HardeningCurve:
    """Yield stress as a function of accumulated plastic strain.

    Piecewise-linear between knots; beyond the last knot the curve extends
    with the final slope.  Perfect plasticity is a single knot with zero
    final slope, linear hardening a single knot with final slope H.
    """

    knots_strain: np.ndarray
    knots_stress: np.ndarray
    final_slope: float

    def __post_init__(self):
        ks = np.asarray(self.knots_strain, dtype=float)
        sy = np.asarray(self.knots_stress, dtype=float)
        object.__setattr__(self, "knots_strain", ks)
        object.__setattr__(self, "knots_stress", sy)
        if ks.ndim != 1 or ks.shape != sy.shape or len(ks) == 0:
            raise ValueError("knot arrays must be 1D and of equal length")
        if ks[0] != 0.0:
            raise ValueError("hardening curve must start at zero plastic strain")
        if np.any(np.diff(ks) <= 0):
            raise ValueError("knot strains must be strictly increasing")
        if np.any(sy <= 0):
            raise ValueError("yield stress must stay positive")
        if self.final_slope < 0:
            raise ValueError("final slope must be non-negative")
        seg = np.diff(sy) / np.diff(ks) if len(ks) > 1 else np.empty(0)
        if np.any(seg < 0):
            raise ValueError("hardening slope must be non-negative")
        object.__setattr__(self, "_slopes", np.concatenate([seg, [self.final_slope]]))

    @classmethod
    def perfect(cls, sigma_y0: float) -> "HardeningCurve":
        return cls(np.array([0.0]), np.array([sigma_y0]), 0.0)

    @classmethod
    def linear(cls, sigma_y0: float, slope: float) -> "HardeningCurve":
        return cls(np.array([0.0]), np.array([sigma_y0]), slope)

    @classmethod
    def piecewise(cls, knots) -> "HardeningCurve":
        arr = np.asarray(knots, dtype=float)
        strain, stress = arr[:, 0], arr[:, 1]
        if len(strain) < 2:
            raise ValueError("piecewise curve needs at least two knots")
        final = (stress[-1] - stress[-2]) / (strain[-1] - strain[-2])
        return cls(strain, stress, final)

    @property
    def sigma_y0(self) -> float:
        return float(self.knots_stress[0])

    def yield_stress(self, epbar):
        ep = np.asarray(epbar, dtype=float)
        base = np.interp(ep, self.knots_strain, self.knots_stress)
        over = np.maximum(ep - self.knots_strain[-1], 0.0)
        return base + self.final_slope * over

    def slope(self, epbar):
        """Right-hand segment slope at epbar (final slope beyond last knot)."""
        ep = np.asarray(epbar, dtype=float)
        idx = np.searchsorted(self.knots_strain, ep, side="right") - 1
        idx = np.clip(idx, 0, len(self._slopes) - 1)
        return self._slopes[idx]


@dataclass(frozen=True)
class ElasticConstants:
    """Isotropic elastic constants; Lame parameters derived from (E, nu)."""

    E: float
    nu: float

    def __post_init__(self):
        if not (0.0 < self.nu < 0.5):
            raise ValueError(f"Poisson ratio must lie in (0, 0.5), got {self.nu}")
        if self.E <= 0:
            raise ValueError("Young's modulus must be positive")

    @property
    def lam(self) -> float:
        return self.E * self.nu / ((1.0 - 2.0 * self.nu) * (1.0 + self.nu))

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))


@dataclass(frozen=True)
class MaterialModel:
    """Elastic constants paired with a hardening curve."""

    elastic: ElasticConstants
    hardening: HardeningCurve


@dataclass
class PointState:
    """Per-point bulk state: stress, elastic strain, accumulated plastic strain.

    Arrays broadcast: sigma and eps_e are (..., 4), epbar is (...,).
    """

    sigma: np.ndarray
    eps_e: np.ndarray
    epbar: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "PointState":
        return cls(np.zeros((n, 4)), np.zeros((n, 4)), np.zeros(n))

    def copy(self) -> "PointState":
        return PointState(self.sigma.copy(), self.eps_e.copy(), np.array(self.epbar, copy=True))


def von_mises(sigma: np.ndarray):
    """Equivalent von Mises stress of a plane-strain tensor field."""
    s = np.asarray(sigma, dtype=float)
    return np.sqrt(
        0.5
        * (
            (s[..., XX] - s[..., YY]) ** 2
            + (s[..., YY] - s[..., ZZ]) ** 2
            + (s[..., ZZ] - s[..., XX]) ** 2
            + 6.0 * s[..., XY] ** 2
        )
    )


def yield_function(sigma: np.ndarray, epbar, curve: HardeningCurve):
    """Phi = sigma_VMS - sigma_y(epbar); positive values flag plastic states."""
    return von_mises(sigma) - curve.yield_stress(epbar)


def solve_multiplier(
    svm_trial,
    epbar,
    curve: HardeningCurve,
    mu: float,
    i_max: int = 50,
    eps_tol: float = 1e-6,
):
    """Newton iteration for sigma_trial - 3 mu dg - sigma_y(epbar + dg) = 0.

    The root may be negative when the trial state lies inside the yield
    surface (used by the driver's frozen-active-set passes).
    """
    svm_trial = np.asarray(svm_trial, dtype=float)
    epbar = np.asarray(epbar, dtype=float)
    phi = svm_trial - curve.yield_stress(epbar)
    # cancellation floor: phi cannot resolve below the rounding of svm_trial
    tol = np.maximum(eps_tol, 64.0 * np.finfo(float).eps * svm_trial)
    dg = np.zeros_like(phi)
    k = 0
    while True:
        slope = curve.slope(epbar + dg)
        dg = dg + phi / (3.0 * mu + slope)
        phi = svm_trial - 3.0 * mu * dg - curve.yield_stress(epbar + dg)
        k += 1
        if np.all(np.abs(phi) <= tol):
            break
        if k >= i_max:
            raise ReturnMappingError(float(np.max(np.abs(phi))), k)
    return dg


def return_mapping(
    svm_trial,
    epbar,
    curve: HardeningCurve,
    mu: float,
    i_max: int = 50,
    eps_tol: float = 1e-6,
):
    """Plastic multiplier projecting an inadmissible trial state onto the
    yield surface; requires a positive trial yield function.
    """
    svm_trial = np.asarray(svm_trial, dtype=float)
    if np.any(svm_trial - curve.yield_stress(epbar) <= 0):
        raise ValueError("return mapping requires a positive trial yield function")
    return solve_multiplier(svm_trial, epbar, curve, mu, i_max, eps_tol)


def update_state(state: PointState, dgamma, mu: float) -> PointState:
    """Scale the stress deviator back onto the yield surface.

    The hydrostatic stress and the volumetric elastic strain are untouched
    (isochoric plastic flow); the elastic strain is rebuilt from the new
    deviator so stress and elastic strain stay constitutively consistent.
    """
    dgamma = np.asarray(dgamma, dtype=float)
    sigma = np.asarray(state.sigma, dtype=float)
    svm = von_mises(sigma)
    if np.any((dgamma > 0) & (svm == 0)):
        raise ValueError("undefined flow direction: zero von Mises stress")

    p = (sigma[..., XX] + sigma[..., YY] + sigma[..., ZZ]) / 3.0
    dev = sigma.copy()
    for comp in (XX, YY, ZZ):
        dev[..., comp] -= p
    factor = np.where(svm > 0, 1.0 - 3.0 * mu * dgamma / np.where(svm > 0, svm, 1.0), 1.0)
    dev_new = dev * factor[..., None]

    sigma_new = dev_new.copy()
    for comp in (XX, YY, ZZ):
        sigma_new[..., comp] += p

    eps_v = state.eps_e[..., XX] + state.eps_e[..., YY] + state.eps_e[..., ZZ]
    eps_new = dev_new / (2.0 * mu)
    for comp in (XX, YY, ZZ):
        eps_new[..., comp] += eps_v / 3.0

    return PointState(sigma_new, eps_new, np.asarray(state.epbar) + dgamma)


TABLE_HARDENING_KNOTS = np.array(
    [
        (0.000, 0.240),
        (0.001, 0.290),
        (0.002, 0.330),
        (0.003, 0.370),
        (0.004, 0.400),
        (0.005, 0.430),
        (0.006, 0.450),
        (0.007, 0.470),
        (0.008, 0.483),
        (0.009, 0.495),
        (0.010, 0.500),
    ]
)
"""Synthetic uniaxial-test hardening data (GPa) for the irregular-domain case."""
