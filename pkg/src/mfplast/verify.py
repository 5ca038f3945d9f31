"""Closed-form cylinder references, error norms and plastic-front extraction.

The pressurized thick-walled cylinder admits a Lame solution while fully
elastic and a Tresca-based closed form once a plastic front at radius c has
developed (shear yield k = sigma_y / sqrt(3), matched to the von Mises
uniaxial yield stress).  The front extractor classifies nodes by accumulated
plastic strain, fits

    f_fit(r) = C1/r + C2/r^2 + C3*log(1/r) + C4

to the hoop-stress profile of each class and intersects the two fits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .material import XX, YY, ZZ, XY


class VerifyError(RuntimeError):
    """Reference evaluation outside its validity range or failed extraction."""


def elastic_reference(r, p: float, a: float, b: float, E: float, nu: float):
    """Lame solution (sigma_r, sigma_theta, sigma_z, u_r) for inner pressure p."""
    r = np.asarray(r, dtype=float)
    if np.any((r < a * (1 - 1e-12)) | (r > b * (1 + 1e-12))):
        raise VerifyError("radius outside [a, b]")
    ratio = b**2 / a**2 - 1.0
    s_r = -(b**2 / r**2 - 1.0) / ratio * p
    s_t = (b**2 / r**2 + 1.0) / ratio * p
    s_z = np.full_like(r, 2.0 * nu * p / ratio)
    u_r = (p / E) * ((1.0 + nu) * (1.0 - 2.0 * nu) * r + (1.0 + nu) * b**2 / r) / ratio
    return s_r, s_t, s_z, u_r


def plastic_reference(r, c: float, p: float, a: float, b: float, sigma_y: float, nu: float, mu: float):
    """Tresca closed form with the plastic front at radius c.

    Stresses and displacement follow from c alone (p is implied by c through
    front_from_pressure and is accepted for interface symmetry).
    """
    r = np.asarray(r, dtype=float)
    if np.any((r < a * (1 - 1e-12)) | (r > b * (1 + 1e-12))):
        raise VerifyError("radius outside [a, b]")
    if not (a * (1 - 1e-12) <= c <= b * (1 + 1e-12)):
        raise VerifyError("front radius outside [a, b]")
    k = sigma_y / math.sqrt(3.0)
    plastic = r <= c
    ln = np.log(c**2 / r**2)

    s_r_el = -k * (c**2 / b**2) * (b**2 / r**2 - 1.0)
    s_t_el = k * (c**2 / b**2) * (b**2 / r**2 + 1.0)
    s_r_pl = -k * (1.0 - c**2 / b**2 + ln)
    s_t_pl = k * (1.0 + c**2 / b**2 - ln)

    s_r = np.where(plastic, s_r_pl, s_r_el)
    s_t = np.where(plastic, s_t_pl, s_t_el)
    s_z = nu * (s_r + s_t)
    u_r = (1.0 - nu) * k * c**2 / (mu * r) + (1.0 - 2.0 * nu) * s_r * r / (2.0 * mu)
    return s_r, s_t, s_z, u_r


def pressure_from_front(c: float, a: float, b: float, sigma_y: float) -> float:
    """Internal pressure carried when the plastic front sits at radius c."""
    k = sigma_y / math.sqrt(3.0)
    return k * (1.0 - c**2 / b**2 + math.log(c**2 / a**2))


def limit_load(a: float, b: float, sigma_y: float) -> float:
    """Pressure at which the plastic front reaches the outer wall."""
    return pressure_from_front(b, a, b, sigma_y)


class FrontSolve(NamedTuple):
    c: float
    below_onset: bool


def front_from_pressure(p: float, a: float, b: float, sigma_y: float) -> FrontSolve:
    """Front radius solving pressure_from_front(c) = p by bracketed bisection."""
    onset = pressure_from_front(a, a, b, sigma_y)
    if p <= onset:
        return FrontSolve(a, True)
    p_lim = limit_load(a, b, sigma_y)
    if p > p_lim:
        raise VerifyError(f"pressure {p} GPa beyond limit load {p_lim:.5f} GPa")
    lo, hi = a, b
    tol = 1e-10 * b
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pressure_from_front(mid, a, b, sigma_y) < p:
            lo = mid
        else:
            hi = mid
    return FrontSolve(0.5 * (lo + hi), False)


def to_cylindrical(sigma: np.ndarray, position: np.ndarray):
    """(sigma_r, sigma_theta, sigma_z) of plane-strain tensors at positions."""
    sigma = np.asarray(sigma, dtype=float)
    position = np.asarray(position, dtype=float)
    r = np.hypot(position[..., 0], position[..., 1])
    if np.any(r == 0):
        raise VerifyError("cylindrical components undefined at the origin")
    cth = position[..., 0] / r
    sth = position[..., 1] / r
    s_r = sigma[..., XX] * cth**2 + sigma[..., YY] * sth**2 + 2.0 * sigma[..., XY] * cth * sth
    s_t = sigma[..., XX] * sth**2 + sigma[..., YY] * cth**2 - 2.0 * sigma[..., XY] * cth * sth
    return s_r, s_t, sigma[..., ZZ]


class ErrorNorm(NamedTuple):
    total: float      # sqrt(sum of squared nodal vector errors)
    per_node: float   # total / sqrt(N)


def error_norm(u: np.ndarray, u_ref: np.ndarray) -> ErrorNorm:
    """l2 norm of the nodal displacement error, raw and sqrt(N)-normalized."""
    diff = np.asarray(u, dtype=float) - np.asarray(u_ref, dtype=float)
    total = float(np.sqrt(np.sum(diff**2)))
    return ErrorNorm(total, total / math.sqrt(len(diff)))


# ---------------------------------------------------------------------------
# Plastic-front extraction
# ---------------------------------------------------------------------------

MIN_FIT_NODES = 20  # 5 x 4 fitted parameters per regime


@dataclass(frozen=True)
class FrontFit:
    """Fitted radial profile C1/r + C2/r^2 + C3*log(1/r) + C4 for one regime."""

    constants: np.ndarray
    quantity: str
    regime: str
    r_range: tuple[float, float]

    def __call__(self, r):
        return fit_profile_eval(self.constants, r)


def fit_profile_eval(constants: np.ndarray, r):
    r = np.asarray(r, dtype=float)
    c1, c2, c3, c4 = constants
    return c1 / r + c2 / r**2 + c3 * np.log(1.0 / r) + c4


def fit_profile(r: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Least-squares constants via column-scaled normal equations."""
    r = np.asarray(r, dtype=float)
    design = np.stack([1.0 / r, 1.0 / r**2, np.log(1.0 / r), np.ones_like(r)], axis=1)
    scale = np.sqrt(np.sum(design**2, axis=0))
    scale[scale == 0] = 1.0
    ds = design / scale
    coef = np.linalg.solve(ds.T @ ds, ds.T @ np.asarray(values, dtype=float))
    return coef / scale


@dataclass(frozen=True)
class FrontExtraction:
    c: float
    fit_plastic: FrontFit
    fit_elastic: FrontFit


def front_from_profiles(
    r_plastic: np.ndarray,
    q_plastic: np.ndarray,
    r_elastic: np.ndarray,
    q_elastic: np.ndarray,
    quantity: str = "hoop_stress_gpa",
) -> FrontExtraction:
    """Intersect regime-wise profile fits near the class boundary."""
    if len(r_plastic) < MIN_FIT_NODES or len(r_elastic) < MIN_FIT_NODES:
        raise VerifyError(
            "front not localized: "
            f"{len(r_plastic)} plastic / {len(r_elastic)} elastic nodes, "
            f"need {MIN_FIT_NODES} each"
        )
    cp = fit_profile(r_plastic, q_plastic)
    ce = fit_profile(r_elastic, q_elastic)
    fit_p = FrontFit(cp, quantity, "plastic", (float(r_plastic.min()), float(r_plastic.max())))
    fit_e = FrontFit(ce, quantity, "elastic", (float(r_elastic.min()), float(r_elastic.max())))

    def gap(r):
        return fit_profile_eval(cp, r) - fit_profile_eval(ce, r)

    r_all_min = min(r_plastic.min(), r_elastic.min())
    r_all_max = max(r_plastic.max(), r_elastic.max())
    mid = 0.5 * (float(r_plastic.max()) + float(r_elastic.min()))
    width = max(abs(float(r_plastic.max()) - float(r_elastic.min())), (r_all_max - r_all_min) / 50.0)
    lo = hi = None
    while width <= (r_all_max - r_all_min):
        cand_lo = max(mid - width, r_all_min)
        cand_hi = min(mid + width, r_all_max)
        if gap(cand_lo) * gap(cand_hi) <= 0:
            lo, hi = cand_lo, cand_hi
            break
        width *= 1.6
    if lo is None:
        raise VerifyError("front not localized: fitted profiles do not cross")
    tol = 1e-12 * r_all_max
    glo = gap(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = gap(mid)
        if glo * gm <= 0:
            hi = mid
        else:
            lo, glo = mid, gm
    return FrontExtraction(0.5 * (lo + hi), fit_p, fit_e)


def extract_front(
    positions: np.ndarray,
    epbar: np.ndarray,
    sigma: np.ndarray,
    angle_range: tuple[float, float] | None = None,
) -> FrontExtraction:
    """Front radius from node states: plastic class epbar > 0, elastic epbar = 0."""
    positions = np.asarray(positions, dtype=float)
    r = np.hypot(positions[:, 0], positions[:, 1])
    if angle_range is not None:
        theta = np.arctan2(positions[:, 1], positions[:, 0])
        sel = (theta >= angle_range[0]) & (theta < angle_range[1])
    else:
        sel = np.ones(len(r), dtype=bool)
    _, s_t, _ = to_cylindrical(sigma, positions)
    plastic = sel & (np.asarray(epbar) > 0)
    elastic = sel & (np.asarray(epbar) == 0)
    return front_from_profiles(r[plastic], s_t[plastic], r[elastic], s_t[elastic])


@dataclass(frozen=True)
class SegmentFront:
    angle_lo: float
    angle_hi: float
    c: float
    ok: bool
    message: str = ""


def front_shape(
    positions: np.ndarray,
    epbar: np.ndarray,
    sigma: np.ndarray,
    n_seg: int = 20,
    angle_span: tuple[float, float] = (0.0, math.pi / 2.0),
) -> list[SegmentFront]:
    """Per-segment front radii over equal angular segments.

    Segments with too few nodes in either regime are flagged, not failed.
    """
    out = []
    edges = np.linspace(angle_span[0], angle_span[1], n_seg + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        try:
            got = extract_front(positions, epbar, sigma, angle_range=(lo, hi))
            out.append(SegmentFront(float(lo), float(hi), got.c, True))
        except VerifyError as exc:
            out.append(SegmentFront(float(lo), float(hi), math.nan, False, str(exc)))
    return out
