"""Conditional geometric-and-misalignment loss for a tilted Gaussian beam.

Three levels of fidelity for the fraction of beam power landing on the lens:

* :func:`gml_exact` integrates the oblique power density over the lens disk;
* :func:`gml_bounds` gives two axis-aligned disk integrals bracketing it;
* :func:`gml_approx` is the closed form ``A0 exp(-2 u^2 / (t w^2))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import (
    EPS_PARALLEL,
    BeamParallelError,
    Orientation,
    Position3,
    footprint_center,
)
from .special_math import Tolerance, ToleranceNotReached, erf

T_RULES = ("lower", "upper", "arith", "geom")

# gml_exact works to an absolute tolerance of 1e-9 by default
EXACT_TOL = Tolerance(abs_tol=1e-9, rel_tol=1e-9, max_terms=10_000)

_NODES = 64
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_NODES)
_MAX_LEVEL = 5


class FarFieldWarning(UserWarning):
    """The UAV is not far from the lens relative to the footprint offset."""


@dataclass(frozen=True)
class FootprintEllipse:
    """Quadratic form ``rho_y y^2 + 2 rho_yz y z + rho_z z^2`` of the footprint."""

    rho_y: float
    rho_z: float
    rho_yz: float
    rho_min: float
    rho_max: float
    rotation: float

    @classmethod
    def from_orientation(cls, omega: Orientation) -> "FootprintEllipse":
        s2 = _sin2_incidence(omega)
        sp, cp = math.sin(omega.phi), math.cos(omega.phi)
        rho_y = cp * cp + s2
        rho_z = sp * sp
        rho_yz = -cp * sp * math.sin(omega.theta)
        diff = rho_y - rho_z
        if diff != 0.0:
            rotation = 0.5 * math.atan(2.0 * rho_yz / diff)
        else:
            rotation = math.copysign(math.pi / 4, rho_yz) if rho_yz else 0.0
        return cls(rho_y, rho_z, rho_yz, 1.0, 1.0 / s2, rotation)


@dataclass(frozen=True)
class GmlApprox:
    """Parameters of the closed-form GML approximation at a fixed orientation."""

    a0: float
    t1: float
    t2: float
    t: float
    nu1: float
    nu2: float
    w_L: float
    t_rule: str = "geom"

    def __post_init__(self):
        if not 0.0 < self.a0 < 1.0:
            raise ValueError(f"A0 must lie in (0, 1), got {self.a0}")
        if self.t_rule not in T_RULES:
            raise ValueError(f"t_rule must be one of {T_RULES}")

    @property
    def beam_area(self) -> float:
        """Equivalent squared beam width ``t w_L^2``."""
        return self.t * self.w_L * self.w_L


def _sin2_incidence(omega: Orientation) -> float:
    s = math.sin(omega.phi) * math.cos(omega.theta)
    if abs(s) <= EPS_PARALLEL:
        raise BeamParallelError(
            f"beam parallel to the lens plane at theta={omega.theta}, phi={omega.phi}"
        )
    return s * s


def far_field_ok(r: Position3, b: Position3, r0: float) -> bool:
    """Whether the far-field condition behind the oblique power density holds."""
    return r.norm() > 100.0 * max(b.norm(), r0)


def power_density(y, z, r: Position3, omega: Orientation, w_L: float):
    """Beam intensity (per m^2, normalised to unit total power) on the lens plane.

    Emits :class:`FarFieldWarning` when the UAV is closer than 100 times the
    footprint offset; the value is still returned.
    """
    fp = footprint_center(r, omega)
    if not far_field_ok(r, fp.b, 0.0):
        warnings.warn(
            "UAV range is not much larger than the footprint offset",
            FarFieldWarning,
            stacklevel=2,
        )
    ell = FootprintEllipse.from_orientation(omega)
    yt = np.asarray(y, dtype=float) - fp.b.y
    zt = np.asarray(z, dtype=float) - fp.b.z
    q = ell.rho_y * yt * yt + ell.rho_z * zt * zt + 2.0 * ell.rho_yz * yt * zt
    sin_psi = math.sqrt(1.0 / ell.rho_max)
    out = 2.0 * sin_psi / (math.pi * w_L * w_L) * np.exp(-2.0 * q / (w_L * w_L))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# disk quadrature
# ---------------------------------------------------------------------------


def _polar_rule(r0: float, level: int):
    """Tensor Gauss-Legendre nodes on the disk with ``2**level`` panels per axis."""
    n = 2 ** level
    edges_r = np.linspace(0.0, r0, n + 1)
    edges_a = np.linspace(0.0, 2.0 * math.pi, n + 1)

    def panels(edges):
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * _GL_X).ravel()
        w = (half[:, None] * _GL_W).ravel()
        return x, w

    rad, wr = panels(edges_r)
    ang, wa = panels(edges_a)
    y = np.outer(rad, np.cos(ang)).ravel()
    z = np.outer(rad, np.sin(ang)).ravel()
    w = np.outer(wr * rad, wa).ravel()
    return y, z, w


_RULE_CACHE: dict = {}


def _cached_rule(r0: float, level: int):
    key = (r0, level)
    rule = _RULE_CACHE.get(key)
    if rule is None:
        rule = _polar_rule(r0, level)
        if len(_RULE_CACHE) > 64:
            _RULE_CACHE.clear()
        _RULE_CACHE[key] = rule
    return rule


def _disk_integral(form, by, bz, scale, w_L, r0, tol):
    """``scale * int_disk exp(-2 Q(y - by, z - bz) / w_L^2)`` with dyadic refinement."""
    a11, a12, a22 = form
    k = -2.0 / (w_L * w_L)

    def estimate(level):
        y, z, w = _cached_rule(r0, level)
        yt = y - by
        zt = z - bz
        expo = k * (a11 * yt * yt + 2.0 * a12 * yt * zt + a22 * zt * zt)
        return scale * float(np.dot(w, np.exp(expo)))

    prev = estimate(0)
    for level in range(1, _MAX_LEVEL + 1):
        cur = estimate(level)
        if abs(cur - prev) < max(tol.abs_tol, tol.rel_tol * abs(cur)):
            return cur
        prev = cur
    raise ToleranceNotReached(
        f"disk quadrature did not reach {tol.abs_tol} after {_MAX_LEVEL} refinements"
    )


def gml_exact(
    r: Position3,
    omega: Orientation,
    w_L: float,
    r0: float,
    tol: Tolerance = EXACT_TOL,
) -> float:
    """Fraction of beam power collected by a lens of radius ``r0``.

    The oblique power density is integrated over the lens disk in polar
    coordinates with tensor Gauss-Legendre panels, refined dyadically until
    two successive levels agree to ``tol.abs_tol``.

    Raises
    ------
    BeamParallelError
        If the beam is parallel to the lens plane.
    ToleranceNotReached
        If the refinement does not converge.
    """
    fp = footprint_center(r, omega)
    ell = FootprintEllipse.from_orientation(omega)
    scale = 2.0 * math.sqrt(1.0 / ell.rho_max) / (math.pi * w_L * w_L)
    form = (ell.rho_y, ell.rho_yz, ell.rho_z)
    value = _disk_integral(form, fp.b.y, fp.b.z, scale, w_L, r0, tol)
    return min(max(value, 0.0), 1.0)


def _small_rule(r0: float, nodes: int):
    key = ("small", r0, nodes)
    rule = _RULE_CACHE.get(key)
    if rule is None:
        x, w = np.polynomial.legendre.leggauss(nodes)
        rad = 0.5 * r0 * (x + 1.0)
        ang = math.pi * (x + 1.0)
        y = np.outer(rad, np.cos(ang)).ravel()
        z = np.outer(rad, np.sin(ang)).ravel()
        wt = np.outer(0.5 * r0 * w * rad, math.pi * w).ravel()
        rule = _RULE_CACHE[key] = (y, z, wt)
    return rule


def gml_exact_batch(by, bz, theta, phi, w_L: float, r0: float, tol=EXACT_TOL):
    """Vectorised :func:`gml_exact` from footprint centers and orientations.

    Entries with a beam parallel to the lens return 0. Each entry is
    integrated with a 24x24 and a 32x32 tensor rule; entries where the two
    disagree beyond ``tol`` are redone with the adaptive routine.
    """
    by, bz, theta, phi = np.broadcast_arrays(
        *(np.asarray(a, dtype=float).ravel() for a in (by, bz, theta, phi))
    )
    n = by.size
    out = np.zeros(n)
    sp, cp = np.sin(phi), np.cos(phi)
    s = sp * np.cos(theta)
    ok = (np.abs(s) > EPS_PARALLEL) & np.isfinite(by) & np.isfinite(bz)
    s2 = s * s
    a11 = cp * cp + s2
    a22 = sp * sp
    a12 = -cp * sp * np.sin(theta)
    scale = 2.0 * np.abs(s) / (math.pi * w_L * w_L)
    k = -2.0 / (w_L * w_L)
    y0, z0, w0 = _small_rule(r0, 24)
    y1, z1, w1 = _small_rule(r0, 32)
    idx = np.flatnonzero(ok)
    chunk = max(1, 2 ** 20 // y1.size)

    def rule(y, z, w, sel):
        yt = y[None, :] - by[sel, None]
        zt = z[None, :] - bz[sel, None]
        expo = k * (
            a11[sel, None] * yt * yt
            + 2.0 * a12[sel, None] * yt * zt
            + a22[sel, None] * zt * zt
        )
        return scale[sel] * (np.exp(expo) @ w)

    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        coarse = rule(y0, z0, w0, sel)
        fine = rule(y1, z1, w1, sel)
        out[sel] = fine
        bad = np.abs(fine - coarse) >= np.maximum(tol.abs_tol, tol.rel_tol * np.abs(fine))
        for j in sel[bad]:
            out[j] = _disk_integral(
                (a11[j], a12[j], a22[j]), by[j], bz[j], scale[j], w_L, r0, tol
            )
    return np.clip(out, 0.0, 1.0)


def gml_bounds(
    r: Position3,
    omega: Orientation,
    w_L: float,
    r0: float,
    tol: Tolerance = EXACT_TOL,
) -> tuple[float, float]:
    """Lower and upper bounds on :func:`gml_exact`.

    Both bounds place the footprint center at distance ``u`` on the y axis
    and replace the tilted ellipse by an axis-aligned one. The lower bound
    stretches the ellipse across the offset direction, the upper bound along it.
    """
    fp = footprint_center(r, omega)
    s2 = _sin2_incidence(omega)
    scale = 2.0 * math.sqrt(s2) / (math.pi * w_L * w_L)
    low = _disk_integral((1.0, 0.0, s2), fp.u, 0.0, scale, w_L, r0, tol)
    upp = _disk_integral((s2, 0.0, 1.0), fp.u, 0.0, scale, w_L, r0, tol)
    return low, upp


def _t_factor(nu: float) -> float:
    return math.sqrt(math.pi) * erf(nu) / (2.0 * nu * math.exp(-nu * nu))


def gml_approx_params(
    omega_mean: Orientation, w_L: float, r0: float, t_rule: str = "geom"
) -> GmlApprox:
    """Closed-form approximation parameters at the mean orientation.

    Parameters
    ----------
    omega_mean : Orientation
        Orientation at which ``A0`` and ``t`` are frozen.
    w_L, r0 : float
        Beam radius at the receiver and lens radius (m).
    t_rule : {"geom", "arith", "lower", "upper"}
        How ``t`` is picked between ``t1`` and ``t2``.
    """
    if t_rule not in T_RULES:
        raise ValueError(f"t_rule must be one of {T_RULES}, got {t_rule!r}")
    s2 = _sin2_incidence(omega_mean)
    nu1 = r0 / w_L * math.sqrt(math.pi / 2.0)
    nu2 = nu1 * math.sqrt(s2)
    a0 = erf(nu1) * erf(nu2)
    t1 = _t_factor(nu1)
    t2 = _t_factor(nu2) / s2
    t = {
        "lower": t1,
        "upper": t2,
        "arith": 0.5 * (t1 + t2),
        "geom": math.sqrt(t1 * t2),
    }[t_rule]
    return GmlApprox(a0, t1, t2, t, nu1, nu2, w_L, t_rule)


def gml_approx(u, p: GmlApprox):
    """``A0 exp(-2 u^2 / (t w_L^2))``; accepts scalars or arrays of ``u``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("u must be non-negative")
    out = p.a0 * np.exp(-2.0 * u * u / p.beam_area)
    return float(out) if out.ndim == 0 else out
