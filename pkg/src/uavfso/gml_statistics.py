"""Distribution of the geometric-and-misalignment loss ``h_g``.

With ``A0`` and ``t`` frozen at the mean state, ``h_g = A0 exp(-2 u^2 / (t w^2))``
is a monotone transform of the misalignment ``u``. Closed-form densities and
distribution functions follow for each misalignment law. Densities are
evaluated through ``s = ln(A0 / h)`` so that neither endpoint loses precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .conditional_gml import GmlApprox
from .fluctuation_models import (
    Degenerate,
    HalfNormal,
    Hoyt,
    MisalignmentDist,
    UniformU,
)
from .special_math import gaussian_q, marcum_q1, marcum_q1_complement


@dataclass(frozen=True)
class GmlDist:
    """Analytical law of ``h_g`` on ``(h_lo, h_hi]``.

    ``varpi`` is NaN for the uniform law (its shape is set by ``alpha1``)
    and infinite for the degenerate law.
    """

    approx: GmlApprox
    mis: MisalignmentDist
    varpi: float
    h_lo: float
    h_hi: float
    alpha1: float = math.nan

    @property
    def a0(self) -> float:
        return self.approx.a0

    @property
    def h1(self) -> float:
        return self.h_lo

    @property
    def q(self) -> float:
        if isinstance(self.mis, Hoyt):
            return self.mis.q
        return 0.0 if isinstance(self.mis, HalfNormal) else math.nan

    @property
    def omega_total(self) -> float:
        if isinstance(self.mis, Hoyt):
            return self.mis.omega_total
        if isinstance(self.mis, HalfNormal):
            return self.mis.lambda1
        return math.nan


def gml_dist(approx: GmlApprox, mis: MisalignmentDist) -> GmlDist:
    """Attach a misalignment law to the closed-form GML approximation."""
    tw2 = approx.beam_area
    a0 = approx.a0
    if isinstance(mis, Hoyt):
        q = mis.q
        varpi = (1.0 + q * q) * tw2 / (4.0 * q * mis.omega_total)
        return GmlDist(approx, mis, varpi, 0.0, a0)
    if isinstance(mis, HalfNormal):
        return GmlDist(approx, mis, tw2 / (4.0 * mis.lambda1), 0.0, a0)
    if isinstance(mis, UniformU):
        if mis.u_max == 0.0:
            return GmlDist(approx, Degenerate(), math.inf, a0, a0)
        h1 = a0 * math.exp(-2.0 * mis.u_max ** 2 / tw2)
        alpha1 = math.sqrt(tw2 / (8.0 * mis.u_max ** 2))
        return GmlDist(approx, mis, math.nan, h1, a0, alpha1)
    if isinstance(mis, Degenerate):
        return GmlDist(approx, mis, math.inf, a0, a0)
    raise TypeError(f"unknown misalignment law {type(mis).__name__}")


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def pdf_u(d: MisalignmentDist, u):
    """Density of the misalignment ``u`` (per metre)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u >= 0
    if isinstance(d, Hoyt):
        q, om = d.q, d.omega_total
        k = (1.0 + q * q) / (q * om)
        x = (1.0 - q ** 4) * u * u / (4.0 * q * q * om)
        # exp(-(1+q^2)^2 u^2/(4 q^2 Om)) I0(x) folded into one exponent with i0e
        expo = -(1.0 + q * q) * u * u / (2.0 * om)
        out = np.where(pos, k * u * np.exp(expo) * special.i0e(x), 0.0)
    elif isinstance(d, HalfNormal):
        lam = d.lambda1
        out = np.where(
            pos, math.sqrt(2.0 / (math.pi * lam)) * np.exp(-u * u / (2.0 * lam)), 0.0
        )
    elif isinstance(d, UniformU):
        if d.u_max > 0:
            out = np.where(pos & (u <= d.u_max), 1.0 / d.u_max, 0.0)
    elif isinstance(d, Degenerate):
        raise ValueError("the degenerate law has no density")
    else:
        raise TypeError(f"unknown misalignment law {type(d).__name__}")
    return _out(out)


def _log_ratio(g: GmlDist, h):
    """``s = ln(A0 / h)`` and the mask of points strictly inside the support."""
    h = np.asarray(h, dtype=float)
    inside = (h > g.h_lo) & (h < g.h_hi) if g.h_lo > 0 else (h > 0) & (h < g.h_hi)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        hh = np.where(inside, h, g.a0)
        # log1p keeps precision near A0; the log difference avoids a0 / h overflowing
        s = np.where(hh > 0.5 * g.a0, -np.log1p((hh - g.a0) / g.a0), math.log(g.a0) - np.log(hh))
        s = np.where(inside, s, np.nan)
    return h, s, inside


def pdf_hg(g: GmlDist, h):
    """Density of ``h_g``; zero outside the open support.

    Parameters
    ----------
    g : GmlDist
    h : float or array_like

    Notes
    -----
    The Hoyt form is evaluated as
    ``(varpi/A0) exp(s (1 - q varpi)) i0e((1 - q^2) varpi s / (2q))`` with
    ``s = ln(A0/h)``; this is the product of the power law and the Bessel
    factor without overflow.
    """
    h, s, inside = _log_ratio(g, h)
    a0 = g.a0
    mis = g.mis
    out = np.zeros_like(h)
    if isinstance(mis, Degenerate):
        return _out(out)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if isinstance(mis, Hoyt):
            q, w = mis.q, g.varpi
            x = (1.0 - q * q) * w * s / (2.0 * q)
            val = (w / a0) * np.exp(s * (1.0 - q * w)) * special.i0e(np.abs(x))
        elif isinstance(mis, HalfNormal):
            w = g.varpi
            val = (
                math.sqrt(w) / (math.sqrt(math.pi) * a0)
                / np.sqrt(s)
                * np.exp(-s * (w - 1.0))
            )
        else:
            val = g.alpha1 / (h * np.sqrt(s))
    out = np.where(inside, val, 0.0)
    return _out(out)


def _misalignment_at(g: GmlDist, s):
    """``u`` at which ``h_g = A0 exp(-s)``."""
    return np.sqrt(0.5 * g.approx.beam_area * s)


def _hoyt_cdf_scalar(q, g_arg):
    if math.isinf(g_arg):
        # h below the smallest normal float: ln(A0/h) overflowed
        return 0.0
    if q == 1.0:
        return math.exp(-0.5 * g_arg * g_arg)
    a = (1.0 + q) * g_arg / (2.0 * q)
    b = (1.0 - q) * g_arg / (2.0 * q)
    # 1 - Q1(a, b) + Q1(b, a) with a > b; both pieces kept cancellation-free
    return marcum_q1_complement(a, b) + marcum_q1(b, a)


def cdf_hg(g: GmlDist, h):
    """Distribution function ``P(h_g <= h)``.

    Returns 0 at or below the lower end of the support and 1 at or above ``A0``.
    """
    h = np.asarray(h, dtype=float)
    out = np.where(h >= g.h_hi, 1.0, 0.0)
    mis = g.mis
    if isinstance(mis, Degenerate):
        return _out(out)
    _, s, inside = _log_ratio(g, h)
    if not np.any(inside):
        return _out(out)
    si = s[inside]
    if isinstance(mis, Hoyt):
        q = mis.q
        if q == 1.0:
            vals = np.exp(-g.varpi * si)
        else:
            garg = np.sqrt((1.0 + q * q) / mis.omega_total * 0.5 * g.approx.beam_area * si)
            vals = np.array([_hoyt_cdf_scalar(q, x) for x in garg])
    elif isinstance(mis, HalfNormal):
        vals = 2.0 * gaussian_q(np.sqrt(g.approx.beam_area * si / (2.0 * mis.lambda1)))
    else:
        vals = 1.0 - _misalignment_at(g, si) / mis.u_max
    out[inside] = np.clip(vals, 0.0, 1.0)
    return _out(out)


def expectation(g: GmlDist, func, epsabs=1e-12, epsrel=1e-10) -> float:
    """``E[func(h_g)]`` for a smooth ``func``.

    The integral is taken over the misalignment ``u`` (equivalently over
    ``sqrt(s)``), which removes the endpoint singularities of the density of
    ``h_g``.
    """
    a0 = g.a0
    mis = g.mis
    if isinstance(mis, Degenerate):
        return float(func(a0))
    k = 2.0 / g.approx.beam_area

    def integrand(u):
        return float(func(a0 * math.exp(-k * u * u))) * float(pdf_u(mis, u))

    if isinstance(mis, UniformU):
        upper = mis.u_max
    else:
        # beyond 40 standard deviations the density is below double precision
        upper = 40.0 * math.sqrt(mis.second_moment)
    val, _ = integrate.quad(integrand, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=200)
    return val
