"""Outage probability, diversity gain and ergodic rate of the FSO link.

The received SNR is ``eta^2 h_p^2 h_g^2 gamma_bar`` with the turbulence fade
set to its unit mean, so every metric is a functional of the law of ``h_g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fluctuation_models import Degenerate, HalfNormal, Hoyt, UniformU
from .gml_statistics import GmlDist, cdf_hg, expectation

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LinkBudget:
    """Responsivity ``eta``, path loss ``h_p``, transmit SNR and SNR threshold."""

    eta: float
    h_p: float
    gamma_bar: float
    gamma_thr: float

    def __post_init__(self):
        for name in ("eta", "h_p", "gamma_bar", "gamma_thr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def threshold_gain(self) -> float:
        """Smallest ``h_g`` that keeps the link out of outage."""
        return math.sqrt(self.gamma_thr) / (self.eta * self.h_p * math.sqrt(self.gamma_bar))

    @property
    def rate_snr(self) -> float:
        """``c`` in ``R = 1/2 E[log2(1 + c h_g^2)]``."""
        return math.e / (2.0 * math.pi) * self.eta ** 2 * self.h_p ** 2 * self.gamma_bar


@dataclass(frozen=True)
class OutageResult:
    p_out: float
    diversity_gain: float
    asymptote_constants: tuple[float, float] | None = None
    gamma_crt: float | None = None


def diversity_gain(g: GmlDist) -> float:
    """High-SNR slope of the outage curve (infinite for bounded fluctuations)."""
    mis = g.mis
    tw2 = g.approx.beam_area
    if isinstance(mis, Hoyt):
        if mis.q == 1.0:
            return 0.5 * g.varpi
        return (1.0 + mis.q ** 2) * tw2 / (8.0 * mis.omega_total)
    if isinstance(mis, HalfNormal):
        return 0.5 * g.varpi
    return math.inf


def asymptote_constants(g: GmlDist, lb: LinkBudget) -> tuple[float, float]:
    """``(a_t, b_t)`` of the high-SNR outage expression for a Hoyt law."""
    mis = g.mis
    if not (isinstance(mis, Hoyt) and 0.0 < mis.q < 1.0):
        raise ValueError("the outage asymptote needs a Hoyt law with 0 < q < 1")
    q, om = mis.q, mis.omega_total
    d = diversity_gain(g)
    b_t = math.sqrt(lb.gamma_thr) / (lb.eta * lb.h_p * g.a0)
    a_t = (
        2.0 * math.sqrt(2.0 * om) * b_t ** (2.0 * d)
        / math.sqrt(math.pi * (1.0 - q ** 4) * g.approx.beam_area)
    )
    return a_t, b_t


def critical_snr(g: GmlDist, lb: LinkBudget) -> float:
    """Transmit SNR above which a bounded-fluctuation link never drops out."""
    if not isinstance(g.mis, UniformU):
        raise ValueError("a critical SNR exists only for uniform fluctuations")
    return lb.gamma_thr / (lb.eta ** 2 * lb.h_p ** 2 * g.h1 ** 2)


def outage(g: GmlDist, lb: LinkBudget) -> OutageResult:
    """Probability that the received SNR falls below ``gamma_thr``."""
    p = float(cdf_hg(g, lb.threshold_gain))
    d = diversity_gain(g)
    consts = None
    crt = None
    if isinstance(g.mis, Hoyt) and 0.0 < g.mis.q < 1.0:
        consts = asymptote_constants(g, lb)
    if isinstance(g.mis, UniformU):
        crt = critical_snr(g, lb)
    return OutageResult(p, d, consts, crt)


def outage_asymptotic(g: GmlDist, lb: LinkBudget) -> float:
    """High-SNR outage ``a_t gamma_bar^-d [ln(gamma_bar / b_t^2)]^-1/2``.

    Raises
    ------
    ValueError
        If the law is not Hoyt with ``0 < q < 1``, or ``gamma_bar <= b_t^2 e``.
    """
    a_t, b_t = asymptote_constants(g, lb)
    ratio = lb.gamma_bar / (b_t * b_t)
    if not ratio > math.e:
        raise ValueError("gamma_bar is too small for the high-SNR expression")
    d = diversity_gain(g)
    return a_t * lb.gamma_bar ** (-d) / math.sqrt(math.log(ratio))


def ergodic_rate(g: GmlDist, lb: LinkBudget, epsabs=1e-10, epsrel=1e-10) -> float:
    """Achievable rate ``1/2 E[log2(1 + c h_g^2)]`` in bits/symbol."""
    c = lb.rate_snr
    return 0.5 * expectation(
        g, lambda h: math.log1p(c * h * h) / LN2, epsabs=epsabs, epsrel=epsrel
    )


def ergodic_rate_asymptotic(g: GmlDist, lb: LinkBudget) -> tuple[float, float]:
    """``(r_max, delta_r)``: rate without misalignment and the misalignment penalty.

    At high SNR the ergodic rate approaches ``r_max - delta_r`` with
    ``delta_r = 2 E[u^2] / (t w_L^2 ln 2)``.
    """
    c = lb.rate_snr
    r_max = 0.5 * math.log2(c * g.a0 * g.a0)
    mis = g.mis
    m2 = 0.0 if isinstance(mis, Degenerate) else mis.second_moment
    delta_r = 2.0 * m2 / (g.approx.beam_area * LN2)
    return r_max, delta_r


def gamma_thr_from_rate(r_thr: float) -> float:
    """SNR threshold supporting rate ``r_thr`` bits/symbol: ``(2 pi/e) 2^(2 r_thr - 1)``."""
    if not r_thr > 0:
        raise ValueError("r_thr must be positive")
    return 2.0 * math.pi / math.e * 2.0 ** (2.0 * r_thr - 1.0)
