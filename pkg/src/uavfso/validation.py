"""Self-check suite behind ``uavfso validate``.

Each check compares a library result against an independent computation and
returns a :class:`Check`. A mutation hook deliberately corrupts one building
block so the suite can demonstrate that it detects the fault.
"""

from __future__ import annotations

import contextlib
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import integrate, stats

from . import fluctuation_models, gml_statistics, special_math
from .conditional_gml import gml_bounds, gml_exact
from .fluctuation_models import Degenerate, Hoyt
from .geometry import MeanState, Orientation, Position3, footprint_center
from .gml_statistics import cdf_hg, pdf_hg
from .link_performance import (
    ergodic_rate,
    ergodic_rate_asymptotic,
    outage,
    outage_asymptotic,
)
from .monte_carlo import cdf_interpolant, run, sup_distance
from .scenario import SimConfig, load, presets


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.limit)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<44s} {self.value:.3e}  (limit {self.limit:.1e})"


def _patched(module, attr, wrap) -> contextlib.AbstractContextManager:
    @contextlib.contextmanager
    def cm():
        original = getattr(module, attr)
        setattr(module, attr, wrap(original))
        try:
            yield
        finally:
            setattr(module, attr, original)

    return cm()


def _scale(factor):
    def wrap(f):
        def inner(*args, **kwargs):
            return factor * f(*args, **kwargs)

        return inner

    return wrap


def _scale_c2(f):
    def inner(*args, **kwargs):
        c = f(*args, **kwargs)
        return fluctuation_models.LinearCoeffs(
            c.c1, 1.05 * c.c2, c.c3, c.c4, c.c5, c.c6, c.c7
        )

    return inner


MUTATIONS: dict[str, Callable[[], contextlib.AbstractContextManager]] = {
    "erf": lambda: _patched(special_math, "erf", _scale(1.001)),
    "marcum": lambda: _patched(gml_statistics, "marcum_q1", _scale(1.001)),
    "linear-c2": lambda: _patched(fluctuation_models, "linear_coeffs", _scale_c2),
}


def _erf_series(x: float) -> float:
    total, term, k = 0.0, x, 0
    while abs(term) > 1e-18:
        total += term / (2 * k + 1)
        k += 1
        term *= -x * x / k
    return 2.0 / math.sqrt(math.pi) * total


def _special_checks() -> Iterator[Check]:
    yield Check("erf(0.5) vs Maclaurin series", abs(special_math.erf(0.5) - _erf_series(0.5)), 1e-15)
    worst = 0.0
    for a, b in [(2.0, 1.0), (1.0, 2.0), (8.0, 7.0), (7.0, 8.0), (20.0, 3.0), (3.0, 20.0)]:
        ref = stats.ncx2.sf(b * b, 2, a * a)
        worst = max(worst, abs(gml_statistics.marcum_q1(a, b) - ref) / ref)
    yield Check("Marcum Q1 vs noncentral chi-square", worst, 1e-8)


def _geometry_checks() -> Iterator[Check]:
    mean = MeanState.from_spherical(500.0, math.pi / 8, 5 * math.pi / 8)
    fp = footprint_center(mean.mu_r, mean.mu_omega)
    yield Check("pointing consistency |b| / L", fp.u / 500.0, 1e-9)
    c = fluctuation_models.linear_coeffs(mean)
    d = 1e-6
    th, ph = mean.mu_omega.theta, mean.mu_omega.phi
    up = footprint_center(mean.mu_r, Orientation(th + d, ph)).b.y
    dn = footprint_center(mean.mu_r, Orientation(th - d, ph)).b.y
    fd = (up - dn) / (2 * d)
    yield Check("c2 vs central difference (rel)", abs(c.c2 - fd) / abs(fd), 1e-3)


def _sandwich_check() -> Iterator[Check]:
    worst = -math.inf
    for alpha in np.linspace(-math.pi / 4, math.pi / 4, 5):
        mean = MeanState.from_spherical(500.0, alpha, math.pi / 2)
        for u in np.linspace(0.0, 0.2, 5):
            r = mean.mu_r + Position3(0.0, u / math.sqrt(2), u / math.sqrt(2))
            h = gml_exact(r, mean.mu_omega, 0.3, 0.1)
            low, upp = gml_bounds(r, mean.mu_omega, 0.3, 0.1)
            worst = max(worst, low - h, h - upp)
    yield Check("bound sandwich violation", max(worst, 0.0), 2e-9)


def _distribution_checks(n_trials: int) -> Iterator[Check]:
    for name in presets():
        sc = load(name)
        g = sc.dist
        if isinstance(g.mis, Degenerate):
            continue
        # closed-form CDF against the integrated density, mid-support
        h = 0.5 * (g.h_lo + g.a0)
        s_h = math.log(g.a0 / h)
        s_max = math.log(g.a0 / g.h_lo) if g.h_lo > 0 else math.inf

        def dens(x):
            hx = g.a0 * math.exp(-x * x)
            # the x-space density vanishes once h underflows
            return 2.0 * x * pdf_hg(g, hx) * hx if hx > 0 else 0.0

        upper = math.sqrt(s_max) if math.isfinite(s_max) else np.inf
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            num, _ = integrate.quad(dens, math.sqrt(s_h), upper, limit=200, epsabs=1e-12)
        yield Check(f"{name}: CDF vs integrated PDF", abs(num - cdf_hg(g, h)), 1e-6)
        if name.startswith(("fig4", "fig5", "fig6", "fig7")):
            emp = run(sc, SimConfig(n_trials=n_trials, seed=sc.sim.seed, mode="linearized_u"))
            yield Check(f"{name}: sup|ECDF - CDF|", sup_distance(emp, cdf_interpolant(g)), 0.005)


def _link_checks() -> Iterator[Check]:
    sc = load("fig8_ig")
    g = sc.dist
    if isinstance(g.mis, Hoyt) and 0 < g.mis.q < 1:
        lb = sc.link(60.0)
        exact = outage(g, lb).p_out
        yield Check("fig8_ig: asymptotic outage at 60 dB (rel)",
                    abs(outage_asymptotic(g, lb) - exact) / exact, 0.10)
    for name in ("fig9_ig", "fig9_cg", "fig9_cu"):
        sc = load(name)
        lb = sc.link(80.0)
        r_max, dr = ergodic_rate_asymptotic(sc.dist, lb)
        yield Check(f"{name}: rate - (r_max - delta_r) at 80 dB",
                    abs(ergodic_rate(sc.dist, lb) - (r_max - dr)), 0.01)


def run_suite(mutation: str | None = None, n_trials: int = 1_000_000) -> list[Check]:
    """Run every check, optionally under one of :data:`MUTATIONS`."""
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}; choose from {sorted(MUTATIONS)}")
    ctx = MUTATIONS[mutation]() if mutation else contextlib.nullcontext()
    with ctx:
        checks = []
        for group in (_special_checks(), _geometry_checks(), _sandwich_check(),
                      _distribution_checks(n_trials), _link_checks()):
            checks.extend(group)
    return checks
