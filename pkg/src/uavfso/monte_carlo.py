"""Monte Carlo oracle for the GML and link metrics.

Trials are generated in fixed-size blocks. Each block draws from its own
Philox counter stream keyed by ``(seed, stream, block index)``, so the sample
set depends only on the seed and trial count, never on the number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .atmosphere import TurbulenceParams
from .conditional_gml import gml_approx, gml_exact_batch
from .fluctuation_models import (
    CorrelatedGaussian,
    CorrelatedUniform,
    FluctuationModel,
    IndependentGaussian,
    linear_coeffs,
)
from .geometry import MeanState, Orientation, Position3, footprint_center_arrays
from .gml_statistics import GmlDist, cdf_hg
from .link_performance import LinkBudget
from .scenario import Scenario, SimConfig

BLOCK = 1 << 16

STREAM_STATE = 0
STREAM_TURBULENCE = 1

SQRT3 = math.sqrt(3.0)


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    """Independent generator for one ``(seed, stream, block)`` triple."""
    key = int(seed) | (((int(stream) << 48) | int(block)) << 64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class EmpiricalDist:
    """Sorted samples with their right-continuous empirical CDF."""

    sorted_samples: np.ndarray
    n: int
    n_parallel: int = 0

    @classmethod
    def from_samples(cls, x, n_parallel: int = 0) -> "EmpiricalDist":
        x = np.sort(np.asarray(x, dtype=float))
        x.setflags(write=False)
        return cls(x, x.size, n_parallel)

    def ecdf(self, x):
        out = np.searchsorted(self.sorted_samples, np.asarray(x, dtype=float), side="right")
        out = out / self.n
        return float(out) if np.ndim(out) == 0 else out

    @property
    def mean(self) -> float:
        return float(np.mean(self.sorted_samples))

    @property
    def variance(self) -> float:
        return float(np.var(self.sorted_samples, ddof=1)) if self.n > 1 else 0.0

    def write_binary(self, path) -> None:
        """Raw samples as little-endian float64."""
        self.sorted_samples.astype("<f8").tofile(path)


def sample_perturbations(model: FluctuationModel, rng: np.random.Generator, n: int):
    """Draw ``(eps_r, eps_omega)`` with shapes ``(n, 3)`` and ``(n, 2)``."""
    if isinstance(model, IndependentGaussian):
        z = rng.standard_normal((n, 5))
        return z[:, :3] * model.sigma_r, z[:, 3:] * model.sigma_omega
    if isinstance(model, CorrelatedGaussian):
        z = rng.standard_normal((n, 5))
        delta = model.zeta * rng.standard_normal(n)
        eps_r = z[:, :3] * model.base.sigma_r + delta[:, None] * np.asarray(model.v)
        eps_o = z[:, 3:] * model.base.sigma_omega + delta[:, None] * np.asarray(model.tau)
        return eps_r, eps_o
    if isinstance(model, CorrelatedUniform):
        half = SQRT3 * model.xi
        delta = rng.uniform(-half, half, n)
        return delta[:, None] * np.asarray(model.v), delta[:, None] * np.asarray(model.tau)
    raise TypeError(f"unknown fluctuation model {type(model).__name__}")


def sample_state(model: FluctuationModel, mean: MeanState, rng: np.random.Generator):
    """One perturbed pose ``(r, omega)`` around the mean state."""
    eps_r, eps_o = sample_perturbations(model, rng, 1)
    r = mean.mu_r + Position3(*(float(x) for x in eps_r[0]))
    omega = Orientation.wrapped(
        mean.mu_omega.theta + float(eps_o[0, 0]), mean.mu_omega.phi + float(eps_o[0, 1])
    )
    return r, omega


def sample_gamma_gamma(tp: TurbulenceParams, rng: np.random.Generator, n: int | None = None):
    """Unit-mean Gamma-Gamma fades: product of Gamma(alpha, 1/alpha) and Gamma(beta, 1/beta)."""
    size = 1 if n is None else n
    x = np.ones(size) if math.isinf(tp.alpha) else rng.gamma(tp.alpha, 1.0 / tp.alpha, size)
    y = np.ones(size) if math.isinf(tp.beta) else rng.gamma(tp.beta, 1.0 / tp.beta, size)
    out = x * y
    return float(out[0]) if n is None else out


def _conditional_gml(sc: Scenario, eps_r, eps_o, mode: str):
    """``h_g`` per trial and the number of beam-parallel trials."""
    mean = sc.mean
    approx = sc.approx
    if mode == "linearized_u":
        coeffs = linear_coeffs(mean)
        by, bz = coeffs.offset(eps_r, eps_o)
        return gml_approx(np.hypot(by, bz), approx), 0
    r = mean.mu_r.as_array() + eps_r
    theta = mean.mu_omega.theta + eps_o[:, 0]
    phi = mean.mu_omega.phi + eps_o[:, 1]
    by, bz, parallel = footprint_center_arrays(r[:, 0], r[:, 1], r[:, 2], theta, phi)
    if mode == "approx_formula":
        u = np.where(parallel, 0.0, np.hypot(by, bz))
        h = np.where(parallel, 0.0, gml_approx(u, approx))
    else:
        h = gml_exact_batch(by, bz, theta, phi, sc.w_L, sc.beam.lens_radius)
    return h, int(parallel.sum())


def _simulate_block(args):
    sc, seed, block, n, mode, turbulence = args
    rng = block_rng(seed, STREAM_STATE, block)
    eps_r, eps_o = sample_perturbations(sc.model, rng, n)
    h, n_par = _conditional_gml(sc, eps_r, eps_o, mode)
    if turbulence:
        h = h * sample_gamma_gamma(sc.turbulence, block_rng(seed, STREAM_TURBULENCE, block), n)
    return h, n_par


def _workers(cfg: SimConfig) -> int:
    env = os.environ.get("FSO_WORKERS")
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ValueError(f"FSO_WORKERS must be an integer, got {env!r}") from None
        if w < 1:
            raise ValueError("FSO_WORKERS must be >= 1")
        return w
    return cfg.workers


def run(scenario: Scenario, cfg: SimConfig | None = None) -> EmpiricalDist:
    """Simulate ``cfg.n_trials`` channel gains ``h_a h_g`` (``h_a = 1`` without turbulence).

    Trials whose beam is parallel to the lens record zero gain and are
    counted in ``EmpiricalDist.n_parallel``.
    """
    cfg = cfg or scenario.sim
    n = int(cfg.n_trials)
    blocks = [
        (scenario, cfg.seed, b, min(BLOCK, n - b * BLOCK), cfg.mode, cfg.include_turbulence)
        for b in range((n + BLOCK - 1) // BLOCK)
    ]
    workers = min(_workers(cfg), len(blocks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_block, blocks))
    else:
        parts = [_simulate_block(b) for b in blocks]
    h = np.concatenate([p[0] for p in parts])
    return EmpiricalDist.from_samples(h, sum(p[1] for p in parts))


def empirical_outage(dist: EmpiricalDist, lb: LinkBudget) -> float:
    """Fraction of samples with ``eta h_p h <= sqrt(gamma_thr / gamma_bar)``."""
    return dist.ecdf(lb.threshold_gain)


def empirical_rate(dist: EmpiricalDist, lb: LinkBudget) -> tuple[float, float]:
    """Sample ergodic rate and its standard error."""
    r = 0.5 * np.log1p(lb.rate_snr * dist.sorted_samples ** 2) / math.log(2.0)
    se = float(np.std(r, ddof=1) / math.sqrt(dist.n)) if dist.n > 1 else 0.0
    return float(np.mean(r)), se


def cdf_interpolant(g: GmlDist, n_grid: int = 4001):
    """Fast evaluator of the analytical CDF of ``h_g`` for large sample sets.

    The CDF is tabulated on a grid uniform in ``sqrt(ln(A0/h))`` (uniform in
    misalignment) and linearly interpolated.
    """
    a0 = g.a0
    if g.h_lo > 0:
        x_max = math.sqrt(math.log(a0 / g.h_lo))
    else:
        # far enough in the tail that the CDF is below 1e-12
        x_max = 1.0
        while cdf_hg(g, a0 * math.exp(-x_max * x_max)) > 1e-12 and x_max < 1e3:
            x_max *= 1.5
    x = np.linspace(0.0, x_max, n_grid)
    h = a0 * np.exp(-x * x)[::-1]
    f = np.asarray(cdf_hg(g, h), dtype=float)
    f[-1] = 1.0
    f = np.maximum.accumulate(f)

    def evaluate(q):
        q = np.asarray(q, dtype=float)
        out = np.interp(q, h, f, left=0.0, right=1.0)
        out = np.where(q < h[0], 0.0 if g.h_lo > 0 else out, out)
        return out

    return evaluate


def sup_distance(dist: EmpiricalDist, cdf) -> float:
    """Kolmogorov sup-norm between an ECDF and a continuous CDF callable."""
    x, first = np.unique(dist.sorted_samples, return_index=True)
    f = np.asarray(cdf(x), dtype=float)
    below = first / dist.n
    upto = np.append(first[1:], dist.n) / dist.n
    return float(max(np.max(np.abs(upto - f)), np.max(np.abs(f - below))))
