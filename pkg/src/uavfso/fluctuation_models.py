"""UAV hovering-fluctuation models and the induced misalignment distribution.

Small perturbations of position and orientation move the footprint center
``b`` linearly. The coefficients ``c1..c5`` map independent jitter onto
``(b_y, b_z)``, and ``c6, c7`` map the common wind displacement ``delta``.
The resulting 2x2 covariance fixes the law of ``u = |b|``: Hoyt in general,
one-sided Gaussian for a rank-one (pure wind) covariance, uniform for
bounded wind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .geometry import EPS_PARALLEL, MeanState

# below this axial ratio the Hoyt law is replaced by its one-sided Gaussian limit
Q_FLOOR = 1e-8


def _check_unit(v, name="v"):
    v = tuple(float(c) for c in v)
    if len(v) != 3:
        raise ValueError(f"{name} must have 3 components")
    if abs(math.sqrt(sum(c * c for c in v)) - 1.0) > 1e-12:
        raise ValueError(f"{name} must be a unit vector, |{name}| = {np.linalg.norm(v)}")
    return v


def _check_tau(tau):
    tau = tuple(float(c) for c in tau)
    if len(tau) != 2:
        raise ValueError("tau must have 2 components")
    return tau


def unit(v) -> tuple[float, float, float]:
    """Normalise a 3-vector, e.g. ``unit((3, 1, 2))``."""
    v = np.asarray(v, dtype=float)
    return tuple(float(c) for c in v / np.linalg.norm(v))


@dataclass(frozen=True)
class IndependentGaussian:
    """Independent zero-mean jitter of each position and angle component."""

    sigma_x: float = 0.0
    sigma_y: float = 0.0
    sigma_z: float = 0.0
    sigma_theta: float = 0.0
    sigma_phi: float = 0.0

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "sigma_z", "sigma_theta", "sigma_phi"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def sigma_r(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y, self.sigma_z])

    @property
    def sigma_omega(self) -> np.ndarray:
        return np.array([self.sigma_theta, self.sigma_phi])


@dataclass(frozen=True)
class CorrelatedGaussian:
    """Independent jitter plus a Gaussian wind displacement ``delta ~ N(0, zeta^2)``.

    The wind moves the position by ``delta * v`` and the angles by
    ``delta * tau`` (``tau`` in rad/m).
    """

    base: IndependentGaussian = field(default_factory=IndependentGaussian)
    zeta: float = 0.0
    v: tuple = (1.0, 0.0, 0.0)
    tau: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.zeta >= 0:
            raise ValueError("zeta must be non-negative")
        object.__setattr__(self, "v", _check_unit(self.v))
        object.__setattr__(self, "tau", _check_tau(self.tau))


@dataclass(frozen=True)
class CorrelatedUniform:
    """Wind displacement ``delta ~ U(-sqrt(3) xi, sqrt(3) xi)`` with no other jitter."""

    xi: float = 0.0
    v: tuple = (1.0, 0.0, 0.0)
    tau: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.xi >= 0:
            raise ValueError("xi must be non-negative")
        object.__setattr__(self, "v", _check_unit(self.v))
        object.__setattr__(self, "tau", _check_tau(self.tau))


FluctuationModel = Union[IndependentGaussian, CorrelatedGaussian, CorrelatedUniform]


@dataclass(frozen=True)
class LinearCoeffs:
    """First-order sensitivities of the footprint center.

    ``b_y = e_y + c1 e_x + c2 e_theta`` and
    ``b_z = e_z + c3 e_phi + c4 e_theta + c5 e_x``; for wind alone
    ``(b_y, b_z) = delta (c6, c7)``.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float | None = None
    c7: float | None = None

    def with_wind(self, v, tau) -> "LinearCoeffs":
        vx, vy, vz = v
        t_theta, t_phi = tau
        c6 = vy + vx * self.c1 + t_theta * self.c2
        c7 = vz + vx * self.c5 + t_phi * self.c3 + t_theta * self.c4
        return LinearCoeffs(self.c1, self.c2, self.c3, self.c4, self.c5, float(c6), float(c7))

    @property
    def wind_gain2(self) -> float:
        """``c6^2 + c7^2``."""
        if self.c6 is None:
            raise ValueError("wind coefficients not set; call with_wind first")
        return self.c6 * self.c6 + self.c7 * self.c7

    def offset(self, eps_r, eps_omega):
        """Linearised footprint center for position/angle perturbations.

        ``eps_r`` has shape ``(..., 3)``, ``eps_omega`` shape ``(..., 2)``.
        """
        eps_r = np.asarray(eps_r, dtype=float)
        eps_omega = np.asarray(eps_omega, dtype=float)
        ex, ey, ez = eps_r[..., 0], eps_r[..., 1], eps_r[..., 2]
        et, ep = eps_omega[..., 0], eps_omega[..., 1]
        by = ey + self.c1 * ex + self.c2 * et
        bz = ez + self.c3 * ep + self.c4 * et + self.c5 * ex
        return by, bz


@dataclass(frozen=True)
class Hoyt:
    q: float
    omega_total: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"Hoyt q must lie in (0, 1], got {self.q}")
        if not self.omega_total > 0:
            raise ValueError("Hoyt Omega must be positive")

    @property
    def second_moment(self) -> float:
        return self.omega_total


@dataclass(frozen=True)
class HalfNormal:
    """``u = |N(0, lambda1)|``."""

    lambda1: float

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError("lambda1 must be positive")

    @property
    def second_moment(self) -> float:
        return self.lambda1


@dataclass(frozen=True)
class UniformU:
    """``u ~ U(0, u_max)``."""

    u_max: float

    def __post_init__(self):
        if not self.u_max >= 0:
            raise ValueError("u_max must be non-negative")

    @property
    def second_moment(self) -> float:
        return self.u_max * self.u_max / 3.0


@dataclass(frozen=True)
class Degenerate:
    """No fluctuation: ``u`` is identically zero."""

    @property
    def second_moment(self) -> float:
        return 0.0


MisalignmentDist = Union[Hoyt, HalfNormal, UniformU, Degenerate]


def linear_coeffs(mean: MeanState, v=None, tau=None) -> LinearCoeffs:
    """Sensitivities of the footprint center at the mean state.

    ``c6, c7`` are filled in when the wind direction ``v`` and angular
    coupling ``tau`` are given.
    """
    mx = mean.mu_r.x
    th, ph = mean.mu_omega.theta, mean.mu_omega.phi
    ct, sp = math.cos(th), math.sin(ph)
    if abs(ct) <= EPS_PARALLEL or abs(sp) <= EPS_PARALLEL:
        raise ValueError(
            f"degenerate mean orientation theta={th}, phi={ph}: cos(theta) or sin(phi) ~ 0"
        )
    tt = math.tan(th)
    cot = math.cos(ph) / sp
    coeffs = LinearCoeffs(
        c1=-tt,
        c2=-mx / (ct * ct),
        c3=mx / (sp * sp * ct),
        c4=-mx * cot * tt / ct,
        c5=-cot / ct,
    )
    if v is not None:
        coeffs = coeffs.with_wind(v, tau if tau is not None else (0.0, 0.0))
    return coeffs


def sigma_ig(model: IndependentGaussian, coeffs: LinearCoeffs) -> np.ndarray:
    """Covariance of ``(b_y, b_z)`` under independent jitter."""
    c1, c2, c3, c4, c5 = coeffs.c1, coeffs.c2, coeffs.c3, coeffs.c4, coeffs.c5
    sx2, sy2, sz2 = model.sigma_r ** 2
    st2, sp2 = model.sigma_omega ** 2
    a = sy2 + c1 * c1 * sx2 + c2 * c2 * st2
    b = c1 * c5 * sx2 + c2 * c4 * st2
    d = sz2 + c3 * c3 * sp2 + c4 * c4 * st2 + c5 * c5 * sx2
    return np.array([[a, b], [b, d]])


def sigma_cg(zeta: float, coeffs: LinearCoeffs) -> np.ndarray:
    """Rank-one covariance contributed by Gaussian wind of standard deviation ``zeta``."""
    c6, c7 = coeffs.c6, coeffs.c7
    return zeta * zeta * np.array([[c6 * c6, c6 * c7], [c6 * c7, c7 * c7]])


def sigma_total(model: CorrelatedGaussian, coeffs: LinearCoeffs) -> np.ndarray:
    if coeffs.c6 is None:
        coeffs = coeffs.with_wind(model.v, model.tau)
    return sigma_ig(model.base, coeffs) + sigma_cg(model.zeta, coeffs)


def eig2x2(sigma) -> tuple[float, float, np.ndarray]:
    """Closed-form eigen-decomposition of a symmetric 2x2 matrix.

    Returns ``(lambda1, lambda2, U)`` with ``lambda1 >= lambda2`` and the
    eigenvectors as columns of ``U``.
    """
    a, b, d = float(sigma[0][0]), float(sigma[0][1]), float(sigma[1][1])
    tr = a + d
    disc = math.hypot(a - d, 2.0 * b)
    l1 = 0.5 * (tr + disc)
    l2 = 0.5 * (tr - disc)
    if disc == 0.0:
        return l1, l1, np.eye(2)
    # angle of the major axis; stable for any sign of a - d
    ang = 0.5 * math.atan2(2.0 * b, a - d)
    c, s = math.cos(ang), math.sin(ang)
    return l1, l2, np.array([[c, -s], [s, c]])


def hoyt_from_cov(sigma) -> MisalignmentDist:
    """Law of ``|b|`` for ``b ~ N(0, sigma)``."""
    l1, l2, _ = eig2x2(sigma)
    if l1 <= 0.0:
        return Degenerate()
    # a rank-one matrix leaves a rounding-level second eigenvalue
    if l2 <= 8.0 * np.finfo(float).eps * l1:
        l2 = 0.0
    if l1 == l2:
        return Hoyt(1.0, l1 + l2, l1, l2)
    q = math.sqrt(l2 / l1)
    if q < Q_FLOOR:
        return HalfNormal(l1)
    return Hoyt(q, l1 + l2, l1, l2)


def wind_dominant(model: CorrelatedGaussian, coeffs: LinearCoeffs) -> bool:
    """Trace test: wind covariance at least as large as the independent one."""
    if coeffs.c6 is None:
        coeffs = coeffs.with_wind(model.v, model.tau)
    return np.trace(sigma_cg(model.zeta, coeffs)) >= np.trace(
        sigma_ig(model.base, coeffs)
    )


def misalignment_dist(
    model: FluctuationModel, mean: MeanState, routing: str = "eigen"
) -> MisalignmentDist:
    """Distribution of the misalignment ``u`` for a fluctuation model.

    Parameters
    ----------
    model : IndependentGaussian, CorrelatedGaussian or CorrelatedUniform
    mean : MeanState
    routing : {"eigen", "trace"}
        How a correlated Gaussian model is mapped. ``"eigen"`` uses the Hoyt
        law of the total covariance and falls back to the one-sided Gaussian
        only when ``q < Q_FLOOR``. ``"trace"`` switches to the one-sided
        Gaussian of the wind term alone whenever its trace is at least that
        of the independent term.
    """
    if routing not in ("eigen", "trace"):
        raise ValueError("routing must be 'eigen' or 'trace'")
    if isinstance(model, IndependentGaussian):
        return hoyt_from_cov(sigma_ig(model, linear_coeffs(mean)))
    if isinstance(model, CorrelatedGaussian):
        coeffs = linear_coeffs(mean, model.v, model.tau)
        if routing == "trace" and model.zeta > 0 and wind_dominant(model, coeffs):
            return HalfNormal(model.zeta ** 2 * coeffs.wind_gain2)
        return hoyt_from_cov(sigma_total(model, coeffs))
    if isinstance(model, CorrelatedUniform):
        coeffs = linear_coeffs(mean, model.v, model.tau)
        u_max = math.sqrt(3.0 * coeffs.wind_gain2) * model.xi
        return UniformU(u_max) if u_max > 0 else Degenerate()
    raise TypeError(f"unknown fluctuation model {type(model).__name__}")
