"""Link geometry: UAV pose, beam direction, footprint center and beam width.

The receiver lens is centered at the origin and lies in the y-z plane, so its
normal is the x axis. The UAV sits at ``r`` with orientation ``(theta, phi)``
(the roll-like third angle plays no role for a circular beam and is dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# below this value of |sin(phi) cos(theta)| the beam is treated as parallel
# to the lens plane and the footprint is unbounded
EPS_PARALLEL = 1e-6


class BeamParallelError(ValueError):
    """The beam is (numerically) parallel to the lens plane."""


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite position {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def __add__(self, other: "Position3") -> "Position3":
        return Position3(self.x + other.x, self.y + other.y, self.z + other.z)


@dataclass(frozen=True)
class Orientation:
    """Beam pointing angles in radians: azimuth ``theta`` and polar ``phi``."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= TWO_PI:
            raise ValueError(f"theta must lie in [0, 2pi], got {self.theta}")
        if not 0.0 <= self.phi <= math.pi:
            raise ValueError(f"phi must lie in [0, pi], got {self.phi}")

    @classmethod
    def wrapped(cls, theta: float, phi: float) -> "Orientation":
        """Build from arbitrary angles, folding them into the canonical ranges."""
        phi = math.remainder(phi, TWO_PI)
        if phi < 0.0:
            phi, theta = -phi, theta + math.pi
        theta = theta % TWO_PI
        return cls(theta, phi)


@dataclass(frozen=True)
class MeanState:
    mu_r: Position3
    mu_omega: Orientation

    @classmethod
    def pointing_at_lens(cls, mu_r: Position3) -> "MeanState":
        """Mean state whose beam line passes through the lens center."""
        return cls(mu_r, mean_orientation(mu_r))

    @classmethod
    def from_spherical(cls, L: float, alpha_d: float, beta_d: float) -> "MeanState":
        return cls.pointing_at_lens(spherical_to_cartesian(L, alpha_d, beta_d))


@dataclass(frozen=True)
class BeamParams:
    """Transmitter and receiver optics.

    ``beam_width_override`` fixes the beam radius at the receiver and bypasses
    the propagation model in :func:`beam_width`.
    """

    wavelength: float = 1550e-9
    waist_radius: float = 5e-3
    lens_radius: float = 0.1
    beam_width_override: float | None = None

    def __post_init__(self):
        for name in ("wavelength", "waist_radius", "lens_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        w = self.beam_width_override
        if w is not None and not w > self.lens_radius:
            raise ValueError(
                f"beam width {w} must exceed the lens radius {self.lens_radius}"
            )


@dataclass(frozen=True)
class Footprint:
    """Center ``b`` of the beam footprint on the lens plane and its offset ``u``."""

    b: Position3
    u: float


def spherical_to_cartesian(L: float, alpha_d: float, beta_d: float) -> Position3:
    """UAV position at range ``L``, azimuth ``alpha_d`` and polar angle ``beta_d``."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    sb = math.sin(beta_d)
    return Position3(
        L * sb * math.cos(alpha_d), L * sb * math.sin(alpha_d), L * math.cos(beta_d)
    )


def mean_orientation(mu_r: Position3) -> Orientation:
    """Orientation that points the beam from ``mu_r`` at the lens center."""
    norm = mu_r.norm()
    if norm == 0.0:
        raise ValueError("mean position coincides with the lens center")
    mx, my, mz = mu_r.x, mu_r.y, mu_r.z
    if mx > 0:
        theta = math.pi + math.atan(my / mx)
    elif mx < 0:
        theta = math.atan(my / mx)
    else:
        theta = math.atan2(-my, 0.0)
    theta %= TWO_PI
    phi = math.pi - math.acos(max(-1.0, min(1.0, mz / norm)))
    return Orientation(theta, phi)


def beam_direction(omega: Orientation) -> np.ndarray:
    """Unit vector along the beam."""
    sp = math.sin(omega.phi)
    return np.array(
        [sp * math.cos(omega.theta), sp * math.sin(omega.theta), math.cos(omega.phi)]
    )


def sin_incidence(theta, phi):
    """``|sin(phi) cos(theta)|``, the sine of the angle between beam and lens plane."""
    return np.abs(np.sin(phi) * np.cos(theta))


def incidence_angle(omega: Orientation) -> float:
    """Angle between the beam line and the lens plane, in ``[0, pi/2]``."""
    s = float(sin_incidence(omega.theta, omega.phi))
    return math.asin(min(s, 1.0))


def footprint_center_arrays(rx, ry, rz, theta, phi):
    """Vectorised footprint center ``(b_y, b_z)``.

    Entries where the beam is parallel to the lens come back as NaN; the
    returned boolean mask flags them.
    """
    rx, ry, rz, theta, phi = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (rx, ry, rz, theta, phi))
    )
    ct = np.cos(theta)
    sp = np.sin(phi)
    parallel = np.abs(sp * ct) <= EPS_PARALLEL
    with np.errstate(divide="ignore", invalid="ignore"):
        by = ry - rx * np.tan(theta)
        bz = rz - rx * np.cos(phi) / (sp * ct)
    by = np.where(parallel, np.nan, by)
    bz = np.where(parallel, np.nan, bz)
    return by, bz, parallel


def footprint_center(r: Position3, omega: Orientation) -> Footprint:
    """Intersection of the beam line with the lens plane.

    Raises
    ------
    BeamParallelError
        If ``|sin(phi) cos(theta)| <= EPS_PARALLEL``.
    """
    ct = math.cos(omega.theta)
    sp = math.sin(omega.phi)
    if abs(sp * ct) <= EPS_PARALLEL:
        raise BeamParallelError(
            f"beam parallel to the lens plane at theta={omega.theta}, phi={omega.phi}"
        )
    by = r.y - r.x * math.tan(omega.theta)
    bz = r.z - r.x * math.cos(omega.phi) / (sp * ct)
    return Footprint(Position3(0.0, by, bz), math.hypot(by, bz))


def beam_width(L: float, beam: BeamParams, cn2: float) -> float:
    """Gaussian beam radius at distance ``L`` including turbulence spreading.

    The coherence length is ``rho = (0.55 Cn^2 k^2 L)^(-3/5)``.
    """
    if beam.beam_width_override is not None:
        return float(beam.beam_width_override)
    if L < 0:
        raise ValueError(f"L must be non-negative, got {L}")
    w0 = beam.waist_radius
    if L == 0:
        return w0
    k = TWO_PI / beam.wavelength
    spread = 2.0 * w0 * w0 * (0.55 * cn2 * k * k * L) ** 1.2
    diffraction = beam.wavelength * L / (math.pi * w0 * w0)
    return w0 * math.sqrt(1.0 + (1.0 + spread) * diffraction * diffraction)
