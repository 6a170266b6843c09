"""Deterministic path loss and Gamma-Gamma turbulence parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

# attenuation constants in 1/m
WEATHER = {
    "clear_air": 0.43e-3,
    "haze": 4.2e-3,
    "light_fog": 20e-3,
    "moderate_fog": 42.2e-3,
    "heavy_fog": 125e-3,
}

# refractive-index structure parameter at ground level, m^(-2/3)
CN2_GROUND = 1.7e-14


@dataclass(frozen=True)
class WeatherClass:
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @classmethod
    def preset(cls, name: str) -> "WeatherClass":
        try:
            return cls(WEATHER[name])
        except KeyError:
            raise ValueError(
                f"unknown weather preset {name!r}; choose from {sorted(WEATHER)}"
            ) from None


@dataclass(frozen=True)
class TurbulenceParams:
    alpha: float
    beta: float
    rytov_var: float
    cn2: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")

    @property
    def scintillation_index(self) -> float:
        """Variance of the unit-mean Gamma-Gamma fade."""
        a, b = self.alpha, self.beta
        return 1.0 / a + 1.0 / b + 1.0 / (a * b)


def atmospheric_loss(kappa: float, L: float) -> float:
    """Beer-Lambert path loss ``10^(-kappa L / 10)``."""
    if L < 0:
        raise ValueError(f"L must be non-negative, got {L}")
    return 10.0 ** (-kappa * L / 10.0)


def refractive_index_structure(h_d: float) -> float:
    """Altitude-dependent ``Cn^2`` for a UAV hovering at height ``h_d`` metres."""
    if h_d < 0:
        raise ValueError(f"h_d must be non-negative, got {h_d}")
    return CN2_GROUND * math.exp(-h_d / 100.0)


def gamma_gamma_params(L: float, h_d: float, wavelength: float) -> TurbulenceParams:
    """Large- and small-scale shape parameters from the Rytov variance."""
    if not (L > 0 and wavelength > 0):
        raise ValueError("L and wavelength must be positive")
    cn2 = refractive_index_structure(h_d)
    k = 2.0 * math.pi / wavelength
    s2 = 1.23 * cn2 * k ** (7.0 / 6.0) * L ** (11.0 / 6.0)
    if s2 == 0.0:
        return TurbulenceParams(math.inf, math.inf, 0.0, cn2)
    s125 = s2 ** 1.2
    alpha = 1.0 / math.expm1(0.49 * s2 / (1.0 + 1.11 * s125) ** (7.0 / 6.0))
    beta = 1.0 / math.expm1(0.51 * s2 / (1.0 + 0.69 * s125) ** (5.0 / 6.0))
    return TurbulenceParams(alpha, beta, s2, cn2)
