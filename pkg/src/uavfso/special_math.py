"""Special functions used throughout the channel model.

erf, I0 and the Gaussian Q-function are thin wrappers over :mod:`scipy.special`
with the conventions the rest of the package relies on (bit-exact odd erf,
overflow reporting for I0). The first-order Marcum Q-function is implemented
here: a modified-Bessel series for small ``a*b`` and an adaptive
Gauss-Legendre evaluation of its single-integral representation otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)

# a*b above which the series is abandoned for the integral representation
MARCUM_CROSSOVER = 30.0


class ToleranceNotReached(ArithmeticError):
    """A series or quadrature did not converge within ``Tolerance.max_terms``."""


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_terms: int = 10_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_terms) < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_TOL = Tolerance()


def _scalar_or_array(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def erf(x):
    """Error function, odd to the last bit: ``erf(-x) == -erf(x)``."""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(np.copysign(special.erf(np.abs(x)), x))


def bessel_i0(x):
    """Zero-order modified Bessel function of the first kind for ``x >= 0``.

    Raises
    ------
    OverflowError
        If the result saturates the float range (``x`` above roughly 713).
        Use :func:`log_bessel_i0` when only ratios or logs are needed.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_i0 is only defined here for x >= 0")
    out = special.i0(x)
    if np.any(np.isinf(out)):
        raise OverflowError("I0(x) saturates the float range; use log_bessel_i0")
    return _scalar_or_array(out)


def log_bessel_i0(x):
    """``ln I0(|x|)`` without overflow."""
    x = np.abs(np.asarray(x, dtype=float))
    return _scalar_or_array(np.log(special.i0e(x)) + x)


def gaussian_q(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(0.5 * special.erfc(x / SQRT2))


# ---------------------------------------------------------------------------
# Marcum Q, first order
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _adaptive_gauss_legendre(f, lo, hi, abs_tol, rel_tol, max_panels):
    """Integrate a vectorised ``f`` on ``[lo, hi]`` by panel bisection.

    Each panel is integrated with 32-point Gauss-Legendre and compared with the
    sum over its two halves; panels are split until the difference is below
    ``max(abs_tol, rel_tol * |total|)`` scaled by the panel's share of the
    interval.
    """

    def panel(a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        return half * np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES))

    stack = [(lo, hi, panel(lo, hi))]
    total = 0.0
    n_panels = 1
    width = hi - lo
    while stack:
        a, b, whole = stack.pop()
        m = 0.5 * (a + b)
        left, right = panel(a, m), panel(m, b)
        n_panels += 2
        refined = left + right
        budget = max(abs_tol, rel_tol * abs(refined)) * (b - a) / width
        if abs(refined - whole) <= budget:
            total += refined
            continue
        if n_panels > max_panels:
            raise ToleranceNotReached(
                f"adaptive quadrature exceeded {max_panels} panels on [{lo}, {hi}]"
            )
        stack.append((a, m, left))
        stack.append((m, b, right))
    return total


def _bessel_series(ratio, x, first_k, tol):
    """``sum_{k >= first_k} ratio**k * I_k(x) * exp(-x)`` for ``0 <= ratio <= 1``."""
    total = 0.0
    block = 64
    k0 = first_k
    while k0 < first_k + tol.max_terms:
        k = np.arange(k0, k0 + block, dtype=float)
        with np.errstate(under="ignore"):
            terms = np.power(ratio, k) * special.ive(k, x)
        total += float(terms.sum())
        last = float(terms[-1])
        # terms decrease monotonically once k exceeds x * ratio
        if k0 + block > x * ratio and last <= max(tol.rel_tol * total, 1e-300) * 1e-3:
            return total
        if total == 0.0 and last == 0.0:
            return 0.0
        k0 += block
    raise ToleranceNotReached(
        f"Marcum Bessel series did not converge in {tol.max_terms} terms "
        f"(ratio={ratio}, x={x})"
    )


def _marcum_integral(small, large, complement, tol):
    """Integral representation, ``large > small > 0`` with ``small*large >= crossover``.

    With ``zeta = small/large`` and ``theta = -pi/2 + t`` the kernel becomes
    ``exp(-(large-small)**2/2) * exp(-2*a*b*sin(t/2)**2)``, concentrated near
    ``t = 0``; the integration is folded onto ``[0, pi]``.
    """
    zeta = small / large
    ab = small * large
    scale = math.exp(-0.5 * (large - small) ** 2)
    if scale == 0.0:
        return 0.0
    gap = 1.0 - zeta
    # 1 - 2*zeta*cos(t) + zeta^2 and friends rewritten in sin^2(t/2) so that
    # near-equal arguments do not cancel
    if complement:
        # 1 - Q1(large, small)
        def num(s2):
            return zeta * (gap - 2.0 * s2)
    else:
        # Q1(small, large)
        def num(s2):
            return gap + 2.0 * zeta * s2

    def integrand(t):
        s = np.sin(0.5 * t)
        s2 = s * s
        den = gap * gap + 4.0 * zeta * s2
        return num(s2) / den * np.exp(-2.0 * ab * s2)

    # split at the kernel width so the panel search starts near the mass
    knee = min(math.pi, 12.0 / math.sqrt(ab))
    pieces = [(0.0, knee)] + ([(knee, math.pi)] if knee < math.pi else [])
    value = 0.0
    for lo, hi in pieces:
        value += _adaptive_gauss_legendre(
            integrand, lo, hi, tol.abs_tol * 1e-3, tol.rel_tol * 1e-2, tol.max_terms
        )
    return scale * value / math.pi


def _check_ab(a, b):
    a, b = float(a), float(b)
    if not (a >= 0 and b >= 0):
        raise ValueError(f"Marcum Q needs a, b >= 0, got a={a}, b={b}")
    return a, b


def marcum_q1(a, b, tol=DEFAULT_TOL):
    """First-order Marcum Q-function ``Q1(a, b)``.

    Parameters
    ----------
    a, b : float
        Non-negative arguments.
    tol : Tolerance
        Series truncation / quadrature tolerance.

    Returns
    -------
    float
        ``Q1(a, b)`` in ``[0, 1]``.

    Notes
    -----
    For ``a*b < 30`` the Bessel series
    ``exp(-(a-b)^2/2) * sum_k (a/b)^k * I_k(ab) e^{-ab}`` (or its complement for
    ``a > b``) is summed with exponentially scaled Bessel functions. Above the
    crossover the single-integral representation is evaluated by adaptive
    Gauss-Legendre quadrature.
    """
    a, b = _check_ab(a, b)
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return math.exp(-0.5 * b * b)
    if a == b:
        return 0.5 * (1.0 + float(special.ive(0, a * a)))
    if a > b:
        return 1.0 - marcum_q1_complement(a, b, tol)
    ab = a * b
    if ab < MARCUM_CROSSOVER:
        value = math.exp(-0.5 * (a - b) ** 2) * _bessel_series(a / b, ab, 0, tol)
    else:
        value = _marcum_integral(a, b, complement=False, tol=tol)
    return min(max(value, 0.0), 1.0)


def marcum_q1_complement(a, b, tol=DEFAULT_TOL):
    """``1 - Q1(a, b)`` evaluated without cancellation when ``a > b``."""
    a, b = _check_ab(a, b)
    if b == 0.0:
        return 0.0
    if a <= b:
        return 1.0 - marcum_q1(a, b, tol)
    ab = a * b
    if ab < MARCUM_CROSSOVER:
        value = math.exp(-0.5 * (a - b) ** 2) * _bessel_series(b / a, ab, 1, tol)
    else:
        value = _marcum_integral(b, a, complement=True, tol=tol)
    return min(max(value, 0.0), 1.0)
