"""Parameter algebra of the moment-propagation argument.

The scalar helpers are written with plain arithmetic so that
``fractions.Fraction`` inputs stay exact; only the fractional powers in
:func:`radius_R` and :func:`t0_of` force a floating-point result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConstantsTable

SIXTEEN_THIRDS = 16.0 / 3.0


@dataclass(frozen=True)
class Interval:
    """Open-or-closed interval (lo, hi) of admissible gamma values."""

    lo: float
    hi: float
    hi_closed: bool
    binding: str

    def __contains__(self, g) -> bool:
        return self.lo < g < self.hi or (self.hi_closed and g == self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def radius_R(T, f0_l1, K0=100):
    """Cutoff radius (24 K0 (1 + |f0|_1))^(1/3) (1 + T)."""
    if K0 < 100:
        raise ValueError(f"K0={K0} violates K0 >= 100")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if f0_l1 < 0:
        raise ValueError("|f0|_1 must be nonnegative")
    return float(24 * K0 * (1 + f0_l1)) ** (1.0 / 3.0) * (1 + float(T))


def gamma_admissible(m, m0) -> Interval:
    """Admissible exponents gamma for moment order m and initial order m0."""
    if not m > 3:
        raise ValueError(f"m={m} must exceed 3")
    if not m < m0:
        raise ValueError(f"m={m} must be below m0={m0}")
    caps = [(1, False, "gamma < 1")]
    if m0 != math.inf:
        caps.append(((m0 - m) / (m + 3), False, "gamma < (m0 - m)/(m + 3)"))
    if m < 6:
        caps.append(((m - 3) / (6 - m), True, "gamma <= (m - 3)/(6 - m)"))
    # on ties the strict inequality wins
    hi, closed, binding = min(caps, key=lambda c: (c[0], c[1]))
    if hi <= 0:
        raise ValueError(f"empty gamma interval; binding constraint: {binding}")
    return Interval(0, hi, closed, binding)


def delta_k_of(gamma, m):
    """Return (delta, k) with k + 3 = (m + 3)(1 + gamma)."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    delta = gamma / (1 + (gamma + 1) * (m + 3))
    k = (m + 3) * (1 + gamma) - 3
    return delta, k


def t0_exponent(gamma, delta, m):
    """Exponent -(3(k+3) - (m+3)(1-gamma)) / ((1+gamma+delta)(m+3)^2)."""
    _, k = delta_k_of(gamma, m)
    num = 3 * (k + 3) - (m + 3) * (1 - gamma)
    return -num / ((1 + gamma + delta) * (m + 3) ** 2)


def t0_of(H_m, gamma, delta, m) -> float:
    """Short-time horizon H_m^exponent; at most 1 because H_m >= 1."""
    if H_m < 1:
        raise ValueError(f"H_m={H_m} must be at least 1")
    t0 = float(H_m) ** float(t0_exponent(gamma, delta, m))
    assert t0 <= 1.0
    return t0


def e_of(m, gamma):
    """Exponent balance (2+4g)/((1+delta+g)(m+3)) - 1/(m-2); negative is good."""
    if not SIXTEEN_THIRDS < m <= 7:
        raise ValueError(f"m={m} outside (16/3, 7]")
    if gamma == 0:
        return 2 / (m + 3) - 1 / (m - 2)
    delta, _ = delta_k_of(gamma, m)
    return (2 + 4 * gamma) / ((1 + delta + gamma) * (m + 3)) - 1 / (m - 2)


def gamma_sign_change(m, tol: float = 1e-15) -> float:
    """Root of gamma -> e(m, gamma) on (0, 1), found by bisection.

    e is increasing in gamma, so e < 0 exactly on (0, root). Returns 1.0
    when e stays negative on the whole interval.
    """
    if not SIXTEEN_THIRDS < m < 7:
        raise ValueError(f"m={m} outside (16/3, 7)")
    lo, hi = 0.0, 1.0 - 1e-15
    if e_of(m, hi) < 0:
        return 1.0
    while hi - lo > tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if e_of(m, mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo


def gamma_with_negative_e(m, m0=7.0) -> float:
    """Admissible gamma with e(m, gamma) < 0 (half the bisected root, clipped)."""
    interval = gamma_admissible(m, m0)
    g = 0.5 * min(gamma_sign_change(m), interval.hi)
    if not (g in interval and e_of(m, g) < 0):
        raise ValueError(f"no admissible gamma with e < 0 for m={m}, m0={m0}")
    return g


def _c0_objective(m: float, g: float) -> float:
    bracket = -e_of(m, g)
    if bracket <= 0:
        return math.inf
    return max((m + 3) / g, 2.5 / bracket)


def c0_minimizer(m: float, method: str = "refined") -> tuple[float, float]:
    """Return (gamma*, c0(m)) minimising 3.1 * max{(m+3)/g, 2.5/bracket(g)}.

    ``grid``: dense grid with linear resolution 1e-4 merged with 4000
    log-spaced points. ``golden``: golden-section search on log(gamma).
    ``refined``: grid followed by golden-section refinement in the
    neighbouring cells.
    """
    if not SIXTEEN_THIRDS < m < 7:
        raise ValueError(f"c0 is defined for 16/3 < m < 7, got m={m}")
    root = min(gamma_sign_change(m), 1.0)
    if root <= 0:
        raise ValueError(f"no admissible gamma for m={m}")
    f = np.vectorize(lambda g: _c0_objective(m, g))

    def golden(lo, hi):
        # golden-section search in log(gamma); the objective is unimodal
        a, b = math.log(lo), math.log(hi)
        invphi = (math.sqrt(5) - 1) / 2
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        fc, fd = _c0_objective(m, math.exp(c)), _c0_objective(m, math.exp(d))
        while b - a > 1e-12:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = _c0_objective(m, math.exp(c))
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = _c0_objective(m, math.exp(d))
        g = math.exp(0.5 * (a + b))
        return g, _c0_objective(m, g)

    if method == "golden":
        g, val = golden(root * 1e-9, root * (1 - 1e-12))
        return g, 3.1 * val
    lin = np.arange(1e-4, root, 1e-4)
    grid = np.unique(np.concatenate([lin, np.geomspace(root * 1e-6, root * (1 - 1e-9), 4000)]))
    vals = f(grid)
    i = int(np.argmin(vals))
    if method == "grid":
        return float(grid[i]), 3.1 * float(vals[i])
    if method != "refined":
        raise ValueError(f"unknown method {method!r}")
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    g, val = golden(lo, hi)
    if val > vals[i]:
        g, val = float(grid[i]), float(vals[i])
    return g, 3.1 * val


def c0_of(m: float, method: str = "refined") -> float:
    """Growth exponent c0(m) of the polynomial moment bound."""
    return c0_minimizer(m, method)[1]


def constants_table(m: float, m0: float, T: float, K0: float = 100.0, f0_l1: float = 0.0,
                    lam: float = 1.0, H_m: float = 1.0, gamma: float | None = None) -> ConstantsTable:
    """Assemble every parameter for (m, m0, T).

    gamma defaults to the c0 minimiser when it is admissible, otherwise to
    half the admissible upper end. e(m) and c0(m) are NaN outside 16/3 < m < 7.
    """
    interval = gamma_admissible(m, m0)
    in_c0_domain = SIXTEEN_THIRDS < m < 7
    if gamma is None:
        if in_c0_domain:
            g_star, _ = c0_minimizer(m)
            gamma = g_star if g_star in interval else 0.5 * interval.hi
        else:
            gamma = 0.5 * min(interval.hi, 1.0)
    elif gamma not in interval:
        raise ValueError(f"gamma={gamma} outside admissible interval ({interval.lo}, {interval.hi})")
    delta, k = delta_k_of(gamma, m)
    return ConstantsTable(
        m=float(m), m0=float(m0), T=float(T), K0=float(K0),
        R_T=radius_R(T, f0_l1, K0), lam=float(lam), gamma=float(gamma),
        delta=float(delta), k=float(k), t0=t0_of(H_m, gamma, delta, m),
        e_m=float(e_of(m, gamma)) if SIXTEEN_THIRDS < m <= 7 else math.nan,
        c0_m=c0_of(m) if in_c0_domain else math.nan,
        f0_l1=float(f0_l1),
    )
