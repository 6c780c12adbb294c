"""Shared domain types: particle clouds, the point charge, grids and run records."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class HypothesisWarning(UserWarning):
    """Raised (as a warning) when initial data violates an existence hypothesis."""


def _as_points(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _as_vec3(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite components")
    return arr


@dataclass
class ParticleEnsemble:
    """Weighted empirical measure sum_i w_i delta(x - x_i) delta(v - v_i).

    The weight vector is stored read-only: the total mass of a run is fixed
    at construction and every state derived from this ensemble shares it.
    """

    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.positions = _as_points(self.positions, "positions")
        self.velocities = _as_points(self.velocities, "velocities")
        w = self.weights
        shared = (isinstance(w, np.ndarray) and w.dtype == np.float64 and w.ndim == 1
                  and not w.flags.writeable)
        if not shared:
            w = np.array(w, dtype=np.float64).reshape(-1)
            w.flags.writeable = False
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if not (len(self.positions) == len(self.velocities) == len(w)):
            raise ValueError(
                "positions, velocities and weights must have equal length "
                f"({len(self.positions)}, {len(self.velocities)}, {len(w)})"
            )
        self.weights = w

    @property
    def N(self) -> int:
        return len(self.weights)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def moved(self, positions: np.ndarray, velocities: np.ndarray) -> "ParticleEnsemble":
        """Same particles (same weight array) at new phase-space coordinates."""
        return ParticleEnsemble(positions, velocities, self.weights)


@dataclass
class ChargeState:
    xi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        self.xi = _as_vec3(self.xi, "xi")
        self.eta = _as_vec3(self.eta, "eta")


@dataclass(frozen=True)
class Interaction:
    """Kernel regularisation used by the particle dynamics.

    ``softening`` applies to plasma-plasma pairs only; ``charge_softening``
    to plasma-charge pairs (default 0, the bare Coulomb field).
    """

    softening: float = 0.0
    charge_softening: float = 0.0
    min_distance: float = 1e-8

    def __post_init__(self):
        if self.softening < 0 or self.charge_softening < 0:
            raise ValueError("softening lengths must be nonnegative")
        if self.min_distance <= 0:
            raise ValueError("min_distance must be positive")


@dataclass
class ForceCache:
    """Fields evaluated at the positions of the state that owns the cache."""

    E: np.ndarray          # plasma field at particles, (N, 3)
    phi: np.ndarray        # plasma potential at particles, (N,)
    F: np.ndarray          # charge field at particles, (N, 3)
    E_xi: np.ndarray       # plasma field at the charge, (3,)
    dist: np.ndarray       # |x_i - xi|, (N,)


@dataclass
class SimState:
    t: float
    ensemble: ParticleEnsemble
    charge: ChargeState
    cached_field: "GridField | None" = None
    interaction: Interaction = field(default_factory=Interaction)
    H0: float | None = None
    forces: ForceCache | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ValueError("time must be finite and nonnegative")
        if self.ensemble.N:
            d = np.linalg.norm(self.ensemble.positions - self.charge.xi, axis=1)
            if np.any(d <= 0):
                i = int(np.argmin(d))
                raise ValueError(f"particle {i} coincides with the charge position")

    @property
    def M0(self) -> float:
        return self.ensemble.total_mass


@dataclass(frozen=True)
class GridSpec:
    """Uniform node-centred grid: node (i,j,k) sits at origin + h*(i,j,k)."""

    origin: tuple
    spacing: float
    dims: tuple

    def __post_init__(self):
        o = tuple(float(c) for c in self.origin)
        d = tuple(int(n) for n in self.dims)
        if len(o) != 3 or len(d) != 3:
            raise ValueError("origin and dims must have three entries")
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")
        if min(d) < 2:
            raise ValueError("each grid dimension needs at least two nodes")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "dims", d)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * (np.asarray(self.dims) - 1)

    def node_coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        axes = [self.origin[a] + self.spacing * np.arange(self.dims[a]) for a in range(3)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @classmethod
    def covering(cls, points: np.ndarray, cells: int = 32, padding: float = 0.1,
                 spacing: float | None = None, max_cells: int = 128) -> "GridSpec":
        """Cubic-cell grid spanning the bounding box of ``points`` plus padding.

        With ``spacing`` given the node count follows from it (capped at
        ``max_cells`` per axis, coarsening the spacing if needed); otherwise
        the longest axis is resolved by ``cells`` intervals.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(pts) == 0:
            lo, hi = -np.ones(3), np.ones(3)
        else:
            lo, hi = pts.min(axis=0), pts.max(axis=0)
        extent = np.maximum(hi - lo, 1e-12)
        pad = padding * max(float(extent.max()), 1e-6)
        lo = lo - pad
        hi = hi + pad
        span = float((hi - lo).max())
        if spacing is None:
            h = span / cells
        else:
            h = max(float(spacing), span / max_cells)
        dims = tuple(int(math.ceil((hi[a] - lo[a]) / h)) + 2 for a in range(3))
        return cls(tuple(lo), h, dims)


@dataclass
class GridField:
    origin: np.ndarray
    spacing: float
    dims: tuple
    rho: np.ndarray
    E: np.ndarray
    potential: np.ndarray | None = None

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.dims = tuple(int(n) for n in self.dims)
        if self.rho.shape != self.dims:
            raise ValueError("rho shape does not match dims")
        if self.E.shape != self.dims + (3,):
            raise ValueError("E must have shape dims + (3,)")
        if np.any(self.rho < 0):
            raise ValueError("deposited density must be nonnegative")

    @property
    def spec(self) -> GridSpec:
        return GridSpec(tuple(self.origin), self.spacing, self.dims)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def mass(self) -> float:
        return math.fsum(self.rho.ravel()) * self.cell_volume


@dataclass(frozen=True)
class ConstantsTable:
    """Parameters of the moment-propagation argument for a given (m, m0, T)."""

    m: float
    m0: float
    T: float
    K0: float
    R_T: float
    lam: float
    gamma: float
    delta: float
    k: float
    t0: float
    e_m: float
    c0_m: float
    f0_l1: float = 0.0

    def __post_init__(self):
        if self.K0 < 100:
            raise ValueError("K0 must be at least 100")
        if not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        cube = 24.0 * self.K0 * (1.0 + self.f0_l1) * (1.0 + self.T) ** 3
        if not math.isclose(self.R_T ** 3, cube, rel_tol=1e-12):
            raise ValueError("R_T is inconsistent with K0, f0_l1 and T")
        if not math.isclose(self.k + 3, (self.m + 3) * (1 + self.gamma), rel_tol=1e-12):
            raise ValueError("k + 3 must equal (m + 3)(1 + gamma)")
        d = self.gamma / (1 + (self.m + 3) * (self.gamma + 1))
        if not math.isclose(self.delta, d, rel_tol=1e-12):
            raise ValueError("delta is inconsistent with gamma and m")

    def as_dict(self) -> dict[str, Any]:
        return {
            "m": self.m, "m0": self.m0, "T": self.T, "K0": self.K0, "R_T": self.R_T,
            "lambda": self.lam, "gamma": self.gamma, "delta": self.delta, "k": self.k,
            "t0": self.t0, "e_m": self.e_m, "c0_m": self.c0_m, "f0_l1": self.f0_l1,
        }


@dataclass
class DiagnosticRecord:
    t: float
    mass: float
    energy: float
    Hk: dict = field(default_factory=dict)
    Mk: dict = field(default_factory=dict)
    Hk_sup: dict = field(default_factory=dict)
    Mk_sup: dict = field(default_factory=dict)
    lp_rho: dict = field(default_factory=dict)
    E_norms: dict = field(default_factory=dict)
    E_at_xi: float = 0.0
    virial_E_integral: float = 0.0
    virial_inverse_sq: float = 0.0
    extra: dict = field(default_factory=dict)


@dataclass
class HypothesisReport:
    mass: float
    lam: float
    mass_below_lambda: bool
    moments: dict
    moments_finite: bool
    messages: list

    @property
    def passed(self) -> bool:
        return self.mass_below_lambda and self.moments_finite


def empirical_hypothesis_moment(ensemble: ParticleEnsemble, xi0, m: float) -> float:
    """sum_i w_i (|v_i|^2 + 1/|x_i - xi0|)^(m/2)."""
    if ensemble.N == 0:
        return 0.0
    r = np.linalg.norm(ensemble.positions - np.asarray(xi0, float), axis=1)
    with np.errstate(divide="ignore"):
        base = np.sum(ensemble.velocities ** 2, axis=1) + 1.0 / r
    return math.fsum(ensemble.weights * base ** (0.5 * m))


def validate_theorem_hypotheses(ensemble: ParticleEnsemble, charge: ChargeState,
                                table: ConstantsTable, m_values=None) -> HypothesisReport:
    """Check the smallness of the plasma mass and finiteness of the initial moments.

    Violations produce a :class:`HypothesisWarning`, never an exception.
    ``m_values`` defaults to a grid of orders below ``table.m0``.
    """
    mass = ensemble.total_mass
    messages = []
    mass_ok = mass < table.lam
    if not mass_ok:
        messages.append(f"total mass {mass:.6g} is not below lambda={table.lam:.6g}")
    if m_values is None:
        top = min(table.m0, 12.0) if math.isfinite(table.m0) else 12.0
        m_values = sorted({0.0, 2.0, 4.0, 6.0, float(table.m)} | {top - 1e-3})
        m_values = [m for m in m_values if m < table.m0]
    moments = {float(m): empirical_hypothesis_moment(ensemble, charge.xi, m) for m in m_values}
    finite = all(math.isfinite(v) for v in moments.values())
    if not finite:
        bad = [m for m, v in moments.items() if not math.isfinite(v)]
        messages.append(f"initial moment is not finite for m in {bad}")
    for msg in messages:
        warnings.warn(msg, HypothesisWarning, stacklevel=2)
    return HypothesisReport(mass, table.lam, mass_ok, moments, finite, messages)
