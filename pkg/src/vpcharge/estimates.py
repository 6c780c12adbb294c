"""Numerical checks of the a priori inequalities: velocity interpolation,
density interpolation, the Sobolev field bound, the moment ODE, the
polynomial growth of H_m and the linear growth of the virial integrals.

Every check returns an :class:`InequalityReport` carrying the worst
observed LHS/RHS ratio and a machine-readable pass/fail flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import ConstantsTable, GridField, GridSpec, ParticleEnsemble
from .fields import free_space_potential
from .initial_data import DensityProfile, velocity_moment_quadrature


@dataclass
class InequalityReport:
    check: str
    passed: bool
    worst_ratio: float
    details: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"check": self.check, "passed": bool(self.passed),
                "worst_ratio": _jsonable(self.worst_ratio), "details": _jsonable(self.details),
                "provenance": _jsonable(self.provenance)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# Velocity interpolation
# ---------------------------------------------------------------------------

def interpolation_constant(a: float, b: float) -> float:
    """C(a, b) with int |v|^a f dv <= C ||f||_inf^((b-a)/(3+b)) (int |v|^b f dv)^((3+a)/(3+b)).

    Splitting at |v| = r gives the bound 4 pi F r^(3+a)/(3+a) + B r^(a-b),
    minimised at r^(3+b) = (b - a) B / (4 pi F), where it equals
    (3+b)/(3+a) (4 pi/(b-a))^((b-a)/(3+b)) F^((b-a)/(3+b)) B^((3+a)/(3+b)).
    """
    if not (b > a >= 0):
        raise ValueError("need b > a >= 0")
    return (3.0 + b) / (3.0 + a) * (4.0 * math.pi / (b - a)) ** ((b - a) / (3.0 + b))


def split_bound(a: float, b: float, F: float, B: float, r: float) -> float:
    """Unoptimised right-hand side of the split at radius r."""
    return 4.0 * math.pi * F * r ** (3.0 + a) / (3.0 + a) + B * r ** (a - b)


@dataclass(frozen=True)
class UniformBallDensity:
    """f(v) = height on |v| <= radius."""

    radius: float
    height: float = 1.0

    def moment(self, k: float) -> float:
        return 4.0 * math.pi * self.height * self.radius ** (k + 3.0) / (k + 3.0)

    @property
    def sup(self) -> float:
        return self.height

    def dilated(self, lam: float) -> "UniformBallDensity":
        return UniformBallDensity(self.radius * lam, self.height)

    def scaled(self, alpha: float) -> "UniformBallDensity":
        return UniformBallDensity(self.radius, self.height * alpha)


@dataclass(frozen=True)
class VelocityGridDensity:
    """Piecewise-constant f(v) on the cubic cells of a velocity grid.

    ``values`` has shape (n, n, n); cell (i, j, k) is
    origin + spacing * [i, i+1) x [j, j+1) x [k, k+1). Moments use a
    tensor Gauss-Legendre rule inside every cell.
    """

    origin: tuple
    spacing: float
    values: np.ndarray
    order: int = 6

    def __post_init__(self):
        vals = np.asarray(self.values, float)
        if vals.ndim != 3:
            raise ValueError("values must be a 3D array")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    def moment(self, k: float) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(self.order)
        u = 0.5 * (nodes + 1.0)
        w = 0.5 * weights
        h = self.spacing
        o = np.asarray(self.origin, float)
        total = 0.0
        occupied = np.argwhere(self.values > 0)
        if len(occupied) == 0:
            return 0.0
        q = np.stack(np.meshgrid(u, u, u, indexing="ij"), axis=-1).reshape(-1, 3)
        qw = np.einsum("i,j,k->ijk", w, w, w).ravel()
        corners = o + h * occupied
        pts = corners[:, None, :] + h * q[None, :, :]
        speed = np.linalg.norm(pts, axis=-1)
        cell_int = (speed ** k if k > 0 else np.ones_like(speed)) @ qw * h ** 3
        total = float(np.dot(cell_int, self.values[tuple(occupied.T)]))
        return total

    @property
    def sup(self) -> float:
        return float(self.values.max(initial=0.0))

    def dilated(self, lam: float) -> "VelocityGridDensity":
        return VelocityGridDensity(tuple(lam * np.asarray(self.origin, float)),
                                   self.spacing * lam, self.values, self.order)

    def scaled(self, alpha: float) -> "VelocityGridDensity":
        return VelocityGridDensity(self.origin, self.spacing, self.values * alpha, self.order)


def random_grid_density(rng: np.random.Generator, n: int = 6, extent: float = 3.0,
                        fill: float = 0.5) -> VelocityGridDensity:
    """Random piecewise-constant density on an n^3 grid over [-extent, extent]^3."""
    vals = rng.random((n, n, n)) * (rng.random((n, n, n)) < fill)
    if not vals.any():
        vals[n // 2, n // 2, n // 2] = 1.0
    h = 2.0 * extent / n
    return VelocityGridDensity((-extent,) * 3, h, vals)


def _interp_sides(a, b, F, A_moment, B_moment):
    C = interpolation_constant(a, b)
    rhs = C * F ** ((b - a) / (3.0 + b)) * B_moment ** ((3.0 + a) / (3.0 + b))
    return A_moment, rhs


def _ratio(lhs, rhs):
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def check_interpolation_moment(density, a: float, b: float, tol: float = 1e-12,
                               bin_x: float | None = None, bin_v: float | None = None) -> InequalityReport:
    """Check int |v|^a f dv <= C(a,b) ||f||_inf^((b-a)/(3+b)) (int |v|^b f dv)^((3+a)/(3+b)).

    ``density`` is a velocity density with ``moment(k)`` and ``sup`` (for
    example :class:`UniformBallDensity` or :class:`VelocityGridDensity`)
    or a :class:`ParticleEnsemble`. An ensemble is replaced by its 6D
    histogram with cells (bin_x, bin_v) and the inequality is checked in
    every occupied spatial cell.
    """
    if not (b > a >= 0):
        raise ValueError("need b > a >= 0")
    if isinstance(density, ParticleEnsemble):
        return _interp_ensemble(density, a, b, tol, bin_x, bin_v)
    try:
        F = float(density.sup)
    except AttributeError as exc:
        raise ValueError("density provides no sup-norm estimate") from exc
    if not math.isfinite(F):
        raise ValueError("sup-norm estimate unavailable")
    lhs, rhs = _interp_sides(a, b, F, density.moment(a), density.moment(b))
    r = _ratio(lhs, rhs)
    return InequalityReport("interpolation_moment", r <= 1.0 + tol, r,
                            {"a": a, "b": b, "lhs": lhs, "rhs": rhs, "f_sup": F,
                             "constant": interpolation_constant(a, b)},
                            {"density": type(density).__name__})


def histogram_density(ens: ParticleEnsemble, bin_x: float, bin_v: float, x_origin=(0.0, 0.0, 0.0)):
    """Occupied cells of the 6D histogram f = mass / (bin_x^3 bin_v^3).

    Returns (x_index, v_index, value): integer cell indices (n, 3) and the
    constant value of f in each cell.
    """
    kx = np.floor((ens.positions - np.asarray(x_origin, float)) / bin_x).astype(np.int64)
    kv = np.floor(ens.velocities / bin_v).astype(np.int64)
    cells, inv = np.unique(np.hstack([kx, kv]), axis=0, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=ens.weights, minlength=len(cells))
    return cells[:, :3], cells[:, 3:], mass / (bin_x ** 3 * bin_v ** 3)


def cell_speed_integrals(v_index, bin_v: float, k: float, order: int = 6) -> np.ndarray:
    """int over each velocity cell of |v|^k dv (tensor Gauss-Legendre)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    q = np.stack(np.meshgrid(u, u, u, indexing="ij"), axis=-1).reshape(-1, 3)
    qw = np.einsum("i,j,k->ijk", w, w, w).ravel()
    out = np.empty(len(v_index))
    for c0 in range(0, len(v_index), 4096):
        pts = bin_v * (v_index[c0:c0 + 4096, None, :] + q[None])
        sp = np.linalg.norm(pts, axis=-1)
        out[c0:c0 + 4096] = ((sp ** k) if k > 0 else np.ones_like(sp)) @ qw
    return out * bin_v ** 3


def _interp_ensemble(ens, a, b, tol, bin_x, bin_v):
    if bin_x is None or bin_v is None:
        raise ValueError("ensemble input needs bin_x and bin_v for the sup-norm estimate")
    if ens.N == 0 or ens.total_mass == 0:
        return InequalityReport("interpolation_moment", True, 0.0, {"vacuous": True})
    kx, kv, val = histogram_density(ens, bin_x, bin_v)
    F = float(val.max())
    _, inv = np.unique(kx, axis=0, return_inverse=True)
    inv = inv.ravel()
    A = np.bincount(inv, weights=val * cell_speed_integrals(kv, bin_v, a))
    B = np.bincount(inv, weights=val * cell_speed_integrals(kv, bin_v, b))
    C = interpolation_constant(a, b)
    rhs = C * F ** ((b - a) / (3.0 + b)) * B ** ((3.0 + a) / (3.0 + b))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs > 0, A / rhs, np.where(A > 0, np.inf, 0.0))
    worst = float(ratios.max())
    return InequalityReport("interpolation_moment", worst <= 1.0 + tol, worst,
                            {"a": a, "b": b, "x_bins": int(len(A)), "f_sup": F,
                             "violations": int(np.sum(ratios > 1.0 + tol))},
                            {"density": "histogram of ParticleEnsemble", "N": ens.N,
                             "bin_x": bin_x, "bin_v": bin_v})


# ---------------------------------------------------------------------------
# Density interpolation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSpaceBall:
    """f = height on {|x| <= x_radius} x {|v| <= v_radius}."""

    x_radius: float
    v_radius: float
    height: float = 1.0

    def rho_norm(self, p: float) -> float:
        rho = self.height * 4.0 * math.pi / 3.0 * self.v_radius ** 3
        return rho * (4.0 * math.pi / 3.0 * self.x_radius ** 3) ** (1.0 / p)

    def velocity_moment(self, b: float) -> float:
        return (self.height * 4.0 * math.pi / 3.0 * self.x_radius ** 3
                * 4.0 * math.pi * self.v_radius ** (b + 3.0) / (b + 3.0))

    @property
    def sup(self) -> float:
        return self.height


def _rho_report(lhs, F, Bm, b, tol, details, provenance):
    C = interpolation_constant(0.0, b)
    rhs = C * F ** (b / (3.0 + b)) * Bm ** (3.0 / (3.0 + b))
    r = _ratio(lhs, rhs)
    details = dict(details, b=b, p=(b + 3.0) / 3.0, lhs=lhs, rhs=rhs, f_sup=F, constant=C)
    if lhs == 0 and rhs == 0:
        details["vacuous"] = True
    return InequalityReport("rho_interpolation", r <= 1.0 + tol, r, details, provenance)


def check_rho_interpolation(source, grid: GridSpec | None = None, b: float = 2.0,
                            tol: float = 1e-12, bin_v: float | None = None,
                            grid_points: int = 64) -> InequalityReport:
    """Check ||rho||_{(b+3)/3} <= C(0,b) ||f||_inf^(b/(3+b)) (iint |v|^b f)^(3/(3+b)).

    ``source`` is a :class:`ParticleEnsemble` (checked on its 6D histogram
    with x cells aligned to ``grid`` and velocity cells of side bin_v), a
    :class:`PhaseSpaceBall` (closed forms) or a :class:`DensityProfile`
    (rho by grid quadrature, the velocity moment by radial quadrature).
    """
    if not b > 0:
        raise ValueError("b must be positive")
    p = (b + 3.0) / 3.0
    if isinstance(source, PhaseSpaceBall):
        return _rho_report(source.rho_norm(p), source.sup, source.velocity_moment(b), b, tol,
                           {}, {"density": "PhaseSpaceBall"})
    if isinstance(source, DensityProfile):
        return _rho_profile(source, b, tol, grid_points)
    if not isinstance(source, ParticleEnsemble):
        raise TypeError("unsupported density source")
    ens = source
    if ens.N == 0 or ens.total_mass == 0:
        return _rho_report(0.0, 0.0, 0.0, b, tol, {}, {"density": "ParticleEnsemble", "N": ens.N})
    if grid is None:
        raise ValueError("ensemble input needs a grid")
    if bin_v is None:
        raise ValueError("ensemble input needs bin_v for the sup-norm estimate")
    kx, kv, val = histogram_density(ens, grid.spacing, bin_v, grid.origin)
    _, inv = np.unique(kx, axis=0, return_inverse=True)
    rho = np.bincount(inv.ravel(), weights=val * bin_v ** 3)
    lhs = float(np.sum(rho ** p) * grid.cell_volume) ** (1.0 / p)
    Bm = float(np.sum(val * cell_speed_integrals(kv, bin_v, b)) * grid.cell_volume)
    return _rho_report(lhs, float(val.max()), Bm, b, tol, {},
                       {"density": "histogram of ParticleEnsemble", "N": ens.N,
                        "bin_x": grid.spacing, "bin_v": bin_v})


def _rho_profile(profile: DensityProfile, b, tol, n):
    p = (b + 3.0) / 3.0
    c = np.asarray(profile.spatial_center)
    L = 7.0 * profile.spatial_radius
    axis = np.linspace(-L, L, n)
    h = axis[1] - axis[0]
    X, Y, Z = np.meshgrid(axis + c[0], axis + c[1], axis + c[2], indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1)
    vel_mass = (2.0 * math.pi * profile.velocity_temperature) ** 1.5
    rho = profile.amplitude * vel_mass * profile.spatial_factor(pts)
    lhs = float(np.sum(rho ** p) * h ** 3) ** (1.0 / p)
    F = profile.amplitude   # every factor of f0 is at most 1
    Bm = velocity_moment_quadrature(profile, b)
    return _rho_report(lhs, F, Bm, b, tol, {"grid_points": n},
                       {"density": "DensityProfile", "kind": profile.kind})


# ---------------------------------------------------------------------------
# Sobolev field bound
# ---------------------------------------------------------------------------

def _lp(values, p, vol):
    if math.isinf(p):
        return float(np.max(values, initial=0.0))
    return float(np.sum(values ** p) * vol) ** (1.0 / p)


def _field_from_rho(rho, spacing):
    if not np.any(rho):
        return np.zeros(rho.shape + (3,))
    phi = free_space_potential(rho, spacing)
    return -np.stack(np.gradient(phi, spacing, edge_order=2), axis=-1)


def _sobolev_ratios(rho, spacing, s):
    vol = spacing ** 3
    E = _field_from_rho(rho, spacing)
    mag = np.linalg.norm(E, axis=-1)
    rho_s = _lp(rho, s, vol)
    if s < 3:
        q = 3.0 * s / (3.0 - s)
        e_norm = _lp(mag, q, vol)
        scale_free = _ratio(e_norm, rho_s)
        return e_norm, rho_s, _ratio(e_norm, rho_s), scale_free
    e_norm = _lp(mag, math.inf, vol)
    theta = 2.0 * s / (3.0 * (s - 1.0))
    rho_1 = _lp(rho, 1.0, vol)
    scale_free = _ratio(e_norm, rho_1 ** (1.0 - theta) * rho_s ** theta)
    return e_norm, rho_s, _ratio(e_norm, rho_s), scale_free


def dilate_density(rho, lam: float):
    """Resample rho(x / lam) about the grid centre onto a grid with the same spacing.

    Node values are trilinear interpolants of the input; points outside
    the input grid get zero.
    """
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    dims = np.asarray(rho.shape)
    new_dims = np.maximum(np.ceil((dims - 1) * lam).astype(int) + 1, 2)
    idx = np.indices(tuple(new_dims)).reshape(3, -1).T.astype(float)
    src = 0.5 * (dims - 1) + (idx - 0.5 * (new_dims - 1)) / lam
    vals = ndimage.map_coordinates(rho, src.T, order=1, mode="constant", cval=0.0)
    return vals.reshape(tuple(new_dims))


def check_sobolev(gf: GridField, s: float, dilation: float = 2.0,
                  stability_tol: float = 0.05, smoothing: float = 0.0) -> InequalityReport:
    """Scale stability of ||E||_{3s/(3-s)} / ||rho||_s (s in (1,3)) or of the sup bound (s > 3).

    The constant is not explicit, so the check compares the ratio on the
    input grid with the ratio after the dilation x -> dilation * x
    (resampled on a grid of the same spacing). Both fields come from the
    same free-space solver. For s > 3 the pure ratio ||E||_inf/||rho||_s
    scales like dilation^(1 - 3/s); the scale-free quantity
    ||E||_inf / (||rho||_1^(1-theta) ||rho||_s^theta), theta = 2s/(3(s-1)),
    is compared instead and both are reported.

    ``smoothing`` > 0 first convolves rho with a Gaussian of that many
    cells, which keeps single-particle spikes of a deposited density from
    dominating the resampling error.
    """
    if not (1 < s < 3 or s > 3):
        raise ValueError("need 1 < s < 3 or s > 3")
    rho = np.asarray(gf.rho, float)
    if smoothing > 0:
        rho = ndimage.gaussian_filter(rho, smoothing, mode="constant")
    if not np.any(rho):
        return InequalityReport("sobolev", True, 0.0, {"s": s, "vacuous": True})
    e0, r0, raw0, free0 = _sobolev_ratios(rho, gf.spacing, s)
    rho_l = dilate_density(rho, dilation)
    e1, r1, raw1, free1 = _sobolev_ratios(rho_l, gf.spacing, s)
    change = abs(free1 / free0 - 1.0)
    return InequalityReport(
        "sobolev", change <= stability_tol, change,
        {"s": s, "q": 3.0 * s / (3.0 - s) if s < 3 else math.inf,
         "E_norm": e0, "rho_norm": r0, "ratio": raw0, "scale_free_ratio": free0,
         "dilation": dilation, "dilated_ratio": raw1, "dilated_scale_free_ratio": free1,
         "relative_change": change, "stability_tol": stability_tol, "smoothing": smoothing},
        {"grid_spacing": gf.spacing, "dims": list(gf.dims)})


# ---------------------------------------------------------------------------
# Moment ODE and growth
# ---------------------------------------------------------------------------

def _series(records, getter, name):
    try:
        return np.array([float(getter(r)) for r in records])
    except KeyError as exc:
        raise ValueError(f"records lack the field {name}") from exc


def _times(records, minimum=3):
    if len(records) < minimum:
        raise ValueError(f"need at least {minimum} records")
    t = np.array([r.t for r in records], float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("record times must be strictly increasing")
    return t


def moment_ode_ratios(records, k: float):
    """(t_interior, ratios, g) with the ratio of the central-difference dH~_k/dt
    to (||E||_{k+3} + |E(xi)|) H_k^((k+2)/(k+3)) and g = ||E||_{k+3} + |E(xi)|."""
    k = float(k)
    t = _times(records)
    H = _series(records, lambda r: r.Hk[k], f"H_{k:g}")
    Hs = _series(records, lambda r: r.Hk_sup[k], f"Hsup_{k:g}")
    En = _series(records, lambda r: r.E_norms[k + 3], f"E_L{k + 3:g}")
    Ex = _series(records, lambda r: r.E_at_xi, "E_at_xi")
    g = En + Ex
    dH = (H[2:] - H[:-2]) / (t[2:] - t[:-2])
    denom = g[1:-1] * Hs[1:-1] ** ((k + 2.0) / (k + 3.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(denom > 0, dH / denom, np.where(dH > 0, np.inf, 0.0))
    return t[1:-1], ratios, g


def check_moment_ode(records, k: float, integrated_tol: float = 1e-2) -> InequalityReport:
    """Boundedness of the differential moment inequality plus its integrated form.

    The worst (largest) ratio C is reported; the check passes when it is
    finite and the integrated consequence
    H_k(t)^(1/(k+3)) <= H_k(0)^(1/(k+3)) + (C/(k+3)) int_0^t g
    holds at every record to relative tolerance ``integrated_tol``
    (trapezoid rule for the time integral).
    """
    k = float(k)
    t_int, ratios, g = moment_ode_ratios(records, k)
    t = np.array([r.t for r in records])
    C = float(max(ratios.max(), 0.0))
    Hs = _series(records, lambda r: r.Hk_sup[k], f"Hsup_{k:g}")
    G = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (g[1:] + g[:-1]))])
    p = 1.0 / (k + 3.0)
    lhs = Hs ** p
    rhs = Hs[0] ** p + C * p * G
    integ = lhs / rhs
    worst_integ = float(integ.max())
    ok = math.isfinite(C) and worst_integ <= 1.0 + integrated_tol
    return InequalityReport(
        "moment_ode", ok, C,
        {"k": k, "max_ratio": C, "mean_ratio": float(np.mean(ratios)),
         "integrated_worst_ratio": worst_integ, "integrated_tol": integrated_tol,
         "n_interior": int(len(ratios))},
        {"t_start": float(t[0]), "t_end": float(t[-1]), "records": len(records)})


def loglog_slope(records, m: float, tail_fraction: float = 0.5):
    """Least-squares slope of log H_m against log(1 + t) over t >= (1 - tail_fraction) T."""
    m = float(m)
    t = _times(records, minimum=2)
    H = _series(records, lambda r: r.Hk_sup[m], f"Hsup_{m:g}")
    if not np.all(np.isfinite(H)) or np.any(H <= 0):
        raise ValueError("H_m must be finite and positive")
    sel = t >= (1.0 - tail_fraction) * t[-1]
    if sel.sum() < 2:
        raise ValueError("the tail holds fewer than two records")
    x = np.log1p(t[sel])
    y = np.log(H[sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def check_polynomial_bound(records, m: float, table: ConstantsTable,
                           min_length: float = 2.0) -> InequalityReport:
    """Fitted tail exponent of H_m(t) against the explicit growth exponent c0(m)."""
    t = _times(records, minimum=2)
    if t[-1] - t[0] < min_length:
        raise ValueError(f"run length must be at least {min_length}")
    if not m < min(table.m0, 7.0):
        raise ValueError("need m < min(m0, 7)")
    slope = loglog_slope(records, m)
    return InequalityReport("polynomial_bound", slope <= table.c0_m, slope / table.c0_m,
                            {"m": m, "slope": slope, "c0": table.c0_m},
                            {"t_end": float(t[-1]), "records": len(records)})


def linear_envelope(t, values, calibration_fraction: float = 0.5):
    """Slope a = max of values / t over 0 < t <= calibration_fraction * T and the
    pointwise ratios values / (a (1 + t)) over the whole run.

    Growth at most linear keeps every ratio below 1 whatever the run
    length; growth like t^p with p > 1 pushes the late ratios towards
    2^(p-1) T/(1+T).
    """
    t = np.asarray(t, float)
    y = np.asarray(values, float)
    rel = t - t[0]
    early = (rel > 0) & (rel <= calibration_fraction * rel[-1])
    if not early.any():
        raise ValueError("no records inside the calibration window")
    a = float(np.max(y[early] / rel[early]))
    if a <= 0:
        return a, np.where(y > 0, np.inf, 0.0)
    return a, y / (a * (1.0 + rel))


def check_virial(records, max_ratio: float = 1.2,
                 calibration_fraction: float = 0.5) -> InequalityReport:
    """Linear-in-time envelope of int |E(xi)| ds and of int sum w / |x - xi|^2 ds."""
    t = _times(records, minimum=2)
    out = {}
    worst = 0.0
    for name, getter in (("E_at_xi", lambda r: r.virial_E_integral),
                         ("inverse_square", lambda r: r.virial_inverse_sq)):
        a, ratios = linear_envelope(t, _series(records, getter, name), calibration_fraction)
        w = float(ratios.max())
        out[name] = {"slope": a, "max_ratio": w}
        worst = max(worst, w)
    out["max_ratio_allowed"] = max_ratio
    out["calibration_fraction"] = calibration_fraction
    return InequalityReport("virial", worst <= max_ratio, worst, out,
                            {"t_end": float(t[-1]), "records": len(records)})
