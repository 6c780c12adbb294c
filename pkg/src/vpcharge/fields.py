"""Coulomb fields of the plasma and the point charge, their near/far split
and grid norms.

Kernel convention: E(x) = sum_j w_j (x - x_j)/|x - x_j|^3 with no 1/(4 pi)
factor, so the potential phi = sum_j w_j/|x - x_j| satisfies
-Laplacian(phi) = 4 pi rho and E = -grad(phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from . import kernels
from .core import GridField, GridSpec, ParticleEnsemble

# mean of 1/|x| over the unit cube centred at the origin
CUBE_SELF_POTENTIAL = 2.3800772

CHI0_GRAD_MAX = 1.875          # max |chi0'| attained at r = 1.5
CHI0_HESS_MAX = 10.0 / math.sqrt(3.0)  # max |chi0''| at p = 1/2 -+ 1/(2 sqrt 3)


class SingularityError(ValueError):
    """A field was requested at the location of a point source."""


def _soa(points):
    p = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3).T)
    return p[0], p[1], p[2]


# ---------------------------------------------------------------------------
# Cutoff
# ---------------------------------------------------------------------------

def chi0_radial(r):
    """chi0 as a function of |z|: 1 - S(r - 1) on (1, 2) with S(p) = 6p^5 - 15p^4 + 10p^3."""
    r = np.asarray(r, dtype=float)
    p = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - p ** 3 * (10.0 - 15.0 * p + 6.0 * p * p)


def chi0_radial_d1(r):
    r = np.asarray(r, dtype=float)
    p = np.clip(r - 1.0, 0.0, 1.0)
    return -30.0 * p * p * (1.0 - p) ** 2


def chi0_radial_d2(r):
    r = np.asarray(r, dtype=float)
    p = np.clip(r - 1.0, 0.0, 1.0)
    return -60.0 * p * (1.0 - p) * (1.0 - 2.0 * p)


@dataclass(frozen=True)
class CutoffSpec:
    """chi_R(z) = chi0(|z|/R) with the quintic smoothstep profile."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("cutoff radius must be positive")

    def chi(self, z):
        z = np.asarray(z, dtype=float)
        return chi0_radial(np.linalg.norm(z, axis=-1) / self.R)

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = chi0_radial_d1(r / self.R) / (self.R * r)
        g = np.where(r > 0, g, 0.0)
        return g[..., None] * z

    def hessian(self, z):
        """d^2 chi_R / dz_a dz_b = c2 zhat zhat^T + (c1/r)(I - zhat zhat^T)."""
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        zh = z / safe[..., None]
        c1 = chi0_radial_d1(r / self.R) / self.R
        c2 = chi0_radial_d2(r / self.R) / self.R ** 2
        outer = zh[..., :, None] * zh[..., None, :]
        eye = np.eye(3)
        return c2[..., None, None] * outer + (c1 / safe)[..., None, None] * (eye - outer)


def chi0_profile_bounds(samples: int = 200001) -> tuple[float, float]:
    """Dense-sampled sup of |grad chi0| and of the operator norm of its Hessian."""
    r = np.linspace(0.0, 3.0, samples)
    d1 = np.abs(chi0_radial_d1(r))
    d2 = np.abs(chi0_radial_d2(r))
    with np.errstate(divide="ignore", invalid="ignore"):
        tang = np.where(r > 0, d1 / r, 0.0)
    return float(d1.max()), float(np.maximum(d2, tang).max())


def cutoff_split(x, center, spec: CutoffSpec, value):
    """Pointwise split value = chi_R(x - center) value + (1 - chi_R) value."""
    x = np.asarray(x, dtype=float)
    value = np.asarray(value, dtype=float)
    c = spec.chi(x - np.asarray(center, dtype=float))
    internal = c[..., None] * value if value.ndim > c.ndim else c * value
    return internal, value - internal


# ---------------------------------------------------------------------------
# Direct sums
# ---------------------------------------------------------------------------

def charge_field(x, xi, softening: float = 0.0):
    """F(x) = (x - xi)/|x - xi|^3 for one point or an (N, 3) array."""
    z = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    r2 = np.sum(z * z, axis=-1)
    if softening == 0.0 and np.any(r2 == 0.0):
        raise SingularityError("charge field evaluated at the charge position")
    s2 = r2 + softening * softening
    return z / (s2 * np.sqrt(s2))[..., None]


def pairwise_field_and_potential(positions, weights, softening: float = 0.0):
    """Softened plasma self-field and potential at every particle (self term excluded)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if len(pos) == 0:
        return np.zeros((0, 3)), np.zeros(0)
    xs, ys, zs = _soa(pos)
    ex, ey, ez, phi, bad = kernels.pair_field(xs, ys, zs, w, float(softening) ** 2)
    if bad:
        raise SingularityError(f"{bad} coincident particle pair(s) with zero softening")
    return np.stack([ex, ey, ez], axis=1), phi


def pairwise_field(ensemble: ParticleEnsemble, softening: float = 0.0) -> np.ndarray:
    """E_i = sum_{j != i} w_j (x_i - x_j)/(|x_i - x_j|^2 + softening^2)^(3/2)."""
    return pairwise_field_and_potential(ensemble.positions, ensemble.weights, softening)[0]


def field_at(targets, positions, weights, softening: float = 0.0):
    """Field and potential of weighted sources at arbitrary target points."""
    tg = np.asarray(targets, dtype=float).reshape(-1, 3)
    if len(positions) == 0:
        return np.zeros((len(tg), 3)), np.zeros(len(tg))
    tx, ty, tz = _soa(tg)
    sx, sy, sz = _soa(positions)
    ex, ey, ez, phi, bad = kernels.target_field(
        tx, ty, tz, sx, sy, sz, np.ascontiguousarray(weights, dtype=np.float64),
        float(softening) ** 2)
    if bad:
        raise SingularityError("field evaluated on top of an unsoftened source")
    return np.stack([ex, ey, ez], axis=1), phi


def masked_sum(targets, sources, weights, softening, R: float, part: str, jacobian=False):
    """Sum of (masked) kernels over sources; part in {'full', 'internal', 'external'}.

    ``softening`` may be a scalar or one value per source.
    """
    codes = {"full": kernels.PART_FULL, "internal": kernels.PART_INTERNAL,
             "external": kernels.PART_EXTERNAL}
    tg = np.ascontiguousarray(np.asarray(targets, dtype=float).reshape(-1, 3))
    src = np.ascontiguousarray(np.asarray(sources, dtype=float).reshape(-1, 3))
    w = np.ascontiguousarray(weights, dtype=np.float64)
    eps2 = np.broadcast_to(np.asarray(softening, dtype=float) ** 2, (len(src),)).copy()
    E, J = kernels.masked_field(tg, src, w, eps2, float(R), codes[part], bool(jacobian))
    return (E, J) if jacobian else E


def split_pairwise_field(ensemble: ParticleEnsemble, spec: CutoffSpec, softening: float = 0.0):
    """(E_int, E_ext) at each particle with the per-pair mask chi_R(x_i - x_j).

    The diagonal i = j has zero displacement and contributes nothing.
    """
    pos = ensemble.positions
    e_int = masked_sum(pos, pos, ensemble.weights, softening, spec.R, "internal")
    e_ext = masked_sum(pos, pos, ensemble.weights, softening, spec.R, "external")
    return e_int, e_ext


class ExternalField:
    """E_ext + F_ext generated by fixed sources (a particle cloud and the charge).

    Calling it on (P, 3) points returns the field (P, 3) and its Jacobian
    (P, 3, 3).
    """

    def __init__(self, R: float, positions=None, weights=None, xi=None,
                 softening: float = 0.0, charge_softening: float = 0.0):
        pos = np.zeros((0, 3)) if positions is None else np.asarray(positions, float).reshape(-1, 3)
        w = np.zeros(0) if weights is None else np.asarray(weights, float).reshape(-1)
        eps = np.full(len(pos), float(softening))
        if xi is not None:
            pos = np.vstack([pos, np.asarray(xi, float).reshape(1, 3)])
            w = np.append(w, 1.0)
            eps = np.append(eps, float(charge_softening))
        self.R = float(R)
        self.sources = np.ascontiguousarray(pos)
        self.weights = np.ascontiguousarray(w)
        self.softening = eps

    def __call__(self, points):
        return masked_sum(points, self.sources, self.weights, self.softening, self.R,
                          "external", jacobian=True)

    def field(self, points):
        return self(points)[0]


@dataclass
class BoundsReport:
    samples: int
    fd_step: float
    value_ratio: float
    first_derivative_ratio: float
    second_derivative_ratio: float

    @property
    def worst_ratio(self) -> float:
        return max(self.value_ratio, self.first_derivative_ratio, self.second_derivative_ratio)

    def passed(self, tol: float = 1e-3) -> bool:
        return self.worst_ratio <= 1.0 + tol

    def as_dict(self) -> dict:
        return {"samples": self.samples, "fd_step": self.fd_step,
                "value_ratio": self.value_ratio,
                "first_derivative_ratio": self.first_derivative_ratio,
                "second_derivative_ratio": self.second_derivative_ratio,
                "worst_ratio": self.worst_ratio, "passed": self.passed()}


def _fd_jacobian(fun, pts, h):
    cols = []
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        cols.append((fun(pts + e) - fun(pts - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def ext_bounds_check(spec: CutoffSpec, f0_l1: float, samples: int, field: ExternalField | None = None,
                     points=None, seed: int = 0, fd_step: float | None = None) -> BoundsReport:
    """Componentwise check of the far-field bounds on random sample points.

    Without ``field`` the sources are the bare charge at the origin. Sample
    points are drawn at distances uniform in [0, 4R] from a random source
    (the charge when present) in uniformly random directions. First
    derivatives are central differences of the field with step
    ``fd_step`` (default 1e-3 R); second derivatives are central
    differences of that difference quotient.
    """
    if field is None:
        field = ExternalField(spec.R, xi=np.zeros(3))
    h = 1e-3 * spec.R if fd_step is None else float(fd_step)
    if points is None:
        rng = np.random.default_rng(seed)
        anchors = field.sources[rng.integers(len(field.sources), size=samples)]
        d = rng.normal(size=(samples, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        points = anchors + d * rng.uniform(0, 4 * spec.R, size=(samples, 1))
    pts = np.asarray(points, float).reshape(-1, 3)
    fun = field.field
    G = fun(pts)
    D1 = _fd_jacobian(fun, pts, h)
    D2 = np.stack([(_fd_jacobian(fun, pts + h * e, h) - _fd_jacobian(fun, pts - h * e, h)) / (2 * h)
                   for e in np.eye(3)], axis=-1)
    c = 1.0 + f0_l1
    R = spec.R
    return BoundsReport(
        samples=len(pts), fd_step=h,
        value_ratio=float(np.abs(G).max(initial=0.0) / (c / R ** 2)),
        first_derivative_ratio=float(np.abs(D1).max(initial=0.0) / (6 * c / R ** 3)),
        second_derivative_ratio=float(np.abs(D2).max(initial=0.0) / (60 * c / R ** 4)),
    )


# ---------------------------------------------------------------------------
# Grid solver
# ---------------------------------------------------------------------------

def _cic_weights(points, spec: GridSpec):
    g = (np.asarray(points, float).reshape(-1, 3) - np.asarray(spec.origin)) / spec.spacing
    dims = np.asarray(spec.dims)
    eps = 1e-9
    if np.any(g < -eps) or np.any(g > dims - 1 + eps):
        raise ValueError("points lie outside the grid")
    g = np.clip(g, 0.0, dims - 1)
    i0 = np.minimum(np.floor(g).astype(np.int64), dims - 2)
    frac = g - i0
    return i0, frac


def _corner_iter():
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                yield dx, dy, dz


def deposit_cic(positions, weights, spec: GridSpec) -> np.ndarray:
    """Cloud-in-cell density on the grid nodes (mass per unit volume)."""
    nx, ny, nz = spec.dims
    rho = np.zeros(nx * ny * nz)
    if len(weights) == 0:
        return rho.reshape(spec.dims)
    i0, f = _cic_weights(positions, spec)
    w = np.asarray(weights, float)
    for dx, dy, dz in _corner_iter():
        wx = f[:, 0] if dx else 1.0 - f[:, 0]
        wy = f[:, 1] if dy else 1.0 - f[:, 1]
        wz = f[:, 2] if dz else 1.0 - f[:, 2]
        idx = ((i0[:, 0] + dx) * ny + (i0[:, 1] + dy)) * nz + (i0[:, 2] + dz)
        rho += np.bincount(idx, weights=w * wx * wy * wz, minlength=rho.size)
    return rho.reshape(spec.dims) / spec.cell_volume


def interpolate_cic(values, spec: GridSpec, points) -> np.ndarray:
    """Trilinear interpolation of node values (..., dims) back to points."""
    i0, f = _cic_weights(points, spec)
    out = 0.0
    for dx, dy, dz in _corner_iter():
        wx = f[:, 0] if dx else 1.0 - f[:, 0]
        wy = f[:, 1] if dy else 1.0 - f[:, 1]
        wz = f[:, 2] if dz else 1.0 - f[:, 2]
        v = values[i0[:, 0] + dx, i0[:, 1] + dy, i0[:, 2] + dz]
        wt = wx * wy * wz
        out = out + (wt[:, None] * v if v.ndim == 2 else wt * v)
    return np.asarray(out)


def free_space_potential(rho: np.ndarray, spacing: float) -> np.ndarray:
    """phi = rho * 1/|x| on an unbounded domain (zero-padded FFT convolution).

    The singular self-cell value uses the cube average of 1/|x|.
    """
    dims = rho.shape
    big = tuple(2 * n for n in dims)
    axes = []
    for n2 in big:
        i = np.arange(n2)
        axes.append(np.minimum(i, n2 - i) * spacing)
    X, Y, Z = np.meshgrid(*axes, indexing="ij", sparse=True)
    r = np.sqrt(X * X + Y * Y + Z * Z)
    with np.errstate(divide="ignore"):
        green = 1.0 / r
    green[0, 0, 0] = CUBE_SELF_POTENTIAL / spacing
    phi = fft.irfftn(fft.rfftn(rho, big) * fft.rfftn(green), big)
    return phi[: dims[0], : dims[1], : dims[2]] * spacing ** 3


def grid_field(ensemble: ParticleEnsemble, grid: GridSpec) -> GridField:
    """Deposit, solve -Laplacian(phi) = 4 pi rho in free space and take E = -grad(phi)."""
    rho = deposit_cic(ensemble.positions, ensemble.weights, grid)
    if ensemble.N == 0 or not np.any(rho):
        z = np.zeros(grid.dims)
        return GridField(grid.origin, grid.spacing, grid.dims, rho, np.zeros(grid.dims + (3,)), z)
    phi = free_space_potential(rho, grid.spacing)
    grads = np.gradient(phi, grid.spacing, edge_order=2)
    E = -np.stack(grads, axis=-1)
    return GridField(grid.origin, grid.spacing, grid.dims, rho, E, phi)


def interpolate_field(gf: GridField, points) -> np.ndarray:
    return interpolate_cic(gf.E, gf.spec, points)


def field_lq_norm(gf: GridField, q: float) -> float:
    """(sum over nodes |E|^q h^3)^(1/q); the max node value for q = inf."""
    if q < 1:
        raise ValueError("q must be at least 1")
    mag = np.linalg.norm(gf.E, axis=-1)
    if math.isinf(q):
        return float(mag.max(initial=0.0))
    return float(np.sum(mag ** q) * gf.cell_volume) ** (1.0 / q)


def density_lp_norm(gf: GridField, p: float) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    if math.isinf(p):
        return float(gf.rho.max(initial=0.0))
    return float(np.sum(gf.rho ** p) * gf.cell_volume) ** (1.0 / p)
