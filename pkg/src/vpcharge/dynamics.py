"""Time stepping of the plasma/charge system and backward external-field flows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .core import ChargeState, ConstantsTable, ForceCache, Interaction, SimState
from .fields import ExternalField, pairwise_field_and_potential

DEFAULT_SUBSTEP_TOL = 1e-7
MAX_SUBSTEP_LEVELS = 20


class CloseEncounterError(RuntimeError):
    """A particle came closer to the charge than the hard distance floor."""


class FlowInversionError(np.linalg.LinAlgError):
    """A Jacobian block of the backward flow could not be inverted."""


# ---------------------------------------------------------------------------
# Forward particle dynamics
# ---------------------------------------------------------------------------

def default_softening(positions, weights=None) -> float:
    """Half the mean interparticle distance (V / N)^(1/3).

    V is the volume of the ball whose radius is the rms distance to the
    centroid of the cloud.
    """
    pos = np.asarray(positions, float).reshape(-1, 3)
    n = len(pos)
    if n < 2:
        return 0.0
    r2 = np.mean(np.sum((pos - pos.mean(axis=0)) ** 2, axis=1))
    vol = 4.0 / 3.0 * math.pi * r2 ** 1.5
    return 0.5 * (vol / n) ** (1.0 / 3.0)


def compute_forces(positions, weights, xi, interaction: Interaction) -> ForceCache:
    pos = np.asarray(positions, float)
    w = np.asarray(weights, float)
    E, phi = pairwise_field_and_potential(pos, w, interaction.softening)
    z = pos - xi
    r2 = np.sum(z * z, axis=1)
    s2 = r2 + interaction.charge_softening ** 2
    F = z / (s2 * np.sqrt(s2))[:, None] if len(pos) else np.zeros((0, 3))
    E_xi = -(w[:, None] * F).sum(axis=0) if len(pos) else np.zeros(3)
    return ForceCache(E=E, phi=phi, F=F, E_xi=E_xi, dist=np.sqrt(r2))


def with_forces(state: SimState) -> SimState:
    if state.forces is None:
        state.forces = compute_forces(state.ensemble.positions, state.ensemble.weights,
                                      state.charge.xi, state.interaction)
    return state


def initial_state(ensemble, charge: ChargeState, interaction: Interaction | None = None,
                  t: float = 0.0) -> SimState:
    """State with forces cached and the reference energy H(0) recorded."""
    from .diagnostics import total_energy

    st = SimState(t=t, ensemble=ensemble, charge=charge,
                  interaction=interaction or Interaction())
    with_forces(st)
    st.H0 = total_energy(st)
    return st


def _micro(v, eta, dist):
    dv = v - eta
    return 0.5 * np.sum(dv * dv, axis=-1) + 1.0 / dist


@dataclass
class StepStats:
    flagged: int = 0
    max_level: int = 0


def step(state: SimState, dt: float, substep_tol: float = DEFAULT_SUBSTEP_TOL,
         stats: StepStats | None = None) -> SimState:
    """One kick-drift-kick velocity-Verlet step of particles and charge.

    Particles whose microscopic energy change departs from its midpoint
    prediction dt (v - eta).(E(x) - E(xi)) by more than ``substep_tol * h``
    are re-integrated with 2, 4, ... substeps (at most 2^20) against the
    charge trajectory of the outer step, until two successive levels agree.
    The charge absorbs the resulting momentum change so that total
    momentum is conserved.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    with_forces(state)
    ens, ch, it = state.ensemble, state.charge, state.interaction
    f = state.forces
    w = ens.weights
    x0, v0 = ens.positions, ens.velocities
    half = 0.5 * dt

    v_half = v0 + half * (f.E + f.F)
    eta_half = ch.eta + half * f.E_xi
    x1 = x0 + dt * v_half
    xi1 = ch.xi + dt * eta_half
    f1 = compute_forces(x1, w, xi1, it)
    v1 = v_half + half * (f1.E + f1.F)
    eta1 = eta_half + half * f1.E_xi

    n = ens.N
    if n:
        h0 = _micro(v0, ch.eta, f.dist)
        h1 = _micro(v1, eta1, f1.dist)
        pred = dt * np.sum((v_half - eta_half) * (0.5 * (f.E + f1.E) - 0.5 * (f.E_xi + f1.E_xi)), axis=1)
        dev = np.abs(h1 - h0 - pred)
        flagged = np.flatnonzero((dev > substep_tol * h0) | (f1.dist < it.min_distance))
    else:
        flagged = np.zeros(0, dtype=np.int64)

    if len(flagged):
        x1, v1, eta1, f1 = _substep(flagged, x0, v0, x1, v1, eta1, f, f1, ch, xi1, w,
                                    dt, it, substep_tol, stats)
    if n and f1.dist.min() < it.min_distance:
        i = int(np.argmin(f1.dist))
        raise CloseEncounterError(
            f"particle {i} at distance {f1.dist[i]:.3e} from the charge (floor {it.min_distance:g}); "
            "reduce dt or enlarge the hole of the initial profile")
    new = SimState(t=state.t + dt, ensemble=ens.moved(x1, v1), charge=ChargeState(xi1, eta1),
                   interaction=it, H0=state.H0)
    new.forces = f1
    return new


def _substep(idx, x0, v0, x1, v1, eta1, f0, f1, ch, xi1, w, dt, it, tol, stats):
    x1 = x1.copy()
    v1 = v1.copy()
    eps2c = it.charge_softening ** 2
    floor = it.min_distance
    E0 = np.ascontiguousarray(f0.E)
    E1 = np.ascontiguousarray(f1.E)
    A0 = np.ascontiguousarray(f0.E_xi)
    dp = np.zeros(3)
    new_pos = {}
    for i in idx:
        prev_x, prev_v = x1[i], v1[i]
        prev_h = None
        level = 0
        for level in range(1, MAX_SUBSTEP_LEVELS + 1):
            xs, vs, rmin = kernels.substep_particle(
                x0[i], v0[i], E0[i], E1[i], ch.xi, ch.eta, A0, dt, 2 ** level, eps2c, floor)
            if rmin < floor:
                raise CloseEncounterError(
                    f"particle {i} reached distance {rmin:.3e} from the charge within a step "
                    f"(floor {floor:g}); reduce dt or enlarge the hole of the initial profile")
            dist = float(np.linalg.norm(xs - xi1))
            h = 0.5 * float(np.sum((vs - eta1) ** 2)) + 1.0 / dist
            if prev_h is None:
                dist_prev = float(np.linalg.norm(prev_x - xi1))
                prev_h = 0.5 * float(np.sum((prev_v - eta1) ** 2)) + 1.0 / max(dist_prev, floor)
            converged = abs(h - prev_h) <= tol * h
            prev_h, prev_x, prev_v = h, xs, vs
            if converged:
                break
        if stats is not None:
            stats.flagged += 1
            stats.max_level = max(stats.max_level, level)
        dp += w[i] * (prev_v - v1[i])
        v1[i] = prev_v
        new_pos[i] = prev_x
    eta1 = eta1 - dp

    # move particles and update the cached plasma field incrementally
    xs_, ys_, zs_ = (np.ascontiguousarray(x1[:, a]) for a in range(3))
    E = f1.E.copy()
    ex, ey, ez = (np.ascontiguousarray(E[:, a]) for a in range(3))
    phi = f1.phi.copy()
    eps2 = it.softening ** 2
    for i in idx:
        kernels.move_particle_update(xs_, ys_, zs_, w, eps2, int(i), new_pos[i], ex, ey, ez, phi)
    x1 = np.stack([xs_, ys_, zs_], axis=1)
    z = x1 - xi1
    r2 = np.sum(z * z, axis=1)
    s2 = r2 + eps2c
    F = z / (s2 * np.sqrt(s2))[:, None]
    E_xi = -(w[:, None] * F).sum(axis=0)
    f1 = ForceCache(E=np.stack([ex, ey, ez], axis=1), phi=phi, F=F, E_xi=E_xi, dist=np.sqrt(r2))
    return x1, v1, eta1, f1


def reverse(state: SimState) -> SimState:
    """Flip all velocities; stepping a reversed state runs time backwards."""
    ens = state.ensemble
    st = SimState(t=state.t, ensemble=ens.moved(ens.positions, -ens.velocities),
                  charge=ChargeState(state.charge.xi, -state.charge.eta),
                  interaction=state.interaction, H0=state.H0)
    if state.forces is not None:
        st.forces = state.forces
    return st


# ---------------------------------------------------------------------------
# Backward flow of the external field and its Jacobians
# ---------------------------------------------------------------------------

FieldFn = Callable[[float, np.ndarray], tuple]


def stationary(fn) -> FieldFn:
    """Wrap a time-independent field X -> (G, DG) as (tau, X) -> (G, DG)."""
    return lambda tau, X: fn(X)


def zero_field(tau, X):
    X = np.asarray(X).reshape(-1, 3)
    return np.zeros_like(X), np.zeros((len(X), 3, 3))


def linear_field(A) -> FieldFn:
    """G(x) = A x with constant Jacobian A."""
    A = np.asarray(A, float)
    return lambda tau, X: (np.asarray(X).reshape(-1, 3) @ A.T,
                           np.broadcast_to(A, (len(np.asarray(X).reshape(-1, 3)), 3, 3)).copy())


@dataclass
class FlowProbe:
    t: float
    s: float
    x: np.ndarray
    v: np.ndarray
    X: np.ndarray
    V: np.ndarray
    DxX: np.ndarray
    DvX: np.ndarray
    DxV: np.ndarray
    DvV: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    P4: np.ndarray
    P5: np.ndarray
    P6: np.ndarray
    M_mat: np.ndarray
    N_mat: np.ndarray
    d2X: np.ndarray | None = field(default=None, repr=False)
    d2V: np.ndarray | None = field(default=None, repr=False)

    @property
    def jacobian(self) -> np.ndarray:
        return np.block([[self.DxX, self.DvX], [self.DxV, self.DvV]])


def _flow_rhs(t, P, ext_field):
    def rhs(s, y):
        Y = y.reshape(P, 42)
        X, V = Y[:, 0:3], Y[:, 3:6]
        A = Y[:, 6:15].reshape(P, 3, 3)
        B = Y[:, 15:24].reshape(P, 3, 3)
        C = Y[:, 24:33].reshape(P, 3, 3)
        D = Y[:, 33:42].reshape(P, 3, 3)
        G, DG = ext_field(t - s, X)
        out = np.empty_like(Y)
        out[:, 0:3] = -V
        out[:, 3:6] = -G
        out[:, 6:15] = -C.reshape(P, 9)
        out[:, 15:24] = -D.reshape(P, 9)
        out[:, 24:33] = -(DG @ A).reshape(P, 9)
        out[:, 33:42] = -(DG @ B).reshape(P, 9)
        return out.ravel()
    return rhs


def _integrate(t, s_grid, x, v, ext_field, rtol, atol):
    P = len(x)
    y0 = np.zeros((P, 42))
    y0[:, 0:3] = x
    y0[:, 3:6] = v
    eye = np.eye(3).ravel()
    y0[:, 6:15] = eye
    y0[:, 33:42] = eye
    s_arr = np.asarray(s_grid, float)
    s_max = float(s_arr.max()) if len(s_arr) else 0.0
    if s_max == 0.0:
        return np.repeat(y0[None], len(s_arr), axis=0)
    sol = solve_ivp(_flow_rhs(t, P, ext_field), (0.0, s_max), y0.ravel(), method="DOP853",
                    t_eval=np.unique(s_arr), rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"backward flow integration failed: {sol.message}")
    ys = sol.y.T.reshape(-1, P, 42)
    lookup = {s: k for k, s in enumerate(np.unique(s_arr))}
    return np.stack([ys[lookup[s]] for s in s_arr])


def _derived(t, s, x, v, Y) -> FlowProbe:
    X, V = Y[0:3], Y[3:6]
    A = Y[6:15].reshape(3, 3)
    B = Y[15:24].reshape(3, 3)
    C = Y[24:33].reshape(3, 3)
    D = Y[33:42].reshape(3, 3)
    eye = np.eye(3)
    zero = np.zeros((3, 3))
    if s == 0:
        return FlowProbe(t, s, x, v, X, V, A, B, C, D, A - eye, zero, zero, zero, zero, zero,
                         eye.copy(), zero.copy())
    try:
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise FlowInversionError(
            f"D_xX is singular at s={s}: the bound |(D_xX)^-1| <= 2 fails") from exc
    Minv = D - C @ Ainv @ B
    try:
        M = np.linalg.inv(Minv)
    except np.linalg.LinAlgError as exc:
        raise FlowInversionError(
            f"D_vV - D_xV (D_xX)^-1 D_vX is singular at s={s}: the bound |M| <= 2 fails") from exc
    N = Ainv @ B @ M
    return FlowProbe(
        t=t, s=s, x=x, v=v, X=X, V=V, DxX=A, DvX=B, DxV=C, DvV=D,
        P1=A - eye, P2=-B / s - eye, P3=C / s, P4=(D - eye) / s, P5=(Minv - eye) / s,
        P6=N / s, M_mat=M, N_mat=N)


def backward_flow(t: float, s_grid: Sequence[float], x, v, ext_field: FieldFn,
                  rtol: float = 1e-10, atol: float = 1e-12, second_order: bool = False,
                  fd_step: float = 1e-4):
    """Integrate dX/ds = -V, dV/ds = -G(t - s, X) with its variational equations.

    ``x`` and ``v`` may be single 3-vectors (returns a list of FlowProbe,
    one per s) or (P, 3) batches (returns a list of such lists). With
    ``second_order`` the probes also carry central-difference second
    derivatives d2X[i, j, k] = d^2 X_i / dz_j dz_k over z = (x, v).
    """
    single = np.ndim(x) == 1
    xb = np.atleast_2d(np.asarray(x, float))
    vb = np.atleast_2d(np.asarray(v, float))
    s_arr = np.asarray(s_grid, float)
    if np.any(s_arr < 0) or np.any(s_arr > t):
        raise ValueError("every s must lie in [0, t]")
    P = len(xb)
    if second_order:
        zs = [np.hstack([xb, vb])]
        for k in range(6):
            e = np.zeros(6)
            e[k] = fd_step
            zs.append(zs[0] + e)
            zs.append(zs[0] - e)
        z_all = np.vstack(zs)
        Y = _integrate(t, s_arr, z_all[:, :3], z_all[:, 3:], ext_field, rtol, atol)
    else:
        Y = _integrate(t, s_arr, xb, vb, ext_field, rtol, atol)
    out = []
    for p in range(P):
        probes = []
        for k, s in enumerate(s_arr):
            pr = _derived(t, float(s), xb[p].copy(), vb[p].copy(), Y[k, p])
            if second_order:
                d2 = np.empty((6, 6, 6))   # [component of (X, V), j, k]
                for kk in range(6):
                    yp = Y[k, P * (1 + 2 * kk) + p]
                    ym = Y[k, P * (2 + 2 * kk) + p]
                    jp = _jac6(yp)
                    jm = _jac6(ym)
                    d2[:, :, kk] = (jp - jm) / (2 * fd_step)
                pr.d2X = d2[:3]
                pr.d2V = d2[3:]
            probes.append(pr)
        out.append(probes)
    return out[0] if single else out


def _jac6(Y):
    A = Y[6:15].reshape(3, 3)
    B = Y[15:24].reshape(3, 3)
    C = Y[24:33].reshape(3, 3)
    D = Y[33:42].reshape(3, 3)
    return np.block([[A, B], [C, D]])


class FieldHistory:
    """E_ext + F_ext of a stored run, interpolated in time.

    Positions of particles and charge between snapshots use cubic Hermite
    interpolation with the stored velocities; the field and its Jacobian
    at the interpolated sources use the masked kernel with radius R.
    """

    def __init__(self, times, positions, velocities, xis, etas, weights, R: float,
                 softening: float = 0.0, charge_softening: float = 0.0):
        self.times = np.asarray(times, float)
        if len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("field history needs at least two increasing snapshot times")
        self.positions = [np.asarray(p, float) for p in positions]
        self.velocities = [np.asarray(p, float) for p in velocities]
        self.xis = np.asarray(xis, float)
        self.etas = np.asarray(etas, float)
        self.weights = np.asarray(weights, float)
        self.R = float(R)
        self.softening = softening
        self.charge_softening = charge_softening
        self._cache_tau = None
        self._cache_field = None

    def with_radius(self, R: float) -> "FieldHistory":
        other = FieldHistory.__new__(FieldHistory)
        other.__dict__.update(self.__dict__)
        other.R = float(R)
        other._cache_tau = None
        other._cache_field = None
        return other

    @staticmethod
    def _hermite(tau, t0, t1, p0, v0, p1, v1):
        h = t1 - t0
        u = (tau - t0) / h
        h00 = 2 * u ** 3 - 3 * u ** 2 + 1
        h10 = u ** 3 - 2 * u ** 2 + u
        h01 = -2 * u ** 3 + 3 * u ** 2
        h11 = u ** 3 - u ** 2
        return h00 * p0 + h10 * h * v0 + h01 * p1 + h11 * h * v1

    def sources_at(self, tau: float):
        T = self.times
        tau = min(max(tau, T[0]), T[-1])
        k = int(np.clip(np.searchsorted(T, tau, side="right") - 1, 0, len(T) - 2))
        pos = self._hermite(tau, T[k], T[k + 1], self.positions[k], self.velocities[k],
                            self.positions[k + 1], self.velocities[k + 1])
        xi = self._hermite(tau, T[k], T[k + 1], self.xis[k], self.etas[k],
                           self.xis[k + 1], self.etas[k + 1])
        return pos, xi

    def field_at_time(self, tau: float) -> ExternalField:
        if self._cache_tau != tau:
            pos, xi = self.sources_at(tau)
            self._cache_field = ExternalField(self.R, pos, self.weights, xi,
                                              self.softening, self.charge_softening)
            self._cache_tau = tau
        return self._cache_field

    def __call__(self, tau, X):
        return self.field_at_time(float(tau))(X)


# ---------------------------------------------------------------------------
# Bound report
# ---------------------------------------------------------------------------

BOUND_NAMES = (
    "position_deviation", "velocity_deviation", "dv_jacobians", "dx_jacobians",
    "P1", "P2", "inverse_det_DvX", "inverse_DxX", "M", "N", "second_derivatives",
)
INFORMATIONAL = ("P3", "P4", "P5", "P6")


@dataclass
class FlowBoundReport:
    worst: dict
    worst_at: dict
    n_probes: int
    informational: dict

    def passed(self, tol: float = 1e-6) -> bool:
        return all(r <= 1.0 + tol for r in self.worst.values())

    def violated(self, tol: float = 1e-6) -> list:
        return [k for k, r in self.worst.items() if r > 1.0 + tol]

    def as_dict(self, tol: float = 1e-6) -> dict:
        return {"n_probes": self.n_probes, "worst_ratio": self.worst,
                "worst_at": self.worst_at, "informational": self.informational,
                "violated": self.violated(tol), "passed": self.passed(tol)}


def _opnorm(A):
    return float(np.linalg.norm(A, 2))


def probe_ratios(p: FlowProbe, table: ConstantsTable, f0_l1: float) -> dict:
    """LHS / RHS of every flow bound at one probe point (s = 0 terms skipped)."""
    R, T, K0 = table.R_T, table.T, table.K0
    c = 1.0 + f0_l1
    s = p.s
    out = {
        "dv_jacobians": (_opnorm(p.DvX) + _opnorm(p.DvV)) / (4 * (1 + T)),
        "dx_jacobians": (_opnorm(p.DxX) + _opnorm(p.DxV)) / (4 * (1 + T)),
        "P1": _opnorm(p.P1) * K0,
    }
    if s > 0:
        out["position_deviation"] = float(np.linalg.norm(p.X - (p.x - p.v * s))) / (c * s * s / (2 * R * R))
        out["velocity_deviation"] = float(np.linalg.norm(p.V - p.v)) / (c * s / (R * R))
        out["P2"] = _opnorm(p.P2) * K0
        out["inverse_det_DvX"] = (1.0 / abs(np.linalg.det(p.DvX))) / (8.0 / s ** 3)
        out["inverse_DxX"] = _opnorm(np.linalg.inv(p.DxX)) / 2.0
        out["M"] = _opnorm(p.M_mat) / 2.0
        out["N"] = _opnorm(p.N_mat) / (8.0 * s)
        small = min(1.0, 1.0 / T ** 2) if T > 0 else 1.0
        out["P3"] = _opnorm(p.P3) / (small / K0)
        out["P4"] = _opnorm(p.P4) / (small / K0)
        out["P5"] = _opnorm(p.P5) / ((1.0 + 4.0 * T) * small / K0)
        out["P6"] = _opnorm(p.P6) / 8.0
    if p.d2X is not None:
        nx = np.linalg.norm(p.d2X, axis=0)
        nv = np.linalg.norm(p.d2V, axis=0)
        out["second_derivatives"] = float((nx + nv).max()) / 2.0
    return out


def flow_bound_report(probes, table: ConstantsTable, f0_l1: float) -> FlowBoundReport:
    """Worst LHS/RHS ratio of each flow bound over all probes and times."""
    flat = []
    for item in probes:
        if isinstance(item, FlowProbe):
            flat.append(item)
        else:
            flat.extend(item)
    worst = {}
    worst_at = {}
    for k, p in enumerate(flat):
        for name, r in probe_ratios(p, table, f0_l1).items():
            if name not in worst or r > worst[name]:
                worst[name] = float(r)
                worst_at[name] = {"probe": k, "s": p.s}
    required = {k: worst[k] for k in BOUND_NAMES if k in worst}
    info = {k: worst[k] for k in INFORMATIONAL if k in worst}
    n_starts = len({(tuple(p.x), tuple(p.v)) for p in flat})
    return FlowBoundReport(required, worst_at, n_starts, info)
