"""Scalar functionals tracked along a run: energy, energy and velocity
moments, density and field norms, and the virial integrals."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from .core import DiagnosticRecord, GridSpec, ParticleEnsemble, SimState
from .dynamics import with_forces
from .fields import SingularityError, deposit_cic, field_lq_norm, grid_field, interpolate_field

DEFAULT_RHO_P = (5.0 / 3.0,)
DEFAULT_E_Q = (2.5, 3.75)


def total_energy(state: SimState) -> float:
    """Kinetic energy of plasma and charge plus both interaction energies.

    The plasma self-energy is the halved pair double sum (softened like the
    force; the i = j self-energy is omitted).
    """
    with_forces(state)
    ens, ch, f = state.ensemble, state.charge, state.forces
    w = ens.weights
    kin = 0.5 * float(np.sum(w * np.sum(ens.velocities ** 2, axis=1)))
    kin_c = 0.5 * float(ch.eta @ ch.eta)
    if ens.N == 0:
        return kin_c
    if np.any(f.dist == 0) and state.interaction.charge_softening == 0:
        raise SingularityError("particle at the charge position")
    pair = 0.5 * float(np.sum(w * f.phi))
    eps2 = state.interaction.charge_softening ** 2
    inter = float(np.sum(w / np.sqrt(f.dist ** 2 + eps2)))
    return kin + kin_c + pair + inter


def _offset(state: SimState) -> float:
    if state.H0 is None:
        raise ValueError("the state carries no reference energy H(0)")
    M0 = state.M0
    if M0 <= 0:
        raise ValueError("microscopic energy needs a positive total mass")
    return state.H0 + 1.0 / M0 + 1.0


def micro_energies(state: SimState) -> np.ndarray:
    """h_i = |v_i - eta|^2/2 + 1/|x_i - xi| + H(0) + 1/M0 + 1 for every particle."""
    ens, ch = state.ensemble, state.charge
    d = np.linalg.norm(ens.positions - ch.xi, axis=1)
    if np.any(d == 0):
        raise SingularityError("particle at the charge position")
    dv = ens.velocities - ch.eta
    return 0.5 * np.sum(dv * dv, axis=1) + 1.0 / d + _offset(state)


def micro_energy(state: SimState, i: int) -> float:
    ens, ch = state.ensemble, state.charge
    d = float(np.linalg.norm(ens.positions[i] - ch.xi))
    if d == 0:
        raise SingularityError(f"particle {i} at the charge position")
    dv = ens.velocities[i] - ch.eta
    return 0.5 * float(dv @ dv) + 1.0 / d + _offset(state)


def energy_moment(state: SimState, k: float) -> float:
    """sum_i w_i h_i^(k/2)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if state.ensemble.N == 0:
        return 0.0
    return float(np.sum(state.ensemble.weights * micro_energies(state) ** (0.5 * k)))


def velocity_moment(state: SimState, k: float) -> float:
    """sum_i w_i |v_i|^k."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    ens = state.ensemble
    if ens.N == 0:
        return 0.0
    speed = np.linalg.norm(ens.velocities, axis=1)
    return float(np.sum(ens.weights * speed ** k))


def lp_norm_rho(state: SimState, grid: GridSpec, p: float) -> float:
    """(sum over nodes rho^p h^3)^(1/p) of the cloud-in-cell density."""
    if p < 1:
        raise ValueError("p must be at least 1")
    ens = state.ensemble
    rho = deposit_cic(ens.positions, ens.weights, grid)
    if math.isinf(p):
        return float(rho.max(initial=0.0))
    return float(np.sum(rho ** p) * grid.cell_volume) ** (1.0 / p)


def virial_integrands(state: SimState) -> tuple[float, float]:
    """(|E(xi)|, sum_i w_i / |x_i - xi|^2) at the current state."""
    with_forces(state)
    f = state.forces
    if state.ensemble.N == 0:
        return 0.0, 0.0
    return float(np.linalg.norm(f.E_xi)), float(np.sum(state.ensemble.weights / f.dist ** 2))


def virial_accumulate(state: SimState, record: DiagnosticRecord, dt: float) -> DiagnosticRecord:
    """Advance both running virial integrals over [t - dt, t] by the trapezoid rule.

    The integrand values at the previous call are kept in ``record.extra``;
    on the first call the current values stand in for them.
    """
    e_now, inv_now = virial_integrands(state)
    e_prev, inv_prev = record.extra.get("virial_prev", (e_now, inv_now))
    out = copy.copy(record)
    out.extra = dict(record.extra)
    out.t = state.t
    out.virial_E_integral = record.virial_E_integral + 0.5 * dt * (e_prev + e_now)
    out.virial_inverse_sq = record.virial_inverse_sq + 0.5 * dt * (inv_prev + inv_now)
    out.extra["virial_prev"] = (e_now, inv_now)
    return out


@dataclass
class FSupEstimate:
    value: float
    bin_x: float
    bin_v: float
    occupied_bins: int


def estimate_f_sup(ensemble: ParticleEnsemble, bin_x: float, bin_v: float) -> FSupEstimate:
    """Largest phase-space bin average of f: max over cubic 6D bins of mass / volume.

    This is a binned estimate, not the true supremum; it depends on the
    bin sizes, which are reported with it.
    """
    if ensemble.N == 0:
        return FSupEstimate(0.0, bin_x, bin_v, 0)
    keys = np.hstack([np.floor(ensemble.positions / bin_x), np.floor(ensemble.velocities / bin_v)])
    _, inv = np.unique(keys.astype(np.int64), axis=0, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=ensemble.weights)
    return FSupEstimate(float(mass.max()) / (bin_x ** 3 * bin_v ** 3), bin_x, bin_v, len(mass))


def fmt_order(q: float) -> str:
    return f"{q:g}"


def rho_column(p: float) -> str:
    if math.isclose(p, 5.0 / 3.0):
        return "rho_L5_3"
    return f"rho_L{fmt_order(p)}"


def timeseries_columns(moments, rho_p=DEFAULT_RHO_P, e_q=DEFAULT_E_Q) -> list[str]:
    """Column order of the time-series CSV."""
    cols = ["t", "mass", "energy", "eta_norm", "xi_norm", "min_dist"]
    for k in moments:
        ks = fmt_order(k)
        cols += [f"H_{ks}", f"Hsup_{ks}", f"M_{ks}", f"Msup_{ks}", f"E_L{fmt_order(k + 3)}"]
    cols += [rho_column(p) for p in rho_p]
    cols += [f"E_L{fmt_order(q)}" for q in e_q]
    cols += ["E_at_xi", "E_at_xi_grid", "virial_E_integral", "virial_inverse_sq"]
    return cols


class Recorder:
    """Builds DiagnosticRecords with running suprema over the recorded states."""

    def __init__(self, moments=(2, 4, 6), grid_cells: int = 32, grid_padding: float = 0.1,
                 rho_p=DEFAULT_RHO_P, e_q=DEFAULT_E_Q):
        self.moments = [float(k) for k in moments]
        self.grid_cells = grid_cells
        self.grid_padding = grid_padding
        self.rho_p = tuple(rho_p)
        self.e_q = tuple(e_q)
        self.Hsup: dict = {}
        self.Msup: dict = {}
        self.virial = DiagnosticRecord(t=0.0, mass=0.0, energy=0.0)
        self.records: list[DiagnosticRecord] = []

    @property
    def columns(self) -> list[str]:
        return timeseries_columns(self.moments, self.rho_p, self.e_q)

    def advance(self, state: SimState, dt: float) -> None:
        """Accumulate the virial integrals; call after every step."""
        self.virial = virial_accumulate(state, self.virial, dt)

    def record(self, state: SimState) -> DiagnosticRecord:
        with_forces(state)
        if not self.records and "virial_prev" not in self.virial.extra:
            self.virial = virial_accumulate(state, self.virial, 0.0)
        ens, ch = state.ensemble, state.charge
        pts = np.vstack([ens.positions, ch.xi[None]])
        spec = GridSpec.covering(pts, cells=self.grid_cells, padding=self.grid_padding)
        gf = grid_field(ens, spec)
        Hk, Mk, E_norms = {}, {}, {}
        for k in self.moments:
            Hk[k] = energy_moment(state, k)
            Mk[k] = velocity_moment(state, k)
            self.Hsup[k] = max(self.Hsup.get(k, -math.inf), Hk[k])
            self.Msup[k] = max(self.Msup.get(k, -math.inf), Mk[k])
            E_norms[k + 3] = field_lq_norm(gf, k + 3)
        for q in self.e_q:
            E_norms[q] = field_lq_norm(gf, q)
        lp = {p: lp_norm_rho(state, spec, p) for p in self.rho_p}
        e_xi = float(np.linalg.norm(state.forces.E_xi))
        e_xi_grid = float(np.linalg.norm(interpolate_field(gf, ch.xi[None])[0]))
        rec = DiagnosticRecord(
            t=state.t, mass=state.M0, energy=total_energy(state), Hk=Hk, Mk=Mk,
            Hk_sup=dict(self.Hsup), Mk_sup=dict(self.Msup), lp_rho=lp, E_norms=E_norms,
            E_at_xi=e_xi, virial_E_integral=self.virial.virial_E_integral,
            virial_inverse_sq=self.virial.virial_inverse_sq,
            extra={"eta_norm": float(np.linalg.norm(ch.eta)),
                   "xi_norm": float(np.linalg.norm(ch.xi)),
                   "min_dist": float(state.forces.dist.min(initial=math.inf)),
                   "E_at_xi_grid": e_xi_grid},
        )
        self.records.append(rec)
        return rec

    def row(self, rec: DiagnosticRecord) -> list[float]:
        vals = [rec.t, rec.mass, rec.energy, rec.extra["eta_norm"], rec.extra["xi_norm"],
                rec.extra["min_dist"]]
        for k in self.moments:
            vals += [rec.Hk[k], rec.Hk_sup[k], rec.Mk[k], rec.Mk_sup[k], rec.E_norms[k + 3]]
        vals += [rec.lp_rho[p] for p in self.rho_p]
        vals += [rec.E_norms[q] for q in self.e_q]
        vals += [rec.E_at_xi, rec.extra["E_at_xi_grid"], rec.virial_E_integral,
                 rec.virial_inverse_sq]
        return vals
