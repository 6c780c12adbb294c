import math
import warnings

import numpy as np
import pytest

from vpcharge import constants as cst
from vpcharge.core import (ChargeState, ConstantsTable, GridField, GridSpec, HypothesisWarning,
                           Interaction, ParticleEnsemble, SimState, empirical_hypothesis_moment,
                           validate_theorem_hypotheses)


def _ens(n=4, seed=0, w=0.1):
    rng = np.random.default_rng(seed)
    return ParticleEnsemble(rng.normal(size=(n, 3)) + 3.0, rng.normal(size=(n, 3)), np.full(n, w))


def test_ensemble_basic():
    ens = _ens()
    assert ens.N == 4
    assert ens.total_mass == pytest.approx(0.4, rel=1e-15)
    with pytest.raises(ValueError):
        ens.weights[0] = 1.0


def test_moved_shares_weights():
    ens = _ens()
    other = ens.moved(ens.positions + 1, ens.velocities)
    assert other.weights is ens.weights


@pytest.mark.parametrize("pos,vel,w", [
    (np.zeros((3, 2)), np.zeros((3, 3)), np.ones(3)),
    (np.zeros((3, 3)), np.zeros((2, 3)), np.ones(3)),
    (np.zeros((3, 3)), np.zeros((3, 3)), -np.ones(3)),
    (np.full((3, 3), np.nan), np.zeros((3, 3)), np.ones(3)),
])
def test_ensemble_validation(pos, vel, w):
    with pytest.raises(ValueError):
        ParticleEnsemble(pos, vel, w)


def test_empty_ensemble():
    ens = ParticleEnsemble(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
    assert ens.N == 0 and ens.total_mass == 0.0


def test_charge_and_interaction_validation():
    with pytest.raises(ValueError):
        ChargeState([0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        ChargeState([0, 0, np.inf], [0, 0, 0])
    with pytest.raises(ValueError):
        Interaction(softening=-1)
    with pytest.raises(ValueError):
        Interaction(min_distance=0)


def test_state_rejects_particle_on_charge():
    ens = ParticleEnsemble([[1.0, 2.0, 3.0]], [[0, 0, 0]], [1.0])
    with pytest.raises(ValueError, match="coincides"):
        SimState(0.0, ens, ChargeState([1.0, 2.0, 3.0], [0, 0, 0]))
    with pytest.raises(ValueError):
        SimState(-1.0, ens, ChargeState([0, 0, 0], [0, 0, 0]))


def test_grid_spec():
    g = GridSpec((0, 0, 0), 0.5, (3, 4, 5))
    assert g.cell_volume == 0.125
    np.testing.assert_allclose(g.upper, [1.0, 1.5, 2.0])
    X, Y, Z = g.node_coordinates()
    assert X.shape == (3, 4, 5) and Z[0, 0, -1] == 2.0
    for bad in [dict(origin=(0, 0), spacing=1, dims=(2, 2, 2)),
                dict(origin=(0, 0, 0), spacing=0, dims=(2, 2, 2)),
                dict(origin=(0, 0, 0), spacing=1, dims=(1, 2, 2))]:
        with pytest.raises(ValueError):
            GridSpec(**bad)


def test_grid_covering_contains_points():
    pts = np.random.default_rng(1).normal(size=(50, 3)) * [1, 2, 3]
    g = GridSpec.covering(pts, cells=16)
    assert np.all(pts >= np.asarray(g.origin)) and np.all(pts <= g.upper)
    capped = GridSpec.covering(pts, spacing=1e-3, max_cells=20)
    assert max(capped.dims) <= 23


def test_grid_field_shapes():
    g = GridSpec((0, 0, 0), 1.0, (2, 2, 2))
    with pytest.raises(ValueError):
        GridField(g.origin, 1.0, g.dims, np.zeros((2, 2, 3)), np.zeros((2, 2, 2, 3)))
    with pytest.raises(ValueError):
        GridField(g.origin, 1.0, g.dims, -np.ones((2, 2, 2)), np.zeros((2, 2, 2, 3)))
    gf = GridField(g.origin, 1.0, g.dims, np.ones((2, 2, 2)), np.zeros((2, 2, 2, 3)))
    assert gf.mass == 8.0 and gf.spec == g


def test_constants_table_invariants():
    tab = cst.constants_table(6, 7, 1)
    fields = tab.as_dict()
    fields.pop("lambda")
    kwargs = dict(fields, lam=1.0)
    ConstantsTable(**kwargs)
    for key, val in [("R_T", tab.R_T * 1.001), ("k", tab.k + 0.1), ("delta", tab.delta * 2),
                     ("K0", 99.0), ("lam", 1.5), ("gamma", 1.0)]:
        with pytest.raises(ValueError):
            ConstantsTable(**dict(kwargs, **{key: val}))


def test_hypothesis_moment_single_particle():
    ens = ParticleEnsemble([[2.0, 0, 0]], [[1.0, 1.0, 0]], [0.25])
    # (|v|^2 + 1/r)^(m/2) = (2 + 1/2)^2 for m = 4
    assert empirical_hypothesis_moment(ens, [0, 0, 0], 4) == pytest.approx(0.25 * 2.5 ** 2)


def test_validate_hypotheses_passes_quietly():
    tab = cst.constants_table(6, 7, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = validate_theorem_hypotheses(_ens(), ChargeState([0, 0, 0], [0, 0, 0]), tab)
    assert rep.passed and 6.0 in rep.moments


def test_validate_hypotheses_warns_on_heavy_plasma():
    tab = cst.constants_table(6, 7, 1, lam=0.5)
    with pytest.warns(HypothesisWarning, match="lambda"):
        rep = validate_theorem_hypotheses(_ens(w=0.2), ChargeState([0, 0, 0], [0, 0, 0]), tab)
    assert not rep.mass_below_lambda and not rep.passed


def test_validate_hypotheses_warns_on_infinite_moment():
    tab = cst.constants_table(6, 7, 1)
    ens = ParticleEnsemble([[1.0, 0, 0], [0.0, 0, 0]], np.zeros((2, 3)), [0.1, 0.1])
    with pytest.warns(HypothesisWarning, match="not finite"):
        rep = validate_theorem_hypotheses(ens, ChargeState([0, 0, 0], [0, 0, 0]), tab,
                                          m_values=[2.0])
    assert not rep.moments_finite
    assert math.isinf(rep.moments[2.0])


@pytest.mark.parametrize("mass,ok", [(0.5, True), (1.5, False)])
def test_mass_condition_against_unit_lambda(mass, ok):
    tab = cst.constants_table(6, 7, 1)
    ens = _ens(n=5, w=mass / 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        rep = validate_theorem_hypotheses(ens, ChargeState([0, 0, 0], [0, 0, 0]), tab)
    assert rep.mass_below_lambda is ok


def test_hypothesis_moment_particle_at_rest_unit_distance():
    ens = ParticleEnsemble([[0.0, 1.0, 0]], [[0.0, 0, 0]], [0.3])
    assert empirical_hypothesis_moment(ens, [0, 0, 0], 4) == pytest.approx(0.3, rel=1e-15)
