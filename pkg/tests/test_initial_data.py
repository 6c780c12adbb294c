import math
from dataclasses import replace

import numpy as np
import pytest

from vpcharge.initial_data import (DensityProfile, DivergentMomentError, SamplingError, evaluate,
                                   hole_ramp, initial_moment, sample, total_mass,
                                   velocity_moment_quadrature, with_mass)

S, TH = 0.8, 0.6   # spatial radius, temperature of the reference bump


def _bump(**kw):
    return DensityProfile("maxwellian_bump", spatial_radius=S, velocity_temperature=TH, **kw)


def _gauss_mass():
    return (2 * math.pi * S * S) ** 1.5 * (2 * math.pi * TH) ** 1.5


def test_mass_closed_form():
    assert total_mass(_bump()) == pytest.approx(_gauss_mass(), rel=1e-8)


def test_second_moment_closed_form():
    # charge at the centre: int (|v|^2 + 1/r) f = mass 3 theta + (2 pi theta)^(3/2) 4 pi s^2
    ref = _gauss_mass() * 3 * TH + (2 * math.pi * TH) ** 1.5 * 4 * math.pi * S * S
    est = initial_moment(_bump(), 2.0)
    assert est.value == pytest.approx(ref, rel=1e-5)
    assert len(est.levels) == 3 and est.error < 1e-4 * ref


def test_fourth_moment_closed_form():
    # (|v|^2 + 1/r)^2 = |v|^4 + 2|v|^2/r + 1/r^2
    vel = (2 * math.pi * TH) ** 1.5
    ref = (_gauss_mass() * 15 * TH ** 2
           + 2 * 3 * TH * vel * 4 * math.pi * S * S
           + vel * 4 * math.pi * S * math.sqrt(math.pi / 2))
    assert initial_moment(_bump(), 4.0).value == pytest.approx(ref, rel=1e-5)


def test_off_centre_charge_moment_closed_form():
    # charge far from the bulk: the 1/r term of the m = 2 moment is the potential of a Gaussian
    prof = _bump(charge_position=(0.0, 0.0, 0.0), spatial_center=(3.0, 0.0, 0.0))
    d = 3.0
    pot = _gauss_mass() * math.erf(d / (math.sqrt(2) * S)) / d
    ref = _gauss_mass() * 3 * TH + pot
    assert initial_moment(prof, 2.0).value == pytest.approx(ref, rel=1e-5)


def test_bump_sixth_moment_diverges():
    with pytest.raises(DivergentMomentError, match="m0"):
        initial_moment(_bump(), 6.0)


def test_power_vicinity_raises_admissible_order():
    prof = DensityProfile("power_vicinity", vicinity_exponent=1.0)
    assert prof.admissible_m0 == 8.0
    assert math.isfinite(initial_moment(prof, 7.0).value)
    with pytest.raises(DivergentMomentError):
        initial_moment(prof, 8.5)


def test_hole_makes_every_moment_finite():
    prof = _bump(epsilon_hole=0.2)
    assert prof.admissible_m0 == math.inf
    assert initial_moment(prof, 10.0).value > 0


def test_hole_ramp_shape():
    r = np.array([0.0, 0.1, 0.2, 0.3, 0.4, 1.0])
    np.testing.assert_allclose(hole_ramp(r, 0.2), [0, 0, 0, 0.5, 1, 1])
    np.testing.assert_array_equal(hole_ramp(r, 0.0), np.ones(6))


def test_evaluate_pointwise():
    prof = _bump(amplitude=2.0)
    x = np.array([0.3, 0.0, 0.4])
    v = np.array([0.0, 1.0, 0.0])
    ref = 2.0 * math.exp(-0.25 / (2 * S * S)) * math.exp(-1.0 / (2 * TH))
    assert evaluate(prof, x, v) == pytest.approx(ref, rel=1e-14)
    assert evaluate(_bump(epsilon_hole=0.5), x, v) == 0.0


@pytest.mark.parametrize("kw", [dict(kind="gaussian"), dict(kind="maxwellian_bump", spatial_radius=0),
                                dict(kind="maxwellian_bump", epsilon_hole=-1),
                                dict(kind="maxwellian_bump", spatial_center=(0, 0))])
def test_profile_validation(kw):
    with pytest.raises(ValueError):
        DensityProfile(**kw)


def test_velocity_moment_quadrature():
    prof = _bump()
    assert velocity_moment_quadrature(prof, 2.0) == pytest.approx(_gauss_mass() * 3 * TH, rel=1e-8)
    assert velocity_moment_quadrature(prof, 4.0) == pytest.approx(_gauss_mass() * 15 * TH ** 2, rel=1e-8)


def test_with_mass():
    prof = with_mass(_bump(epsilon_hole=0.1), 0.3)
    assert total_mass(prof) == pytest.approx(0.3, rel=1e-8)
    with pytest.raises(ValueError):
        with_mass(prof, -1)


def test_sample_is_deterministic_and_respects_hole():
    prof = _bump(epsilon_hole=0.3)
    a = sample(prof, 2000, seed=5, mass=0.5)
    b = sample(prof, 2000, seed=5, mass=0.5)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert np.linalg.norm(a.positions, axis=1).min() > 0.3
    assert a.total_mass == pytest.approx(0.5, rel=1e-14)
    assert np.all(a.weights == 0.5 / 2000)


def test_sample_statistics():
    ens = sample(_bump(), 20000, seed=2)
    assert ens.total_mass == pytest.approx(_gauss_mass(), rel=1e-8)
    v2 = np.sum(ens.velocities ** 2, axis=1)
    # mean of |v|^2 is 3 theta with standard error sqrt(6/N) theta
    assert abs(v2.mean() - 3 * TH) < 5 * math.sqrt(6 / 20000) * TH


def test_sample_detects_hopeless_envelope():
    prof = DensityProfile("power_vicinity", vicinity_exponent=300.0)
    with pytest.raises(SamplingError, match="acceptance"):
        sample(prof, 10, seed=0)
    with pytest.raises(ValueError):
        sample(_bump(), 0, seed=0)


def test_replace_keeps_validation():
    with pytest.raises(ValueError):
        replace(_bump(), velocity_temperature=-1.0)


def test_peak_value_is_amplitude():
    prof = DensityProfile("maxwellian_bump", amplitude=1.7, charge_position=(5.0, 0, 0))
    assert evaluate(prof, prof.spatial_center, np.zeros(3)) == pytest.approx(1.7, rel=1e-15)


def test_power_vicinity_at_twice_the_hole():
    eps = 0.2
    prof = DensityProfile("power_vicinity", vicinity_exponent=1.0, epsilon_hole=eps, amplitude=2.0)
    x = np.array([0.0, 2 * eps, 0.0])
    # ramp is 1 at 2 eps, g = r/(1+r), Gaussian factor exp(-r^2/2)
    ref = 2.0 * math.exp(-0.5 * (2 * eps) ** 2) * (2 * eps) / (1 + 2 * eps)
    assert evaluate(prof, x, np.zeros(3)) == pytest.approx(ref, rel=1e-14)
    assert evaluate(prof, [0.0, 0.5 * eps, 0.0], np.zeros(3)) == 0.0


def test_zeroth_moment_is_mass():
    prof = _bump(epsilon_hole=0.2)
    assert initial_moment(prof, 0.0).value == pytest.approx(total_mass(prof), rel=1e-6)


def test_moment_with_hole_stable_under_refinement():
    est = initial_moment(_bump(epsilon_hole=0.2), 6.5)
    assert math.isfinite(est.value) and est.error <= 1e-3 * est.value
