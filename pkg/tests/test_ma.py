import math

import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as si

from acx.core import Box, ScalarField, ja_structure, sq_norm, standard_structure
from acx.forms import FormCalculus
from acx.ma import (Region, RegularizationSchedule, bump, cap_constant, cap_schedule,
                    capped_pole, integrate, log_pole, ma_density_smooth, ma_measure,
                    pointmass_mass, quadrature_nodes, scaling_probe, singular_model,
                    smooth_pairing, sobolev_norm, sphere_rule, truncation_gap, wedge_pairing)

ST = FormCalculus.for_structure(standard_structure())


def ball_integral(fn, radius):
    nodes = quadrature_nodes(Region.ball(radius), method="radial")
    return integrate(fn, nodes)[0]


def test_sphere_rule_area_and_radial_volume():
    _, w = sphere_rule()
    assert w.sum() == pytest.approx(2 * math.pi ** 2, rel=1e-14)
    assert ball_integral(lambda x: 1.0 + 0.0 * x[0], 0.5) == pytest.approx(
        math.pi ** 2 / 2 * 0.5 ** 4, rel=1e-13)


def test_density_examples():
    P = np.random.default_rng(0).uniform(-0.5, 0.5, (50, 4))
    assert np.allclose(ma_density_smooth(sq_norm(), ST, P), 8.0)
    assert np.abs(ma_density_smooth(ScalarField.coordinate(0), ST, P)).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-0.3, 0.3))
def test_density_scales_quadratically(c, t):
    P = np.random.default_rng(1).uniform(-0.5, 0.5, (8, 4))
    u = ScalarField(lambda x: jnp.sum(x ** 2) + 0.3 * x[0] ** 2 * x[1] + t * x[2])
    cu = ScalarField(lambda x: c * (jnp.sum(x ** 2) + 0.3 * x[0] ** 2 * x[1]))
    assert np.allclose(ma_density_smooth(cu, ST, P), c ** 2 * ma_density_smooth(u, ST, P))


def test_wedge_pairing_examples():
    box = Box.cube(0.0, 0.7, 29)
    phi = bump(radius=0.6, power=6)
    mass = ball_integral(phi.fn, 0.6)
    q = sq_norm()
    z1 = ScalarField(lambda x: x[0] ** 2 + x[1] ** 2)
    assert wedge_pairing(q, q, phi, ST, box) == pytest.approx(8 * mass, rel=1e-2)
    assert wedge_pairing(q, z1, phi, ST, box) == pytest.approx(4 * mass, rel=1e-2)
    assert abs(wedge_pairing(ScalarField.coordinate(0), q, phi, ST, box)) < 1e-10
    assert smooth_pairing(q, q, phi, ST, box) == pytest.approx(8 * mass, rel=1e-2)


def test_wedge_pairing_support_check():
    box = Box.cube(0.0, 0.5, 9)
    with pytest.raises(ValueError):
        wedge_pairing(sq_norm(), sq_norm(), bump(radius=0.6), ST, box)


def test_single_member_cell_masses():
    box = Box.cube(0.0, 0.5, 9)
    sched = RegularizationSchedule([sq_norm()])
    res = ma_measure(sched, ST, Region(), box)
    assert np.allclose(res.table.masses, 8 * box.cell_volume)


def test_cap_schedule_converges_to_pi_squared():
    res = ma_measure(cap_schedule([4, 8, 16, 32]), ST, Region.ball(0.2), method="radial")
    totals = [r["total_mass"] for r in res.log]
    assert abs(totals[-1] - math.pi ** 2) <= 0.02 * math.pi ** 2
    assert res.negative_mass >= -1e-8


def test_singular_model_examples():
    m = singular_model(0.0, 10.0)
    assert max(m.matching_residuals()) < 1e-12
    assert capped_pole(10.0)(jnp.array([0.1, 0, 0, 0])) == pytest.approx(-math.log(10.0))
    assert pointmass_mass(10.0, 0.0) == pytest.approx(m.closed_form_mass, rel=1e-9)
    m1 = singular_model(1.0, 10.0)
    assert m1.closed_form_mass == pytest.approx(math.pi ** 2 * 1.21)
    assert pointmass_mass(10.0, 1.0) == pytest.approx(math.pi ** 2 * 1.21, rel=1e-9)
    assert math.isfinite(cap_constant(10.0, 1.0))


def test_sobolev_examples():
    unit = Box.cube(0.0, 0.5, 5)
    n, val, grad = sobolev_norm(ScalarField.constant(1.0), ST, Region(), unit, parts=True)
    assert n == pytest.approx(1.0) and grad == 0.0
    r0, R = 1e-3, 0.5
    oracle = si.quad(lambda r: math.log(r) ** 2 * 2 * math.pi ** 2 * r ** 3, r0, R)[0] \
        + 0.5 * 2 * math.pi ** 2 * (R ** 2 - r0 ** 2) / 2
    got = sobolev_norm(log_pole(), ST, Region.ball(R, inner_radius=r0), method="radial")
    assert got == pytest.approx(math.sqrt(oracle), rel=1e-2)
    norms = [sobolev_norm(truncation_gap(j), ST, Region.ball(0.5), method="radial",
                          breakpoints=[math.exp(-j)]) for j in (1.0, 2.0, 4.0, 8.0)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_scaling_probe_examples():
    assert scaling_probe(sq_norm(), ST, np.zeros(4), [0.1, 0.2, 0.4]).exponent >= 1.7
    assert scaling_probe(ScalarField.constant(2.0), ST, np.zeros(4),
                         [0.1, 0.2, 0.4]).exponent == pytest.approx(2.0)
    box = Box.cube(0.0, 0.5, 5)
    ja = FormCalculus.for_structure(ja_structure(lambda p: 0.1 * p[0], box))
    assert scaling_probe(sq_norm(), ja, np.zeros(4), [0.1, 0.2, 0.4]).exponent >= 1.7
    with pytest.raises(ValueError):
        scaling_probe(sq_norm(), ST, np.zeros(4), [0.1, 0.2])


def test_cell_masses_on_ball_region():
    box = Box.cube(0.0, 0.5, 17)
    res = ma_measure(RegularizationSchedule([sq_norm()]), ST, Region.ball(0.4), box)
    n = len(res.table.masses)
    assert np.allclose(res.table.masses, 8 * box.cell_volume)
    assert res.table.total == pytest.approx(8 * n * box.cell_volume)


def test_smoothmax_schedule_mass_stabilizes():
    from acx.smoothing import smoothmax_schedule

    fields = [lambda x: jnp.sum(x ** 2) - 0.5, lambda x: 2 * jnp.sum(x ** 2) - 1.0]
    sched = smoothmax_schedule(fields, [0.2, 0.1, 0.05, 0.025])
    res = ma_measure(sched, ST, Region(), Box.cube(0.0, 1.0, 17))
    totals = [r["total_mass"] for r in res.log]
    assert abs(totals[-1] - totals[-2]) <= 0.01 * abs(totals[-1])
