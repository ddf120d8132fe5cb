import jax.numpy as jnp
import numpy as np
from hypothesis import given, settings, strategies as st

from acx.core import Box, ScalarField, ja_structure, sq_norm, standard_structure
from acx.forms import FormCalculus
from acx.grid import GridHessian
from acx.hessian import (i_ddbar, identity_residuals, iddbar_squared, iddbar_squared_direct_fn,
                         square_bound_probe, psh_check, random_form, random_polynomial, tj_field)
from acx.core import evaluate

BOX = Box.cube(0.0, 0.5, 5)
P = BOX.points()[::5]
ST = FormCalculus.for_structure(standard_structure(BOX))
JA_X1 = FormCalculus.for_structure(ja_structure(lambda p: p[0], BOX))
JA_X1X2 = FormCalculus.for_structure(ja_structure(lambda p: p[0] * p[2], BOX))


def test_standard_hessian_of_square_norm_is_4I():
    H = i_ddbar(sq_norm(), ST, P)
    assert np.allclose(H, 4 * np.eye(2), atol=1e-12)
    assert np.abs(i_ddbar(ScalarField.coordinate(0), ST, P)).max() < 1e-12


def test_hessian_formula_matches_grid_stencil():
    box = Box.cube(0.0, 0.5, 17)
    u = ScalarField(lambda x: x[2] + 0.3 * x[0] ** 2 * x[3] + jnp.sum(x ** 2))
    calc = FormCalculus.for_structure(ja_structure(lambda p: p[0], box))
    GH = GridHessian(box, calc)
    U = u.values(box.points()).reshape(box.shape)
    assert np.abs(GH.apply(U) - i_ddbar(u, calc, GH.points)).max() < 1e-2


def test_psh_examples():
    r = psh_check(sq_norm(), ST, P)
    assert r.is_strict and np.allclose(r.lambda_min, 4.0)
    r = psh_check(ScalarField(lambda x: x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2), ST, P)
    assert r.verdict == "not psh" and np.isclose(r.margin, -4.0)
    unit = Box.cube(0.0, 1.0, 5)
    calc = FormCalculus.for_structure(ja_structure(lambda p: 0.1 * p[0], unit))
    assert psh_check(sq_norm(), calc, unit.points()).is_strict


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hessian_is_hermitian(seed):
    H = i_ddbar(random_polynomial(seed), JA_X1X2, P[:8])
    assert np.abs(H - np.conj(np.swapaxes(H, 1, 2))).max() < 1e-10


def test_iddbar_squared_vanishes_when_integrable():
    u = random_polynomial(3)
    assert np.abs(iddbar_squared(u, ST, P)).max() < 1e-10
    calc = FormCalculus.for_structure(ja_structure(lambda p: p[2], BOX))
    assert np.abs(iddbar_squared(u, calc, P)).max() < 1e-10


def test_iddbar_squared_two_routes_agree():
    u = ScalarField(lambda x: x[2] + 0.5 * x[0] * x[3] ** 2)
    a = iddbar_squared(u, JA_X1X2, P)
    b = evaluate(iddbar_squared_direct_fn(u, JA_X1X2), P)
    assert np.abs(a - b).max() < 1e-9
    assert np.abs(a).max() > 1e-6


def test_tj_vanishes_for_integrable():
    assert np.abs(tj_field(ST, P).components).max() == 0.0
    calc = FormCalculus.for_structure(ja_structure(lambda p: p[3] ** 2, BOX))
    assert np.abs(tj_field(calc, P).components).max() < 1e-10


def test_identities_standard_and_non_integrable():
    forms = [random_form(1, 1, 5), random_form(1, 0, 6), random_form(0, 2, 7)]
    for calc in (ST, JA_X1X2):
        for r in identity_residuals(calc, forms, P[:6]):
            assert r["sup_residual"] <= 1e-8


def test_square_bound_probe():
    fields = [random_polynomial(s) + sq_norm() * 2.0 for s in range(3)]
    assert square_bound_probe(ST, fields, P) == 0.0
    assert np.isfinite(square_bound_probe(JA_X1, fields, P))
