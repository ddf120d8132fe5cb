import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acx.core import (Box, FrameDegeneracyError, StructureError, frame_field, ja_structure,
                      make_structure, random_similarity, similarity_structure, standard_structure)
from acx.forms import (ComplexVectorField, FormCalculus, form_from_components, frame_coordinates,
                       frame_vector, lie_bracket, pq_project)
from acx.hessian import integrability_check

J_ST = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
BOX = Box.cube(0.0, 0.5, 5)
P = BOX.points()[::7]


def test_standard_structure_squares_to_minus_identity():
    J = standard_structure(BOX)
    M = J.matrices(P)
    assert np.allclose(M @ M, -np.eye(4))
    assert float(np.abs(J.defect(P)).max()) == 0.0


def test_ja_printed_matrix_accepted():
    J = ja_structure(lambda p: p[0] * p[2], BOX)
    assert float(np.abs(J.defect(P)).max()) < 1e-12


def test_provider_not_squaring_to_minus_identity_rejected():
    with pytest.raises(StructureError):
        make_structure(lambda p: jnp.asarray(J_ST) + 0.5 * jnp.eye(4) + 0.0 * p[0], BOX)


def test_similarity_identity_is_standard():
    J = similarity_structure(lambda p: jnp.eye(4) + 0.0 * p[0], BOX)
    Jst = standard_structure(BOX)
    assert np.allclose(J.matrices(P), Jst.matrices(P))


def test_similarity_perturbation_non_integrable():
    J = random_similarity(42, BOX, 0.1)
    calc = FormCalculus.for_structure(J)
    assert not integrability_check(calc, P).integrable


def test_similarity_singular_rejected():
    S = lambda p: jnp.eye(4).at[0, 0].set(p[0])
    with pytest.raises(StructureError):
        similarity_structure(S, BOX)


def test_integrability_examples():
    assert integrability_check(FormCalculus.for_structure(standard_structure(BOX)), P).integrable
    assert integrability_check(FormCalculus.for_structure(ja_structure(lambda p: p[2], BOX)),
                               P).integrable
    rep = integrability_check(FormCalculus.for_structure(ja_structure(lambda p: p[0], BOX)), P)
    assert not rep.integrable and rep.sup_norm > 0


def test_standard_frame_and_coframe():
    F = frame_field(standard_structure(BOX))
    Z, C = np.asarray(F.vectors(jnp.zeros(4))), np.asarray(F.coframe(jnp.zeros(4)))
    # zeta_p = d/dx_p - i d/dy_p, coframe row p = (dx_p + i dy_p) / 2
    assert np.allclose(Z[:, 0], [1, -1j, 0, 0]) and np.allclose(Z[:, 1], [0, 0, 1, -1j])
    assert np.allclose(C[0], [0.5, 0.5j, 0, 0]) and np.allclose(C[1], [0, 0, 0.5, 0.5j])


def test_degenerate_seeds_rejected():
    J = standard_structure(BOX)
    with pytest.raises(FrameDegeneracyError):
        frame_field(J, BOX, seeds=((1.0, 0, 0, 0), (0, 1.0, 0, 0)))


def test_ja_bracket_zeta1_zeta1bar_vanishes():
    F = frame_field(ja_structure(lambda p: p[0] * p[2], BOX))
    B = lie_bracket(frame_vector(F, 0), frame_vector(F, 2))
    assert np.abs(B.values(P)).max() < 1e-12


def test_ja_bracket_alpha_beta_at_origin():
    F = frame_field(ja_structure(lambda p: p[0], BOX))
    B = lie_bracket(frame_vector(F, 0), frame_vector(F, 1))
    c = np.asarray(frame_coordinates(F, B)(jnp.zeros(4)))
    assert np.allclose(c, [0, -0.5j, 0, -0.5j], atol=1e-12)


def test_bracket_with_itself_vanishes():
    F = frame_field(ja_structure(lambda p: p[0] * p[3], BOX))
    Z = frame_vector(F, 1)
    assert np.abs(lie_bracket(Z, Z).values(P)).max() == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_pq_parts_resum(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
    V = ComplexVectorField(lambda x: jnp.asarray(c[0]) + jnp.asarray(c[1]) * x[0])
    J = ja_structure(lambda p: p[0] * p[2], BOX)
    V10, V01 = pq_project(V, J)
    x = P[seed % len(P)]
    total = V10.values(x[None]) + V01.values(x[None])
    assert np.allclose(total, V.values(x[None]), atol=1e-10)
    # the (1,0) part is an eigenvector of J with eigenvalue i
    M = J.matrices(x[None])[0]
    v10 = V10.values(x[None])[0]
    assert np.allclose(M @ v10, 1j * v10, atol=1e-10)


def test_real_vector_projects_to_frame_vector():
    J = standard_structure(BOX)
    X = ComplexVectorField(lambda x: jnp.array([1.0, 0.0, 0.0, 0.0]) + 0.0 * x[0])
    Z, _ = pq_project(X, J)
    assert np.allclose(Z.values(P[:1])[0], [0.5, -0.5j, 0, 0])
    Z2, W2 = pq_project(Z, J)
    assert np.allclose(Z2.values(P[:1]), Z.values(P[:1])) and np.abs(W2.values(P[:1])).max() == 0


def test_theta_out_of_range_and_zero_under_standard():
    calc = FormCalculus.for_structure(standard_structure(BOX))
    u = calc.function(lambda p: p[0] ** 2 * p[3] + p[1] * p[2])
    assert not calc.theta(u).in_range
    w = form_from_components(1, 0, {(0,): lambda p: p[0] * p[1] + 1j * p[2] ** 2,
                                    (1,): lambda p: p[3] + 0j})
    assert np.abs(calc.theta(calc.dbar(w)).values(P)).max() == 0.0
    assert np.abs(calc.thetabar(w).values(P)).max() == 0.0


def test_thetabar_nonzero_for_non_integrable():
    calc = FormCalculus.for_structure(ja_structure(lambda p: p[0], BOX))
    u = calc.function(lambda p: p[2] ** 2 + p[3] ** 2)
    assert np.abs(calc.thetabar(calc.partial(u)).values(P)).max() > 1e-3
