import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acx.core import Box, ScalarField, ja_structure, sq_norm, standard_structure
from acx.forms import FormCalculus
from acx.grid import GridHessian
from acx.hessian import psh_check
from acx.smoothing import (CandidateError, CoverPiece, RegularizedMax, SeamError, local_candidate,
                           m_s, profile, regularized_max, richberg, smoothmax_field,
                           smoothmax_schedule, strictness_margin)

ST = FormCalculus.for_structure(standard_structure())

finite = st.floats(-10, 10, allow_nan=False)
width = st.floats(1e-3, 2.0)


@settings(max_examples=200, deadline=None)
@given(finite, finite, width, st.booleans())
def test_m_s_bounds(x, y, s, smooth):
    m = float(m_s(x, y, s, smooth))
    mx = max(x, y)
    assert mx - 1e-12 <= m <= mx + s / 2 + 1e-12
    if abs(x - y) >= s:
        assert m == pytest.approx(mx, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(finite, finite, width)
def test_m_s_symmetric_and_monotone(x, y, s):
    assert float(m_s(x, y, s)) == pytest.approx(float(m_s(y, x, s)), abs=1e-12)
    assert float(m_s(x + 0.1, y, s)) >= float(m_s(x, y, s)) - 1e-12


def test_profile_is_convex_and_matches_abs_outside():
    t = np.linspace(-3, 3, 601)
    for smooth in (False, True):
        g = profile(t, smooth)
        assert np.all(np.diff(g, 2) >= -1e-12)
        far = np.abs(t) >= 1
        assert np.allclose(g[far], np.abs(t[far]))


def test_regularized_max_check_and_excess():
    R = RegularizedMax(0.1)
    x = np.linspace(-1, 1, 101)
    c = R.check(x, x[::-1])
    assert c["lower"] <= 1e-12 and c["upper"] <= 1e-12 and c["equal_far"] <= 1e-12
    assert R.excess == pytest.approx(0.025)
    with pytest.raises(ValueError):
        RegularizedMax(0.0)


def test_regularized_max_gap_returns_larger():
    box = Box.cube(0.0, 0.5, 9)
    X = box.mesh()
    r2 = np.sum(X ** 2, -1)
    ball = r2 < 0.3 ** 2
    out = regularized_max(0.1, r2, ball, r2 + 1, np.ones(box.shape, bool), box)
    assert np.array_equal(out, r2 + 1)


def test_regularized_max_equal_inputs_within_bounds():
    box = Box.cube(0.0, 0.5, 9)
    r2 = np.sum(box.mesh() ** 2, -1)
    full = np.ones(box.shape, bool)
    out = regularized_max(0.1, r2, full, r2, full, box)
    assert np.allclose(out, r2 + 0.025)


def test_regularized_max_strictly_psh_glue():
    box = Box.cube(0.0, 0.5, 17)
    X = box.mesh()
    r2 = np.sum(X ** 2, -1)
    out = regularized_max(0.1, r2, X[..., 0] < 0.3, r2 + X[..., 0], X[..., 0] > -0.3, box)
    GH = GridHessian(box, ST)
    assert np.nanmin(GH.lambda_min(out)) > 0


def test_regularized_max_seam_violation():
    box = Box.cube(0.0, 0.5, 9)
    X = box.mesh()
    r2 = np.sum(X ** 2, -1)
    with pytest.raises(SeamError):
        regularized_max(0.1, r2, X[..., 0] < 0.2, r2, X[..., 0] > -0.2, box)


def test_strictness_margin_examples():
    P = np.random.default_rng(0).uniform(-0.4, 0.4, (20, 4))
    assert strictness_margin(sq_norm(), ST, P) == pytest.approx(1.0)
    assert strictness_margin(ScalarField.coordinate(0), ST, P) == 0.0
    box = Box.cube(0.0, 0.5, 5)
    ja = FormCalculus.for_structure(ja_structure(lambda p: 0.1 * p[0], box))
    eps = strictness_margin(sq_norm(), ja, box.points())
    assert 0 < eps < 1


def test_local_candidate_backends_on_smooth_input():
    box = Box.cube(0.0, 0.75, 17)
    GH = GridHessian(box, ST)
    u = np.sum(box.mesh() ** 2, -1)
    piece = CoverPiece(0, (0.0, 0.0, 0.0, 0.0), 0.5, 0.25, 0, 0, 0)
    for backend in ("patch", "dirichlet"):
        c = local_candidate(u, 0.5, piece, box, GH, backend=backend)
        assert c.checks["boundary_max"] < 0 < c.checks["interior_min"]
        assert c.checks["top_max"] < 0 < c.checks["lambda_min"]


def test_local_candidate_on_kink():
    box = Box.cube(0.0, 1.0, 17)
    GH = GridHessian(box, ST)
    r2 = np.sum(box.mesh() ** 2, -1)
    u = np.maximum(r2, 2 * r2 - 0.5)
    piece = CoverPiece(0, (0.5, 0.5, 0.0, 0.0), 0.25, 0.1, 0, 0, 0)
    c = local_candidate(u, 0.5, piece, box, GH, sigma=0.1)
    assert c.checks["lambda_min"] > 0


def test_local_candidate_failure_is_reported():
    box = Box.cube(0.0, 0.75, 17)
    GH = GridHessian(box, ST)
    u = box.mesh()[..., 0]  # pluriharmonic: no strictness margin
    piece = CoverPiece(0, (0.0, 0.0, 0.0, 0.0), 0.5, 0.25, 0, 0, 0)
    with pytest.raises(CandidateError):
        local_candidate(u, 0.5, piece, box, GH)


def test_richberg_smooth_input():
    box = Box.cube(0.0, 0.45, 17)
    u = np.sum(box.mesh() ** 2, -1)
    res = richberg(u, 0.5, box, ST, (-0.1, -0.05, -0.05, -0.05), (0.1, 0.05, 0.05, 0.05),
                   0.25, 0.075, None, eps=0.05)
    c = res.certificates
    assert res.passed
    assert c["band_lower"] >= -1e-12 and c["band_upper"] <= 1e-12
    assert c["lambda_min_K"] >= 3.9


def test_smoothmax_schedule_decreasing():
    fields = [lambda x: jnp.sum(x ** 2), lambda x: 2 * jnp.sum(x ** 2) - 0.09]
    sched = smoothmax_schedule(fields, [0.08, 0.04, 0.02])
    P = np.random.default_rng(1).uniform(-0.5, 0.5, (200, 4))
    gaps = sched.check(P)
    assert all(g >= -1e-12 for g in gaps)
    f = smoothmax_field(fields, 0.02)
    assert psh_check(f, ST, P).is_psh
