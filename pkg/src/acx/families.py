"""Seeded parametrized families of structures, forms and polynomial test functions.

A family is a pointwise kernel that takes its coefficients as traced
arguments.  Batched evaluation through :func:`acx.core.evaluate` then
compiles once per family instead of once per seed, which is what makes
suites of dozens of (structure, form) pairs affordable.
"""

from __future__ import annotations

import functools

import jax.numpy as jnp
import numpy as np

from .core import (ANALYTIC, J_ST, AlmostComplexStructure, Box, Frame, GridJets, ScalarField,
                   make_structure, monomial_basis, similarity_structure)
from .forms import FormCalculus, PQForm, form_from_components
from .hessian import (IDENTITIES, _index_sets, ddbar_coefficients, identity_forms,
                      iddbar_squared_fn, tj_apply_fn, tj_field_fn, wedge11)

STRUCTURE_KINDS = ("jst", "ja", "similarity")


def _jets(h):
    return ANALYTIC if h is None else GridJets(h)


@functools.lru_cache(maxsize=None)
def structure_matrix_fn(kind: str, degree: int = 2):
    """``(p, coef) -> J(p)`` for one of :data:`STRUCTURE_KINDS`.

    ``ja`` takes ``a = coef . monomials(p)``; ``similarity`` takes
    ``S = I + coef . monomials(p)`` (scale folded into ``coef``) and
    returns ``S J_st S^{-1}``.
    """
    _, mono = monomial_basis(degree)
    Jst = jnp.asarray(J_ST)
    if kind == "jst":
        return lambda p, coef: Jst + 0.0 * p[0] + 0.0 * jnp.sum(coef)
    if kind == "ja":
        def matrix(p, coef):
            a = coef @ mono(p)
            z = 0.0 * a
            return jnp.array([[z, 1.0 + z, z, z],
                              [-1.0 + z, z, z, z],
                              [z, z, a, 1.0 + z],
                              [z, z, -1.0 - a ** 2, -a]])
        return matrix
    if kind == "similarity":
        def matrix(p, coef):
            S = jnp.eye(4) + coef @ mono(p)
            return S @ Jst @ jnp.linalg.inv(S)
        return matrix
    raise ValueError(f"unknown structure kind {kind!r}")


def structure_coefficients(kind: str, seed: int, degree: int = 2, scale: float | None = None
                           ) -> np.ndarray:
    """Seeded coefficients for :func:`structure_matrix_fn`.

    Default scales: 0.5 for ``ja`` (normal entries), 0.1 for ``similarity``
    (uniform entries in [-1, 1]).
    """
    n = len(monomial_basis(degree)[0])
    rng = np.random.default_rng(seed)
    if kind == "jst":
        return np.zeros(1)
    if kind == "ja":
        return (0.5 if scale is None else scale) * rng.normal(size=n)
    if kind == "similarity":
        return (0.1 if scale is None else scale) * rng.uniform(-1.0, 1.0, size=(4, 4, n))
    raise ValueError(f"unknown structure kind {kind!r}")


def ja_polynomial(terms: dict, degree: int = 2) -> np.ndarray:
    """Coefficient vector of ``a`` from ``{exponent tuple: coefficient}``.

    ``ja_polynomial({(1, 0, 1, 0): 1.0})`` is ``a = x1 x2``.
    """
    exps = [tuple(e) for e in monomial_basis(degree)[0]]
    coef = np.zeros(len(exps))
    for e, c in terms.items():
        coef[exps.index(tuple(e))] += c
    return coef


def structure_instance(kind: str, coef, box: Box, degree: int = 2) -> AlmostComplexStructure:
    """Concrete validated structure for one member of a family."""
    M = structure_matrix_fn(kind, degree)
    cf = jnp.asarray(coef)
    name = f"{kind}[family]"
    if kind == "similarity":
        _, mono = monomial_basis(degree)
        return similarity_structure(lambda p: jnp.eye(4) + cf @ mono(p), box, name,
                                    params={"kind": kind})
    params = {"kind": kind}
    if kind == "ja":
        _, mono = monomial_basis(degree)
        params["a"] = lambda p: cf @ mono(p)
    return make_structure(lambda p: M(p, cf), box, name, params=params)


def calculus_from_matrix(matrix, jets=ANALYTIC) -> FormCalculus:
    """Form calculus for a raw matrix function, without validation (traceable)."""
    return FormCalculus(Frame(AlmostComplexStructure(matrix)), jets)


def form_coefficients(p: int, q: int, seed: int, degree: int = 2, scale: float = 1.0
                      ) -> np.ndarray:
    """Complex coefficients, one row of monomial weights per independent component."""
    n = len(monomial_basis(degree)[0])
    m = len(list(_index_sets(p, q)))
    rng = np.random.default_rng(seed)
    return scale * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))


def form_from_coefficients(p: int, q: int, coef, degree: int = 2) -> PQForm:
    _, mono = monomial_basis(degree)
    comps = {I: (lambda x, i=i: coef[i] @ mono(x)) for i, I in enumerate(_index_sets(p, q))}
    return form_from_components(p, q, comps)


def polynomial_coefficients(seed: int, degree: int = 3, scale: float = 0.3) -> np.ndarray:
    n = len(monomial_basis(degree)[0])
    return scale * np.random.default_rng(seed).normal(size=n)


def polynomial_field(coef, degree: int = 3, name: str = "poly") -> ScalarField:
    _, mono = monomial_basis(degree)
    cf = jnp.asarray(coef)
    return ScalarField(lambda x: cf @ mono(x), "C2", name)


# ---------------------------------------------------------------------------
# family kernels


def _identity_kernel(M, p: int, q: int, fdeg: int, h):
    def kernel(x, jcoef, fcoef):
        calc = calculus_from_matrix(lambda y: M(y, jcoef), _jets(h))
        w = form_from_coefficients(p, q, fcoef, fdeg)
        out = []
        for r in identity_forms(calc, w).values():
            out.append(jnp.max(jnp.abs(r.coeffs(x))) if r.in_range else 0.0 * x[0])
        return jnp.stack(out)

    return kernel


@functools.lru_cache(maxsize=None)
def identity_kernel(kind: str, p: int, q: int, jdeg: int = 2, fdeg: int = 2, h=None):
    """``(x, jcoef, fcoef) -> sup-norm of the three identity residuals at x``."""
    return _identity_kernel(structure_matrix_fn(kind, jdeg), p, q, fdeg, h)


def identity_study(matrix, cases, points, h=None) -> list:
    """Identity residuals of ``(p, q, fcoef)`` forms under one structure ``matrix(p, jcoef)``.

    One kernel is compiled per bidegree.  Returns per identity the sup
    residual over all cases and points: ``{identity, sup_residual, argmax_point, h}``.
    """
    from .core import evaluate

    P = np.asarray(points, dtype=float).reshape(-1, 4)
    hh = None if h is None else tuple(np.broadcast_to(np.asarray(h, float), (4,)).tolist())
    kernels = {}
    best = {name: (0.0, P[0].tolist()) for name in IDENTITIES}
    for p, q, fcoef in cases:
        fdeg = _degree_from_count(np.shape(fcoef)[-1])
        key = (p, q, fdeg)
        if key not in kernels:
            kernels[key] = _identity_kernel(matrix, p, q, fdeg, hh)
        R = evaluate(kernels[key], P, np.zeros(1), fcoef)
        R = np.where(np.isfinite(R), R, np.inf)
        for j, name in enumerate(IDENTITIES):
            k = int(np.argmax(R[:, j]))
            if R[k, j] > best[name][0]:
                best[name] = (float(R[k, j]), P[k].tolist())
    return [{"identity": k, "sup_residual": v[0], "argmax_point": v[1],
             "h": None if h is None else float(np.max(h))} for k, v in best.items()]


def identity_suite(cases, points, h=None) -> list:
    """Identity residuals for many ``(kind, jcoef, p, q, fcoef)`` cases.

    Returns one record per case and identity:
    ``{case, kind, bidegree, identity, sup_residual, argmax_point, h}``.
    """
    from .core import evaluate

    P = np.asarray(points, dtype=float).reshape(-1, 4)
    hh = None if h is None else tuple(np.broadcast_to(np.asarray(h, float), (4,)).tolist())
    rows = []
    for i, (kind, jcoef, p, q, fcoef) in enumerate(cases):
        jdeg = _degree_of(kind, jcoef)
        fdeg = _degree_from_count(np.shape(fcoef)[-1])
        R = evaluate(identity_kernel(kind, p, q, jdeg, fdeg, hh), P, jcoef, fcoef)
        R = np.where(np.isfinite(R), R, np.inf)
        for j, name in enumerate(IDENTITIES):
            k = int(np.argmax(R[:, j]))
            rows.append({"case": i, "kind": kind, "bidegree": [p, q], "identity": name,
                         "sup_residual": float(R[k, j]), "argmax_point": P[k].tolist(),
                         "h": None if h is None else float(np.max(h))})
    return rows


def _degree_from_count(n: int) -> int:
    d = 0
    while len(monomial_basis(d)[0]) < n:
        d += 1
    if len(monomial_basis(d)[0]) != n:
        raise ValueError(f"{n} is not a monomial count in four variables")
    return d


def _degree_of(kind: str, coef) -> int:
    if kind == "jst":
        return 2
    return _degree_from_count(np.shape(coef)[-1])


@functools.lru_cache(maxsize=None)
def tj_kernel(kind: str, jdeg: int = 2, h=None):
    """``(x, jcoef) -> complex T_J components at x``."""
    M = structure_matrix_fn(kind, jdeg)

    def kernel(x, jcoef):
        calc = calculus_from_matrix(lambda y: M(y, jcoef), _jets(h))
        return tj_field_fn(calc)(x)

    return kernel


@functools.lru_cache(maxsize=None)
def probe_kernel(kind: str, jdeg: int = 2, udeg: int = 3, h=None):
    """``(x, jcoef, ucoef) -> [(i ddbar)^2 u, T_J u, h11, h12, h21, h22]``.

    Everything is a coefficient against the frame volume; ``h`` is the
    complex Hessian of the polynomial ``u`` in the frame.
    """
    M = structure_matrix_fn(kind, jdeg)
    _, mono = monomial_basis(udeg)

    def kernel(x, jcoef, ucoef):
        calc = calculus_from_matrix(lambda y: M(y, jcoef), _jets(h))
        u = ScalarField(lambda y: ucoef @ mono(y), "C2", "poly")
        sq = iddbar_squared_fn(u, calc)(x)
        tj = tj_apply_fn(u, calc)(x)
        H = ddbar_coefficients(u, calc)(x)
        return jnp.concatenate([jnp.stack([sq, tj]), H.reshape(-1)])

    return kernel


def square_bound_suite(kind: str, jcoef, ucoefs, points, h=None, delta: float = 1e-12) -> dict:
    """Empirical constant of the two-sided bound ``|(i ddbar)^2 u| <= C(|T_J u| w^2 + i ddbar u ^ w)``.

    Default metric: coefficients ``2 I`` in the ``i sum h zeta* ^ conj(zeta*)``
    normalization.  Returns the sup ratio and the per-field maxima.
    """
    from .core import evaluate

    P = np.asarray(points, dtype=float).reshape(-1, 4)
    hh = None if h is None else tuple(np.broadcast_to(np.asarray(h, float), (4,)).tolist())
    jdeg = _degree_of(kind, jcoef)
    G = np.broadcast_to(2.0 * np.eye(2), (len(P), 2, 2))
    om2 = np.real(wedge11(G, G))
    ratios = []
    for uc in ucoefs:
        udeg = _degree_from_count(len(uc))
        R = evaluate(probe_kernel(kind, jdeg, udeg, hh), P, jcoef, uc)
        sq, tj = np.real(R[:, 0]), np.real(R[:, 1])
        H = R[:, 2:].reshape(-1, 2, 2)
        mixed = np.real(wedge11(H, G))
        if mixed.min() < -1e-9:
            raise ValueError("probe field is not psh: i ddbar u ^ omega < 0")
        ratios.append(float(np.max(np.abs(sq) / (np.abs(tj) * om2 + mixed + delta))))
    return {"ratio": max(ratios), "per_field": ratios}


@functools.lru_cache(maxsize=None)
def pairing_kernels(kind: str, jdeg: int = 2, udeg: int = 3, h=None, radius: float = 0.4,
                    power: int | None = None):
    """Weak and smooth pairing integrands for ``u, v = |z|^2 + polynomial``.

    Returns ``(weak, smooth)``, each ``(x, jcoef, ucoef, vcoef) -> value``;
    the weak integrand uses jets with step ``h`` (analytic when ``None``),
    the smooth one is always analytic.  The test function is the bump of
    the given radius at the origin.
    """
    from .ma import bump, pairing_integrand_fn, smooth_pairing_integrand_fn

    M = structure_matrix_fn(kind, jdeg)
    _, mono = monomial_basis(udeg)
    phi = bump(radius=radius, power=power)

    def fields(ucoef, vcoef):
        u = lambda y: jnp.sum(y ** 2) + ucoef @ mono(y)
        v = lambda y: jnp.sum(y ** 2) + vcoef @ mono(y)
        return u, v

    def weak(x, jcoef, ucoef, vcoef):
        calc = calculus_from_matrix(lambda y: M(y, jcoef), _jets(h))
        u, v = fields(ucoef, vcoef)
        return pairing_integrand_fn(u, v, phi, calc)(x)

    def smooth(x, jcoef, ucoef, vcoef):
        calc = calculus_from_matrix(lambda y: M(y, jcoef), ANALYTIC)
        u, v = fields(ucoef, vcoef)
        return smooth_pairing_integrand_fn(u, v, phi, calc)(x)

    return weak, smooth


def pairing_study(matrix, cases, steps, degree: int = 3, radius: float = 0.4,
                  power: int | None = 6, nodes=None) -> list:
    """Weak pairings of ``u, v = |z|^2 + polynomial`` against their smooth value.

    ``matrix(p, jcoef)`` gives the structure and ``cases`` lists
    ``(jcoef, ucoef, vcoef)``.  The weak integrand is evaluated in both
    argument orders at every step of ``steps`` (grid-jet spacings); the
    smooth reference uses analytic jets.  Defaults to radial-shell nodes on
    the bump support.  Returns one record per case and step with
    ``{case, h, weak, weak_swapped, smooth, error, error_swapped}``.
    """
    from .core import evaluate
    from .ma import (Region, bump, pairing_integrand_fn, quadrature_nodes,
                     smooth_pairing_integrand_fn)

    _, mono = monomial_basis(degree)
    phi = bump(radius=radius, power=power)
    if nodes is None:
        nodes = quadrature_nodes(Region.ball(radius), None, "radial")

    def fields(uc, vc):
        return (lambda y: jnp.sum(y ** 2) + uc @ mono(y),
                lambda y: jnp.sum(y ** 2) + vc @ mono(y))

    def weak_kernel(h):
        def kernel(x, jc, uc, vc):
            calc = calculus_from_matrix(lambda y: matrix(y, jc), _jets(h))
            u, v = fields(uc, vc)
            return jnp.stack([pairing_integrand_fn(u, v, phi, calc)(x),
                              pairing_integrand_fn(v, u, phi, calc)(x)])
        return kernel

    def smooth_kernel(x, jc, uc, vc):
        calc = calculus_from_matrix(lambda y: matrix(y, jc), ANALYTIC)
        return smooth_pairing_integrand_fn(*fields(uc, vc), phi, calc)(x)

    kernels = {h: weak_kernel(tuple(np.broadcast_to(float(h), (4,)).tolist())) for h in steps}
    rows = []
    for i, (jc, uc, vc) in enumerate(cases):
        args = (jnp.asarray(jc), jnp.asarray(uc), jnp.asarray(vc))
        s = float(np.sum(evaluate(smooth_kernel, nodes.points, *args) * nodes.weights))
        for h in steps:
            w = np.sum(evaluate(kernels[h], nodes.points, *args) * nodes.weights[:, None], axis=0)
            rows.append({"case": i, "h": float(h), "weak": float(w[0]),
                         "weak_swapped": float(w[1]), "smooth": s,
                         "error": abs(float(w[0]) - s), "error_swapped": abs(float(w[1]) - s)})
    return rows
