"""Complex Hessian, plurisubharmonicity, (i del delbar)^2 and the field T_J."""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .core import DEFAULT_METRIC, HermitianMetric, ScalarField, evaluate, monomial_basis
from .forms import FormCalculus, PQForm, form_from_components


# ---------------------------------------------------------------------------
# i del delbar u


def ddbar_coefficients(u: ScalarField, calc: FormCalculus):
    """Pointwise ``h_pq = zeta_p zetabar_q u - [zeta_p, zetabar_q]^{0,1} u``.

    ``i del delbar u = i sum h_pq zeta_p* ^ conj(zeta_q*)``.  Derivatives of
    ``u`` follow the calculus' jets when those are finite differences.
    """
    Z = calc.frame.vectors
    dZ = calc.jets.jacobian(Z)
    c = calc.structure_functions
    if calc.jets.kind == "grid":
        fn = u.fn if isinstance(u, ScalarField) else u
        grad = calc.jets.jacobian(fn)
        hess = calc.jets.jacobian(grad)
    elif isinstance(u, ScalarField):
        grad, hess = u.grad_fn(), u.hess_fn()
    else:
        grad, hess = jax.grad(u), jax.hessian(u)

    def h(x):
        z = Z(x)
        zp, zb = z[:, :2], z[:, 2:]
        g = grad(x).astype(complex)
        H = hess(x).astype(complex)
        second = jnp.einsum("jp,kq,jk->pq", zp, zb, H)
        # zeta_p^j d_j(zetabar_q^k) u_k
        dzb = dZ(x)[:, 2:, :]  # [k, q, j]
        first = jnp.einsum("jp,kqj,k->pq", zp, dzb, g)
        Eu = g @ z  # E_b u
        br = jnp.einsum("bpq,b->pq", c(x)[2:, :2, 2:], Eu[2:])
        return second + first - br

    return h


def i_ddbar(u: ScalarField, calc: FormCalculus, points) -> np.ndarray:
    """Hermitian coefficient matrices ``h_pq`` of ``i del delbar u``, shape (N, 2, 2)."""
    return evaluate(ddbar_coefficients(u, calc), points)


def ddbar_form(u: ScalarField, calc: FormCalculus) -> PQForm:
    """``del delbar u`` as a (1,1)-form built from :func:`ddbar_coefficients`."""
    h = ddbar_coefficients(u, calc)
    comps = {(p, 2 + q): (lambda x, p=p, q=q: h(x)[p, q]) for p in range(2) for q in range(2)}
    return form_from_components(1, 1, comps)


@dataclass
class PshReport:
    verdict: str  # "strictly psh", "psh" or "not psh"
    lambda_min: np.ndarray
    margin: float
    worst_point: list
    hermitian_defect: float

    @property
    def is_psh(self) -> bool:
        return self.verdict != "not psh"

    @property
    def is_strict(self) -> bool:
        return self.verdict == "strictly psh"


def psh_check(u: ScalarField, calc: FormCalculus, points, tol: float = 1e-9,
              margin: float = 0.0) -> PshReport:
    """Classify ``u`` by the minimum eigenvalue of ``h_pq`` over ``points``.

    Strict plurisubharmonicity needs ``lambda_min > margin`` everywhere (the
    default margin 0 demands a positive minimum); ``psh`` allows ``-tol``.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    H = i_ddbar(u, calc, P)
    herm = float(np.abs(H - np.conj(np.swapaxes(H, 1, 2))).max())
    Hs = 0.5 * (H + np.conj(np.swapaxes(H, 1, 2)))
    lam = np.linalg.eigvalsh(Hs)[:, 0]
    i = int(np.argmin(lam))
    lmin = float(lam[i])
    if lmin > max(margin, 0.0) and lmin > tol:
        verdict = "strictly psh"
    elif lmin >= -tol:
        verdict = "psh"
    else:
        verdict = "not psh"
    return PshReport(verdict, lam, lmin, P[i].tolist(), herm)


# ---------------------------------------------------------------------------
# (i del delbar)^2 on functions


def iddbar_squared_fn(u, calc: FormCalculus):
    """Pointwise value of ``(i del delbar)^2 u`` on (zeta1, zeta2, zetabar1, zetabar2).

    Sum of the chains ``delbar theta thetabar del u`` and ``del thetabar theta delbar u``;
    returned complex so callers can check that the imaginary part vanishes.
    """
    f = calc.function(u)
    a = calc.dbar(calc.theta(calc.thetabar(calc.partial(f))))
    b = calc.partial(calc.thetabar(calc.theta(calc.dbar(f))))

    def val(x):
        return a.coeffs(x)[0, 1, 2, 3] + b.coeffs(x)[0, 1, 2, 3]

    return val


def iddbar_squared(u, calc: FormCalculus, points) -> np.ndarray:
    """Complex array of ``(i del delbar)^2 u`` coefficients against the frame volume."""
    return evaluate(iddbar_squared_fn(u, calc), points)


def iddbar_squared_direct_fn(u, calc: FormCalculus):
    """``-del delbar del delbar u`` by plain composition (the definition of the square)."""
    f = calc.function(u)
    w = calc.partial(calc.dbar(calc.partial(calc.dbar(f))))
    return lambda x: -w.coeffs(x)[0, 1, 2, 3]


# ---------------------------------------------------------------------------
# T_J


def _second_brackets(calc: FormCalculus):
    """(1,0) coordinates of [[zeta1,zeta2]^{0,1}, zetabar_q]^{1,0} for q = 1, 2."""
    c = calc.structure_functions

    def A(x):
        cx = c(x)
        b = cx[2:, 0, 1]  # [zeta1, zeta2]^{0,1} along zetabar1, zetabar2
        A1 = jnp.einsum("m,pm->p", b, cx[:2, 2:, 2])
        A2 = jnp.einsum("m,pm->p", b, cx[:2, 2:, 3])
        return A1, A2

    return A


def tj_apply_fn(u: ScalarField, calc: FormCalculus):
    """Pointwise ``T_J u`` (complex; the imaginary part is extraction residue)."""
    sq = iddbar_squared_fn(u, calc)
    h = ddbar_coefficients(u, calc)
    A = _second_brackets(calc)

    def val(x):
        A1, A2 = A(x)
        H = h(x)
        corr = A2 @ H[:, 0] - A1 @ H[:, 1]
        return sq(x) - 2.0 * jnp.real(corr)

    return val


def tj_field_fn(calc: FormCalculus):
    """Pointwise complex components of T_J, probing with the coordinate functions."""
    probes = [tj_apply_fn(ScalarField.coordinate(j), calc) for j in range(4)]
    return lambda x: jnp.stack([f(x) for f in probes])


@dataclass
class TJField:
    points: np.ndarray
    components: np.ndarray  # real, (N, 4)
    imaginary_residue: float

    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.components, axis=1)


def tj_field(calc: FormCalculus, points) -> TJField:
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    T = evaluate(tj_field_fn(calc), P)
    return TJField(P, np.real(T), float(np.abs(np.imag(T)).max()))


def _ja_frame(fn):
    def frame(x):
        av = fn(x)
        # J e0 = -e1 (first column), J e2 = a e2 - (1+a^2) e3 (third column)
        z1 = jnp.array([1.0, 1.0j, 0.0, 0.0], dtype=complex)
        z2 = jnp.array([0.0, 0.0, 1.0 - 1j * av, 1j * (1.0 + av ** 2)])
        return av, z1, z2

    return frame


def _ja_abs_beta2(fn):
    import jax

    grad_a = jax.grad(fn)
    frame = _ja_frame(fn)

    def abs_beta2(x):
        av, z1, _ = frame(x)
        z1a = grad_a(x).astype(complex) @ z1
        return jnp.abs((av / (1 + 1j * av) + 0.5j) * z1a) ** 2

    return abs_beta2


def tj_ja_closed_form_fn(a, corrected: bool = False):
    """Printed closed form ``(2 gamma |beta|^2 - zetabar2 |beta|^2) zeta2 + conj`` for J_a.

    ``beta = -(a/(1+ai) + i/2) zeta1 a``.  By default ``gamma`` carries the
    printed factor ``(zetabar2 - zeta2) a``; with ``corrected`` it is
    ``-(zeta2 + zetabar2) a``, the value the bracket ``[zeta2, zetabar2]``
    actually produces.  Neither variant agrees with the generic extraction
    when ``a`` depends on ``x2`` or ``y2``; see :func:`tj_ja_derived_fn`.
    """
    import jax

    fn = a.fn if isinstance(a, ScalarField) else a
    grad_a = jax.grad(fn)
    frame = _ja_frame(fn)
    abs_beta2 = _ja_abs_beta2(fn)
    grad_b2 = jax.grad(abs_beta2)

    def gamma(x):
        av, _, z2 = frame(x)
        ga = grad_a(x).astype(complex)
        fac = -(ga @ z2 + ga @ jnp.conj(z2)) if corrected else (ga @ jnp.conj(z2) - ga @ z2)
        return (av / (1 - 1j * av) - 0.5j) * fac

    def T(x):
        _, _, z2 = frame(x)
        b2 = abs_beta2(x)
        gb = grad_b2(x).astype(complex)
        coef = 2.0 * gamma(x) * b2 - gb @ jnp.conj(z2)
        return coef * z2 + jnp.conj(coef) * jnp.conj(z2)

    return T


def tj_ja_derived_fn(a):
    """T_J for J_a re-derived from the brackets: ``zetabar2(|beta|^2) zeta2 + conj``.

    Follows from ``delbar theta thetabar del u = |beta|^2 h22 + zetabar2(|beta|^2) zeta2 u``
    and the correction term ``2 |beta|^2 h22``.  Vanishes iff ``|beta|^2``
    is independent of ``x2, y2``, e.g. when ``a = a(x1, y1)``.
    """
    import jax

    fn = a.fn if isinstance(a, ScalarField) else a
    frame = _ja_frame(fn)
    grad_b2 = jax.grad(_ja_abs_beta2(fn))

    def T(x):
        _, _, z2 = frame(x)
        coef = grad_b2(x).astype(complex) @ jnp.conj(z2)
        return coef * z2 + jnp.conj(coef) * jnp.conj(z2)

    return T


def ja_bracket_coefficients_fn(a, corrected: bool = True):
    """Closed-form (alpha, beta, gamma, delta) for J_a."""
    import jax

    fn = a.fn if isinstance(a, ScalarField) else a
    grad_a = jax.grad(fn)

    def coeffs(x):
        av = fn(x)
        ga = grad_a(x).astype(complex)
        z1 = jnp.array([1.0, 1.0j, 0.0, 0.0], dtype=complex)
        z2 = jnp.array([0.0, 0.0, 1.0 - 1j * av, 1j * (1.0 + av ** 2)])
        z1a = ga @ z1
        g2 = -(ga @ z2 + ga @ jnp.conj(z2)) if corrected else (ga @ jnp.conj(z2) - ga @ z2)
        f_plus = av / (1 - 1j * av) - 0.5j
        f_minus = -(av / (1 + 1j * av) + 0.5j)
        return jnp.stack([f_plus * z1a, f_minus * z1a, f_plus * g2, f_minus * g2])

    return coeffs


# ---------------------------------------------------------------------------
# integrability


@dataclass
class IntegrabilityReport:
    integrable: bool
    sup_norm: float
    witness_point: list
    tolerance: float


def integrability_check(calc: FormCalculus, points, tol: float | None = None
                        ) -> IntegrabilityReport:
    """Sup over ``points`` of ``|[zetabar1, zetabar2]^{1,0}|``.

    Default tolerance 1e-7 with analytic jets, ``5 h^2 |J|_{C^2}`` with grid jets.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    c = calc.structure_functions
    vals = evaluate(lambda x: c(x)[:2, 2, 3], P)
    norms = np.linalg.norm(vals, axis=1)
    if tol is None:
        if calc.jets.kind == "analytic":
            tol = 1e-7
        else:
            J = calc.structure
            jn = max(np.abs(J.matrices(P)).max(), np.abs(J.derivative(P)).max(),
                     np.abs(J.second_derivative(P)).max())
            tol = 5.0 * float(np.max(calc.jets.h)) ** 2 * jn
    i = int(np.argmax(norms))
    return IntegrabilityReport(bool(norms[i] <= tol), float(norms[i]), P[i].tolist(), float(tol))


# ---------------------------------------------------------------------------
# identity residuals


IDENTITIES = ("ddbar+dbard+thetathetabar+thetabartheta", "d2-thetadbar-dbartheta",
              "dbar2-thetabard-dthetabar")


def identity_forms(calc: FormCalculus, w: PQForm) -> dict:
    """Residual forms of the three identities applied to ``w``."""
    c = calc
    r1 = c.partial(c.dbar(w)) + c.dbar(c.partial(w)) + c.theta(c.thetabar(w)) + c.thetabar(c.theta(w))
    r2 = c.partial(c.partial(w)) - c.theta(c.dbar(w)) - c.dbar(c.theta(w))
    r3 = c.dbar(c.dbar(w)) - c.thetabar(c.partial(w)) - c.partial(c.thetabar(w))
    return dict(zip(IDENTITIES, (r1, r2, r3)))


def identity_residuals(calc: FormCalculus, forms, points, h: float | None = None) -> list:
    """Records ``{identity, sup_residual, argmax_point, h}`` over all sample forms."""
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    best = {name: (0.0, P[0].tolist()) for name in IDENTITIES}
    for w in forms:
        for name, r in identity_forms(calc, w).items():
            if not r.in_range:
                continue
            v = np.abs(r.values(P)).reshape(len(P), -1).max(axis=1)
            v = np.where(np.isfinite(v), v, np.inf)
            i = int(np.argmax(v))
            if v[i] > best[name][0]:
                best[name] = (float(v[i]), P[i].tolist())
    if h is None and calc.jets.kind == "grid":
        h = float(np.max(calc.jets.h))
    return [{"identity": k, "sup_residual": v[0], "argmax_point": v[1], "h": h}
            for k, v in best.items()]


def random_form(p: int, q: int, seed: int, degree: int = 2, scale: float = 1.0) -> PQForm:
    """Seeded form with complex polynomial coefficients on each independent component."""
    rng = np.random.default_rng(seed)
    exps, mono = monomial_basis(degree)
    comps = {}
    for I in _index_sets(p, q):
        cf = jnp.asarray(scale * (rng.normal(size=len(exps)) + 1j * rng.normal(size=len(exps))))
        comps[I] = (lambda x, cf=cf: cf @ mono(x))
    return form_from_components(p, q, comps)


def _index_sets(p, q):
    import itertools
    for a in itertools.combinations((0, 1), p):
        for b in itertools.combinations((2, 3), q):
            yield a + b


def random_polynomial(seed: int, degree: int = 3, scale: float = 0.3) -> ScalarField:
    rng = np.random.default_rng(seed)
    exps, mono = monomial_basis(degree)
    cf = jnp.asarray(scale * rng.normal(size=len(exps)))
    return ScalarField(lambda x: cf @ mono(x), "C2", f"poly:{seed}")


# ---------------------------------------------------------------------------
# wedge densities


def wedge11(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Value on (zeta1, zeta2, zetabar1, zetabar2) of ``(i sum a) ^ (i sum b)``."""
    return (a[..., 0, 0] * b[..., 1, 1] + a[..., 1, 1] * b[..., 0, 0]
            - a[..., 0, 1] * b[..., 1, 0] - a[..., 1, 0] * b[..., 0, 1])


def square_bound_probe(calc: FormCalculus, fields, points, metric: HermitianMetric = DEFAULT_METRIC,
                  delta: float = 1e-12, tol: float = 1e-9) -> float:
    """Sup of ``|(i ddbar)^2 u| / (|T_J u| omega^2 + i ddbar u ^ omega + delta)``.

    All three terms are coefficients against the frame volume.  The bound is
    meant for psh ``u``; a field whose mixed term ``i ddbar u ^ omega`` is
    negative somewhere is rejected.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    G = evaluate(metric.h, P)
    om2 = np.real(wedge11(G, G))
    worst = 0.0
    for u in fields:
        sq = np.real(iddbar_squared(u, calc, P))
        tj = np.abs(np.real(evaluate(tj_apply_fn(u, calc), P)))
        H = i_ddbar(u, calc, P)
        mixed = np.real(wedge11(H, G))
        if mixed.min() < -tol:
            raise ValueError(f"{getattr(u, 'name', 'u')}: i ddbar u ^ omega < 0, not psh")
        ratio = np.abs(sq) / (tj * om2 + mixed + delta)
        worst = max(worst, float(ratio.max()))
    return worst
