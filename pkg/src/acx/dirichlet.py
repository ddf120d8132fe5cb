"""Desk-scale Dirichlet problem for the complex Monge-Ampere operator and
numerical comparison-principle harnesses.

The unknown lives on the vertices of a :class:`acx.core.Box` inside a ball
``{rho < 0}``.  The boundary band is the set of vertices within ``1.5 h``
of the sphere; the data is imposed on its outer half ``r <= d <= r + 1.5h``
and every vertex with ``d < r`` is an unknown.  Stencil neighbours of
unknowns lie within ``sqrt(2) h``, so they are unknowns or data vertices,
and the discrete domain does not shrink with ``h``.

The equation is ``det h_pq(u) = 2 f det g``, i.e. density ``f`` against
``dV``; for ``u = |z|^2`` under the standard structure ``det h = 16`` and
``f = 8``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import jax.numpy as jnp
import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .core import Box, DEFAULT_METRIC, HermitianMetric, ScalarField, evaluate
from .forms import FormCalculus
from .grid import GridHessian, jet_coefficients, stencil_matrices, stencil_weights
from .hessian import psh_check


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center",
                           tuple(float(c) for c in np.broadcast_to(self.center, (4,))))
        if not self.radius > 0:
            raise PreconditionError("ball radius must be positive")

    def strictly_inside(self, box: Box) -> bool:
        c = np.array(self.center)
        return bool(np.all(c - self.radius > np.array(box.lower) + 1e-12)
                    and np.all(c + self.radius < np.array(box.upper) - 1e-12))

    def distance(self, P) -> np.ndarray:
        return np.linalg.norm(np.asarray(P) - np.array(self.center), axis=-1)


def defining_function(ball: Ball, calc: FormCalculus, box: Box, tol: float = 1e-9
                      ) -> ScalarField:
    """``rho = |x - c|^2 - r^2`` after checking it is strictly psh near the closed ball.

    Raises :class:`PreconditionError` when the ball does not sit inside the
    box or when ``rho`` fails the strictness check.
    """
    h = float(np.max(box.h))
    if not ball.strictly_inside(box):
        raise PreconditionError(
            f"ball {ball.center}, r={ball.radius} is not strictly inside {box.describe()}")
    c = jnp.asarray(ball.center)
    rho = ScalarField(lambda x: jnp.sum((x - c) ** 2) - ball.radius ** 2, "C2", "rho")
    P = box.points()
    near = ball.distance(P) <= ball.radius + 1.5 * h
    rep = psh_check(rho, calc, P[near], tol=tol)
    if not rep.is_strict:
        raise PreconditionError(
            f"rho is not strictly psh on the ball: lambda_min={rep.margin:.3e} at {rep.worst_point}")
    return rho


# ---------------------------------------------------------------------------
# problem and report


@dataclass
class DirichletProblem:
    """``(i ddbar u)^2 = f dV`` in the ball, ``u = phi`` on the boundary band."""

    ball: Ball
    phi: Callable
    f: Callable | float
    calc: FormCalculus
    box: Box
    metric: HermitianMetric = DEFAULT_METRIC

    def masks(self) -> tuple:
        """Boolean grids ``(unknown, band)``."""
        h = float(np.max(self.box.h))
        d = self.ball.distance(self.box.mesh())
        r = self.ball.radius
        unknown = (d < r) & self.box.interior_mask(1)
        band = (d <= r + 1.5 * h) & ~unknown
        return unknown, band

    def density(self, P) -> np.ndarray:
        if callable(self.f):
            return np.asarray(evaluate(self.f, P), dtype=float)
        return np.full(len(P), float(self.f))

    def boundary_values(self, idx) -> np.ndarray:
        """Data at flat vertex indices; ``phi`` is a callable or vertex samples."""
        if isinstance(self.phi, np.ndarray):
            return np.asarray(self.phi, dtype=float).ravel()[idx]
        fn = self.phi.fn if isinstance(self.phi, ScalarField) else self.phi
        return np.asarray(evaluate(fn, self.box.points()[idx]), dtype=float)

    def describe(self) -> dict:
        return {"ball": {"center": list(self.ball.center), "radius": self.ball.radius},
                "box": self.box.describe()}


@dataclass
class SolveReport:
    iterations: int
    residual: float
    lambda_min: float
    boundary_error: float
    converged: bool
    status: str
    unknowns: int
    history: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _linear_solve(A, b, direct_max: int = 5000):
    """Direct sparse solve for small systems, ILU-preconditioned GMRES otherwise."""
    if A.shape[0] <= direct_max:
        return splinalg.spsolve(A, b)
    ilu = splinalg.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=10)
    M = splinalg.LinearOperator(A.shape, ilu.solve)
    x, info = splinalg.gmres(A, b, M=M, rtol=1e-13, atol=0.0, restart=50, maxiter=100)
    if info != 0:
        raise RuntimeError(f"gmres did not converge (info={info})")
    return x


class _System:
    """Sparse affine maps ``x -> h_pq`` over the unknowns."""

    def __init__(self, problem: DirichletProblem):
        box = problem.box
        unknown, band = problem.masks()
        if not unknown.any() or not band.any():
            raise PreconditionError("grid too coarse: no unknown or no band vertices")
        d = problem.ball.distance(box.mesh())
        if not problem.ball.strictly_inside(box):
            raise PreconditionError("ball must lie strictly inside the box")
        self.unknown, self.band = unknown, band
        P = box.points()
        self.rows = np.flatnonzero(unknown.ravel())
        self.fixed = np.flatnonzero(band.ravel())
        self.P = P[self.rows]
        f = problem.density(self.P)
        if np.any(f < 0):
            raise PreconditionError(f"negative density f={f.min():.3e}")
        G = evaluate(problem.metric.g, self.P)
        det_g = np.real(G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0])
        self.target = 2.0 * f * det_g
        A, B = jet_coefficients(problem.calc, self.P)
        M = stencil_matrices(box, self.rows, stencil_weights(A, B, box.h))
        self.L = [m[:, self.rows] for m in M]
        self.b_maps = [m[:, self.fixed] for m in M]
        self.n_all = int(np.prod(box.shape))
        self.dist = d.ravel()

    def set_boundary(self, values):
        self.b = [m @ values for m in self.b_maps]

    def hess(self, x) -> np.ndarray:
        h = np.stack([L @ x + b for L, b in zip(self.L, self.b)], -1).reshape(-1, 2, 2)
        return 0.5 * (h + np.conj(np.swapaxes(h, 1, 2)))

    def residual(self, x) -> tuple:
        h = self.hess(x)
        det = np.real(h[:, 0, 0] * h[:, 1, 1] - np.abs(h[:, 0, 1]) ** 2)
        lam = np.linalg.eigvalsh(h)[:, 0]
        return det - self.target, lam, h

    def jacobian(self, h):
        L11, L12, L21, L22 = self.L
        C12 = 0.5 * (L12 + L21.conj())
        h11, h22 = np.real(h[:, 0, 0]), np.real(h[:, 1, 1])
        J = (sparse.diags(h22) @ L11.real + sparse.diags(h11) @ L22.real
             - 2.0 * (sparse.diags(np.conj(h[:, 0, 1])) @ C12).real)
        return J.tocsc()

    def trace_solve(self):
        """Unknowns solving ``tr h = 2 sqrt(target)``, the equality case of AM-GM."""
        L11, _, _, L22 = self.L
        T = (L11 + L22).real.tocsc()
        rhs = 2.0 * np.sqrt(self.target) - np.real(self.b[0] + self.b[3])
        return _linear_solve(T, rhs)


def solve_dirichlet(problem: DirichletProblem, tol: float = 1e-9, psd_tol: float = 1e-9,
                    max_iter: int = 40) -> tuple:
    """Damped Newton iteration for ``det h_pq(u) = 2 f det g``.

    The start is the linear problem ``tr h = 2 sqrt(2 f det g)``.  Each
    Newton step is halved until the residual norm decreases without the
    smallest eigenvalue of ``h_pq`` dropping below ``-psd_tol`` or below
    its current value, which keeps psd iterates psd.  Success requires the
    residual, psh and boundary certificates together; otherwise the best
    iterate is returned with ``converged=False``.

    Returns ``(U, report)`` with ``U`` on the full vertex grid (NaN outside
    the unknowns and the band).
    """
    sys_ = _System(problem)
    box = problem.box
    bvals = problem.boundary_values(sys_.fixed)
    full = np.zeros(sys_.n_all)
    full[sys_.fixed] = bvals
    sys_.set_boundary(bvals)
    scale = max(1.0, float(np.max(sys_.target)))

    x = sys_.trace_solve()
    F, lam, h = sys_.residual(x)
    history = [{"iteration": 0, "residual": float(np.abs(F).max()),
                "lambda_min": float(lam.min()), "step": 0.0}]
    status = "max iterations"
    it = 0
    for it in range(1, max_iter + 1):
        res = float(np.abs(F).max())
        if res <= tol * scale and lam.min() >= -psd_tol:
            status = "converged"
            it -= 1
            break
        try:
            dx = _linear_solve(sys_.jacobian(h), -F)
        except RuntimeError:
            status = "singular Jacobian"
            break
        if not np.all(np.isfinite(dx)):
            status = "singular Jacobian"
            break
        alpha, accepted = 1.0, False
        norm0 = np.linalg.norm(F)
        while alpha >= 1.0 / 1024:
            y = x + alpha * dx
            F1, lam1, h1 = sys_.residual(y)
            if lam1.min() >= min(-psd_tol, lam.min()) and np.linalg.norm(F1) < (
                    1 - 1e-4 * alpha) * norm0:
                accepted = True
                break
            alpha /= 2
        if not accepted:
            status = "line search failed"
            break
        x, F, lam, h = y, F1, lam1, h1
        history.append({"iteration": it, "residual": float(np.abs(F).max()),
                        "lambda_min": float(lam.min()), "step": alpha})
    full[sys_.rows] = x
    U = np.full(sys_.n_all, np.nan)
    keep = np.concatenate([sys_.rows, sys_.fixed])
    U[keep] = full[keep]
    res = float(np.abs(F).max())
    bnd = float(np.abs(U[sys_.fixed] - bvals).max())
    ok = res <= tol * scale and lam.min() >= -psd_tol and bnd <= tol
    if status == "converged" and not ok:
        status = "certificate failure"
    report = SolveReport(it, res, float(lam.min()), bnd, bool(ok),
                         "converged" if ok else status, int(len(sys_.rows)), history)
    return U.reshape(box.shape), report


def recompute_certificates(problem: DirichletProblem, U) -> dict:
    """Certificates of a returned grid by code paths independent of the solver.

    ``residual`` and ``lambda_min`` use array stencils (:class:`GridHessian`)
    rather than the solver's sparse matrices, so they must agree with the
    report to rounding.  ``density_gap`` compares the target density with
    :func:`acx.ma.ma_density_smooth` on the grid-backed field, whose nested
    differences differ from the compact stencil at order ``h^2``.
    """
    from .ma import ma_density_smooth

    box = problem.box
    unknown, band = problem.masks()
    U = np.asarray(U, dtype=float).reshape(box.shape)
    filled = np.where(np.isfinite(U), U, 0.0)
    GH = GridHessian(box, problem.calc, problem.metric)
    sel = unknown[GH.inner]
    h = GH.apply(filled)[sel]
    det = np.real(h[:, 0, 0] * h[:, 1, 1] - np.abs(h[:, 0, 1]) ** 2)
    P = GH.points[sel]
    f = problem.density(P)
    target = 2.0 * f * GH.det_g[sel]
    lam = np.linalg.eigvalsh(h)[:, 0]
    bvals = problem.boundary_values(np.flatnonzero(band.ravel()))
    out = {"residual": float(np.abs(det - target).max()), "lambda_min": float(lam.min()),
           "boundary_error": float(np.abs(U[band] - bvals).max())}
    deep = unknown & box.interior_mask(2)
    if deep.any():
        d = problem.ball.distance(box.mesh())
        deep &= d < problem.ball.radius - 2 * float(np.max(box.h))
    if deep.any():
        field_ = ScalarField.from_grid(box, filled)
        Q = box.mesh()[deep]
        dens = ma_density_smooth(field_, problem.calc, Q, problem.metric)
        out["density_gap"] = float(np.abs(dens - problem.density(Q)).max())
    return out


def solution_error(problem: DirichletProblem, U, exact: Callable) -> float:
    """Sup error over the unknown vertices against an exact solution."""
    unknown, _ = problem.masks()
    P = problem.box.mesh()[unknown]
    return float(np.abs(np.asarray(U)[unknown] - np.asarray(evaluate(exact, P))).max())


# ---------------------------------------------------------------------------
# comparison principle harness

FLAVORS = ("C2", "lipschitz", "log-modulus")


@dataclass
class ComparisonVerdict:
    flavor: str
    hypotheses_hold: bool
    hypotheses: dict
    conclusion_holds: bool | None
    worst_cell: list | None
    max_excess: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _samples(fn, P) -> np.ndarray:
    if isinstance(fn, ScalarField):
        fn = fn.fn
    return np.asarray(evaluate(fn, P), dtype=float)


def _dyadic_modulus(W, box: Box, mask, kind: str, bands: int = 3) -> dict:
    """Modulus constants of grid samples ``W`` on dyadic distance bands.

    For each band ``k`` the pairs are vertices ``2^k`` cells apart along an
    axis, both inside ``mask``; the band constant is the max of
    ``|dW| / dist`` (Lipschitz) or ``|dW| (log dist)^4`` (log-modulus).
    """
    consts = []
    for k in range(bands):
        step = 2 ** k
        best = 0.0
        for a in range(4):
            sl0 = [slice(None)] * 4
            sl1 = [slice(None)] * 4
            sl0[a] = slice(0, -step)
            sl1[a] = slice(step, None)
            both = mask[tuple(sl0)] & mask[tuple(sl1)]
            if not both.any():
                continue
            dW = np.abs(W[tuple(sl1)] - W[tuple(sl0)])[both]
            dist = step * box.h[a]
            val = dW.max() / dist if kind == "lipschitz" else dW.max() * np.log(dist) ** 4
            best = max(best, float(val))
        consts.append({"distance": float(step * np.max(box.h)), "constant": best})
    return {"bands": consts, "constant": max(c["constant"] for c in consts)}


def comparison_check(u, v, calc: FormCalculus, box: Box, ball: Ball, flavor: str = "C2",
                     H=None, tol: float = 1e-6, modulus_max: float = 1e3,
                     metric: HermitianMetric = DEFAULT_METRIC) -> ComparisonVerdict:
    """Check the hypotheses of a comparison principle, then its conclusion.

    ``C2``: ``v`` psh, ``(i ddbar u)^2 <= (i ddbar v)^2`` where ``i ddbar u > 0``,
    ``limsup (v + H - u) <= 0`` at the boundary; conclusion ``v + H <= u``.
    Densities use analytic jets.

    ``lipschitz`` / ``log-modulus``: ``u, v`` psh, density comparison
    everywhere, ``liminf (u - v) >= 0`` at the boundary, plus a finite
    Lipschitz constant of ``u`` and ``v`` or a finite log-modulus constant
    of ``u - v``, each estimated on dyadic distance bands.  Densities use
    compact finite differences, so kinks are compared as cell averages.

    The conclusion is only evaluated when every hypothesis holds.
    """
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    mesh = box.mesh()
    hmax = float(np.max(box.h))
    d = ball.distance(mesh)
    inside = (d < ball.radius - 1.5 * hmax) & box.interior_mask(1)
    # the boundary limit is taken from inside, so the band is the inner ring
    band = (d <= ball.radius) & (d >= ball.radius - 1.5 * hmax)
    P = box.points()
    Us, Vs = _samples(u, P).reshape(box.shape), _samples(v, P).reshape(box.shape)
    Hs = np.zeros(box.shape) if H is None else _samples(H, P).reshape(box.shape)
    hyp = {}
    Q = mesh[inside]
    if flavor == "C2":
        from .ma import ma_density_smooth

        du = ma_density_smooth(u, calc, Q, metric)
        dv = ma_density_smooth(v, calc, Q, metric)
        lam_u = psh_check(u if isinstance(u, ScalarField) else ScalarField(u), calc, Q).lambda_min
        lam_v = psh_check(v if isinstance(v, ScalarField) else ScalarField(v), calc, Q).lambda_min
        if H is not None:
            lam_H = psh_check(H if isinstance(H, ScalarField) else ScalarField(H), calc,
                              Q).lambda_min
            hyp["H_psh"] = {"lambda_min": float(lam_H.min()), "holds": bool(lam_H.min() >= -tol)}
        active = lam_u > tol
    else:
        GH = GridHessian(box, calc, metric)
        du, dv = GH.density(Us)[inside], GH.density(Vs)[inside]
        lam_u, lam_v = GH.lambda_min(Us)[inside], GH.lambda_min(Vs)[inside]
        active = np.ones(len(Q), bool)
    scale = np.maximum(1.0, np.abs(du))
    gap = (du - dv) / scale
    gap_active = gap[active] if active.any() else np.zeros(1)
    k = int(np.argmax(gap_active)) if active.any() else 0
    hyp["density"] = {"max_excess": float(gap_active.max()),
                      "worst_point": Q[active][k].tolist() if active.any() else None,
                      "holds": bool(gap_active.max() <= tol)}
    hyp["v_psh"] = {"lambda_min": float(lam_v.min()), "holds": bool(lam_v.min() >= -tol)}
    if flavor != "C2":
        hyp["u_psh"] = {"lambda_min": float(lam_u.min()), "holds": bool(lam_u.min() >= -tol)}
    margin = (Us - Vs - Hs)[band]
    hyp["boundary"] = {"min_margin": float(margin.min()), "holds": bool(margin.min() >= -tol)}
    region = inside | band
    if flavor == "lipschitz":
        mu = _dyadic_modulus(Us, box, region, "lipschitz")
        mv = _dyadic_modulus(Vs, box, region, "lipschitz")
        c = max(mu["constant"], mv["constant"])
        hyp["modulus"] = {"kind": "lipschitz", "constant": c, "bands_u": mu["bands"],
                          "bands_v": mv["bands"], "holds": bool(c <= modulus_max)}
    elif flavor == "log-modulus":
        mw = _dyadic_modulus(Us - Vs, box, region, "log")
        hyp["modulus"] = {"kind": "log-modulus", "constant": mw["constant"],
                          "bands": mw["bands"], "holds": bool(mw["constant"] <= modulus_max)}
    holds = all(hv["holds"] for hv in hyp.values())
    if not holds:
        return ComparisonVerdict(flavor, False, hyp, None, None, None)
    excess = (Vs + Hs - Us)[inside | band]
    pts = mesh[inside | band]
    k = int(np.argmax(excess))
    return ComparisonVerdict(flavor, True, hyp, bool(excess[k] <= tol), pts[k].tolist(),
                             float(excess[k]))
