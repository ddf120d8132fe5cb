"""Monge-Ampere densities, the weak wedge current and MA measures.

Volume normalization: with the default metric ``omega`` (coefficients
``2 I`` in the ``i sum h zeta* ^ conj(zeta*)`` normalization, the Euclidean
Kahler form for the standard structure) the reference volume is
``dV = omega^2 / 2 = 4 det g zeta1* ^ zeta2* ^ conj(zeta1*) ^ conj(zeta2*)``.
A real (2,2)-form with frame value ``c`` then has density ``c / (4 det g)``
against ``dV``; in particular ``(i ddbar u)^2`` has density
``det(h) / (2 det g)`` and ``(i ddbar |z|^2)^2 = 8 dV`` for the standard
structure.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import jax.numpy as jnp
import numpy as np

from .core import DEFAULT_METRIC, Box, HermitianMetric, ScalarField, evaluate
from .forms import FormCalculus, wedge
from .hessian import ddbar_coefficients, psh_check, wedge11


# ---------------------------------------------------------------------------
# pointwise densities


def _det2(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def ma_density_fn(u, calc: FormCalculus, metric: HermitianMetric = DEFAULT_METRIC):
    """Pointwise density of ``(i ddbar u)^2`` against ``dV``."""
    h = ddbar_coefficients(u, calc)
    return lambda x: jnp.real(_det2(h(x)) / (2.0 * _det2(metric.g(x))))


def cross_density_fn(u, v, calc: FormCalculus, metric: HermitianMetric = DEFAULT_METRIC):
    """Pointwise density of ``i ddbar u ^ i ddbar v`` against ``dV``."""
    hu, hv = ddbar_coefficients(u, calc), ddbar_coefficients(v, calc)
    return lambda x: jnp.real(wedge11(hu(x), hv(x)) / (4.0 * _det2(metric.g(x))))


def dv_factor_fn(calc: FormCalculus, metric: HermitianMetric = DEFAULT_METRIC):
    """Lebesgue density of ``dV`` (identically 1 for the standard structure)."""
    Z = calc.frame.vectors
    return lambda x: jnp.real(4.0 * _det2(metric.g(x)) / jnp.linalg.det(Z(x)))


def ma_density_smooth(u, calc: FormCalculus, points,
                      metric: HermitianMetric = DEFAULT_METRIC) -> np.ndarray:
    """Density of ``(i ddbar u)^2`` against ``dV`` at ``points``.

    Examples
    --------
    >>> from acx.core import standard_structure, sq_norm
    >>> calc = FormCalculus.for_structure(standard_structure())
    >>> float(ma_density_smooth(sq_norm(), calc, np.zeros((1, 4)))[0])
    8.0
    """
    if isinstance(u, ScalarField):
        u._check_query(points)
    return evaluate(ma_density_fn(u, calc, metric), points)


# ---------------------------------------------------------------------------
# weak wedge product


def pairing_integrand_fn(u, v, phi, calc: FormCalculus):
    """Lebesgue integrand of the weak pairing ``<i ddbar u ^ i ddbar v, phi>``.

    The outer operators of the defining expression are moved onto ``phi``
    by Stokes, leaving

        - i ddbar phi ^ (i del u ^ delbar v) - del phi ^ (del u ^ thetabar del v)
        - delbar phi ^ (theta delbar u ^ delbar v)
        + phi (theta thetabar del u ^ delbar v - theta delbar u ^ thetabar del v)

    so only first derivatives of ``u`` and ``v`` are sampled.
    """
    c = calc
    fu, fv, fp = c.function(u), c.function(v), c.function(phi)
    du, dbu = c.partial(fu), c.dbar(fu)
    dbv, dv = c.dbar(fv), c.partial(fv)
    S = wedge(du, dbv).scale(1j)
    A = wedge(du, c.thetabar(dv))
    B = wedge(c.theta(dbu), dbv)
    Z0 = wedge(c.theta(c.thetabar(du)), dbv) - wedge(c.theta(dbu), c.thetabar(dv))
    ddp = c.partial(c.dbar(fp)).scale(1j)
    terms = [wedge(ddp, S).scale(-1.0), wedge(c.partial(fp), A).scale(-1.0),
             wedge(c.dbar(fp), B).scale(-1.0)]
    Z = c.frame.vectors
    pf = phi.fn if isinstance(phi, ScalarField) else phi

    def integrand(x):
        top = sum(t.coeffs(x)[0, 1, 2, 3] for t in terms) + pf(x) * Z0.coeffs(x)[0, 1, 2, 3]
        return jnp.real(top / jnp.linalg.det(Z(x)))

    return integrand


def smooth_pairing_integrand_fn(u, v, phi, calc: FormCalculus):
    """Lebesgue integrand of ``phi i ddbar u ^ i ddbar v`` for C^2 inputs."""
    hu, hv = ddbar_coefficients(u, calc), ddbar_coefficients(v, calc)
    Z = calc.frame.vectors
    pf = phi.fn if isinstance(phi, ScalarField) else phi
    return lambda x: jnp.real(pf(x) * wedge11(hu(x), hv(x)) / jnp.linalg.det(Z(x)))


def bump(center=None, radius: float = 0.6, power: int | None = None) -> ScalarField:
    """Test function supported in the closed ball of ``radius`` around ``center``.

    Default: the C^infinity bump ``exp(1 - 1/t)`` with ``t = 1 - |x - c|^2 / r^2``
    (value 1 at the centre).  With ``power`` the polynomial bump ``t_+^power``.
    """
    c = jnp.zeros(4) if center is None else jnp.asarray(center, dtype=float)

    def phi(x):
        t = 1.0 - jnp.sum((x - c) ** 2) / radius ** 2
        inside = t > 0
        if power is not None:
            return jnp.where(inside, t, 0.0) ** power
        ts = jnp.where(inside, t, 1.0)
        return jnp.where(inside, jnp.exp(1.0 - 1.0 / ts), 0.0)

    return ScalarField(phi, "C2", f"bump(r={radius})")


def _support_check(phi, box: Box, margin: int):
    P = box.points()
    outside = ~box.interior_mask(margin).reshape(-1)
    vals = np.abs(evaluate(phi.fn if isinstance(phi, ScalarField) else phi, P[outside]))
    if vals.max() > 0:
        i = int(np.argmax(vals))
        raise ValueError(f"test function support touches the boundary margin at "
                         f"{P[outside][i].tolist()}")


def wedge_pairing(u, v, phi, calc: FormCalculus, box: Box, margin: int = 2) -> float:
    """Weak pairing ``<i ddbar u ^ i ddbar v, phi>`` by vertex quadrature on ``box``.

    ``phi`` must vanish on the outer ``margin`` layers of vertices.  With
    grid jets on the same lattice only vertex samples of ``u`` and ``v``
    enter, through centered first differences.
    """
    _support_check(phi, box, margin)
    P = box.interior_points(margin)
    vals = evaluate(pairing_integrand_fn(u, v, phi, calc), P)
    return float(np.sum(vals) * box.cell_volume)


def smooth_pairing(u, v, phi, calc: FormCalculus, box: Box, margin: int = 2) -> float:
    """``int phi i ddbar u ^ i ddbar v`` with the same vertex quadrature."""
    _support_check(phi, box, margin)
    P = box.interior_points(margin)
    vals = evaluate(smooth_pairing_integrand_fn(u, v, phi, calc), P)
    return float(np.sum(vals) * box.cell_volume)


# ---------------------------------------------------------------------------
# regions and quadrature


@dataclass(frozen=True)
class Region:
    """Integration region: the whole box, a ball, or a shell ``r0 <= |x - c| <= r``."""

    kind: str = "box"
    center: tuple = (0.0, 0.0, 0.0, 0.0)
    radius: float = 0.0
    inner_radius: float = 0.0

    @classmethod
    def ball(cls, radius: float, center=(0.0, 0.0, 0.0, 0.0), inner_radius: float = 0.0):
        return cls("ball", tuple(map(float, center)), float(radius), float(inner_radius))

    def describe(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius,
                "inner_radius": self.inner_radius}


def sphere_rule(n_eta: int = 8, n_xi: int = 16):
    """Product rule on the unit sphere S^3 in Hopf coordinates.

    ``z1 = cos(eta) e^{i xi1}``, ``z2 = sin(eta) e^{i xi2}``; Gauss-Legendre in
    ``eta`` (measure ``sin eta cos eta``) and uniform in both angles.  Weights
    sum to the area ``2 pi^2``.  Default ``8 * 16 * 16 = 2048`` directions.
    """
    t, w = np.polynomial.legendre.leggauss(n_eta)
    eta = (t + 1.0) * math.pi / 4.0
    w_eta = w * math.pi / 4.0 * np.sin(eta) * np.cos(eta)
    xi = 2.0 * math.pi * np.arange(n_xi) / n_xi
    E, X1, X2 = np.meshgrid(eta, xi, xi, indexing="ij")
    dirs = np.stack([np.cos(E) * np.cos(X1), np.cos(E) * np.sin(X1),
                     np.sin(E) * np.cos(X2), np.sin(E) * np.sin(X2)], axis=-1).reshape(-1, 4)
    W = (w_eta[:, None, None] * np.full((n_xi, n_xi), (2.0 * math.pi / n_xi) ** 2)).reshape(-1)
    return dirs, W


def radial_panels(r0: float, r1: float, breakpoints=(), panels: int = 8, order: int = 8):
    """Gauss-Legendre nodes in ``r`` on ``[r0, r1]`` with panel edges at ``breakpoints``.

    Each interval between consecutive edges is split into ``panels`` equal
    panels carrying ``order`` nodes each.  Returns ``(r, w, panel_id, edges)``.
    """
    edges = sorted({float(r0), float(r1)} | {float(b) for b in breakpoints if r0 < b < r1})
    fine = []
    for a, b in zip(edges[:-1], edges[1:]):
        fine.extend(np.linspace(a, b, panels + 1)[:-1].tolist())
    fine.append(edges[-1])
    t, w = np.polynomial.legendre.leggauss(order)
    rs, ws, ids = [], [], []
    for i, (a, b) in enumerate(zip(fine[:-1], fine[1:])):
        rs.append(0.5 * (b - a) * t + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * w)
        ids.append(np.full(order, i))
    return np.concatenate(rs), np.concatenate(ws), np.concatenate(ids), np.array(fine)


@dataclass
class QuadratureNodes:
    points: np.ndarray   # (N, 4)
    weights: np.ndarray  # Lebesgue weights
    cell: np.ndarray     # owning cell / shell index per node
    cell_index: np.ndarray
    cell_centers: np.ndarray
    method: str


def quadrature_nodes(region: Region, box: Box | None = None, method: str = "cells",
                     breakpoints=(), panels: int = 8, order: int = 8,
                     sphere=(8, 16)) -> QuadratureNodes:
    """Nodes for ``method`` ``"cells"`` (midpoint on box cells, ball masks by
    cell centres) or ``"radial"`` (shells around the region centre)."""
    if method == "cells":
        if box is None:
            raise ValueError("cell quadrature needs a box")
        C = box.cell_centers().reshape(-1, 4)
        idx = np.stack(np.unravel_index(np.arange(len(C)),
                                        tuple(n - 1 for n in box.resolution)), axis=1)
        if region.kind == "ball":
            d = np.linalg.norm(C - np.array(region.center), axis=1)
            keep = (d <= region.radius) & (d >= region.inner_radius)
            C, idx = C[keep], idx[keep]
        elif region.kind != "box":
            raise ValueError(f"unknown region kind {region.kind!r}")
        w = np.full(len(C), box.cell_volume)
        return QuadratureNodes(C, w, np.arange(len(C)), idx, C, "cells")
    if method == "radial":
        if region.kind != "ball":
            raise ValueError("radial quadrature needs a ball region")
        r, wr, pid, edges = radial_panels(region.inner_radius, region.radius, breakpoints,
                                          panels, order)
        dirs, wd = sphere_rule(*sphere)
        P = np.array(region.center) + r[:, None, None] * dirs[None, :, :]
        W = (wr * r ** 3)[:, None] * wd[None, :]
        cell = np.repeat(pid, len(dirs))
        mids = 0.5 * (edges[:-1] + edges[1:])
        centers = np.zeros((len(mids), 4))
        centers[:, 0] = mids
        return QuadratureNodes(P.reshape(-1, 4), W.reshape(-1), cell,
                               np.arange(len(mids))[:, None], centers, "radial")
    raise ValueError(f"unknown quadrature method {method!r}")


def integrate(fn: Callable, nodes: QuadratureNodes) -> tuple:
    """``(total, per-cell totals)`` of a pointwise Lebesgue integrand."""
    vals = evaluate(fn, nodes.points) * nodes.weights
    per = np.bincount(nodes.cell, weights=vals, minlength=len(nodes.cell_centers))
    return float(per.sum()), per


# ---------------------------------------------------------------------------
# measure tables and schedules


@dataclass
class MeasureTable:
    """Cell-indexed masses of a measure on a region."""

    index: np.ndarray
    centers: np.ndarray
    masses: np.ndarray
    region: dict
    method: str = "cells"

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def rows(self):
        for i, c, m in zip(self.index, self.centers, self.masses):
            yield {"cell": [int(k) for k in np.atleast_1d(i)], "center": c.tolist(), "mass": float(m)}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell", "c1", "c2", "c3", "c4", "mass"])
            for row in self.rows():
                w.writerow([":".join(map(str, row["cell"]))] + [repr(x) for x in row["center"]]
                           + [repr(row["mass"])])


@dataclass
class RegularizationSchedule:
    """Monotone sequence of smooth (or C^{1,1}) approximants.

    ``breakpoints[j]`` optionally lists radii where the ``j``-th member
    loses smoothness, used as panel edges by radial quadrature.
    """

    members: list
    direction: str = "decreasing"
    breakpoints: list | None = None
    labels: list | None = None

    def __post_init__(self):
        if self.direction not in ("decreasing", "increasing"):
            raise ValueError("direction must be 'decreasing' or 'increasing'")
        if not self.members:
            raise ValueError("empty schedule")

    def check(self, points, tol: float = 1e-10) -> list:
        """Verify monotonicity at ``points``; returns per-step sup gaps."""
        vals = [evaluate(m.fn, points) for m in self.members]
        gaps = []
        for j in range(1, len(vals)):
            diff = vals[j] - vals[j - 1]
            if self.direction == "decreasing":
                bad = diff.max() > tol
            else:
                bad = diff.min() < -tol
            if bad:
                k = int(np.argmax(diff if self.direction == "decreasing" else -diff))
                raise ValueError(f"schedule not {self.direction} between steps {j - 1} and {j} "
                                 f"at {np.asarray(points)[k].tolist()} (jump {diff[k]:.3e})")
            gaps.append(float(np.abs(diff).max()))
        return gaps


@dataclass
class MAResult:
    table: MeasureTable
    log: list
    converged: bool
    exhausted: bool
    negative_mass: float
    status: str

    def log_jsonl(self) -> str:
        return "\n".join(json.dumps(r) for r in self.log)


def ma_measure(schedule: RegularizationSchedule, calc: FormCalculus, region: Region,
               box: Box | None = None, metric: HermitianMetric = DEFAULT_METRIC,
               method: str = "cells", tol: float = 1e-3, neg_tol: float = 1e-8,
               panels: int = 8, order: int = 8, sphere=(8, 16), stop_early: bool = False
               ) -> MAResult:
    """Masses of ``(i ddbar u_j)^2`` along a monotone schedule.

    Each member is integrated with the chosen quadrature; the log records
    ``{step, total_mass, delta, sup_gap}``.  Converged means the relative
    total-mass delta stayed below ``tol`` over the last two steps.  With
    ``stop_early`` iteration ends as soon as that happens; otherwise the
    whole schedule is used and exhaustion is reported.
    """
    nodes0 = quadrature_nodes(region, box, method, (), panels, order, sphere)
    gaps = schedule.check(nodes0.points)
    log, tables = [], []
    prev = None
    small = 0
    neg = 0.0
    converged = False
    for j, u in enumerate(schedule.members):
        br = schedule.breakpoints[j] if schedule.breakpoints else ()
        nodes = quadrature_nodes(region, box, method, br, panels, order, sphere) \
            if br else nodes0
        dens = ma_density_fn(u, calc, metric)
        dvf = dv_factor_fn(calc, metric)
        total, per = integrate(lambda x: dens(x) * dvf(x), nodes)
        neg = min(neg, float(per.min()) if len(per) else 0.0)
        delta = None if prev is None else abs(total - prev) / max(abs(total), 1e-300)
        log.append({"step": j, "total_mass": total, "delta": delta,
                    "sup_gap": None if j == 0 else gaps[j - 1]})
        tables.append(MeasureTable(nodes.cell_index, nodes.cell_centers, per,
                                   region.describe(), nodes.method))
        if delta is not None:
            small = small + 1 if delta < tol else 0
            converged = small >= 2
        prev = total
        if converged and stop_early:
            break
    exhausted = len(log) == len(schedule.members)
    if neg < -neg_tol:
        status = "negative cell mass: a schedule member is not psh"
    elif converged:
        status = "converged"
    else:
        status = "schedule exhausted before convergence"
    return MAResult(tables[-1], log, converged, exhausted, neg, status)


def cauchy_deltas(log: Sequence[dict]) -> np.ndarray:
    """Absolute successive total-mass differences."""
    t = np.array([r["total_mass"] for r in log])
    return np.abs(np.diff(t))


# ---------------------------------------------------------------------------
# the logarithmic pole and its caps


def _safe_norm(x, floor):
    r2 = jnp.sum(x ** 2)
    big = r2 > floor ** 2
    return jnp.sqrt(jnp.where(big, r2, floor ** 2)), big, r2


def log_pole(A: float = 0.0) -> ScalarField:
    """``L(z) = log|z| + A|z|`` (``-inf`` at the origin)."""
    def L(x):
        r = jnp.sqrt(jnp.sum(x ** 2))
        return jnp.log(r) + A * r
    return ScalarField(L, "continuous", f"L(A={A})")


def cap_constant(k: float, A: float) -> float:
    """Constant making ``1/2 k (k+A) |z|^2 + c`` agree with ``L`` at ``|z| = 1/k``."""
    return -math.log(k) - (k - A) / (2.0 * k)


@dataclass
class SingularModel:
    A: float
    k: float
    constant: float
    L: ScalarField
    Lk: ScalarField

    @property
    def cap_radius(self) -> float:
        return 1.0 / self.k

    @property
    def cap_density(self) -> float:
        """Density of ``(i ddbar L_k)^2`` inside the cap for the standard structure."""
        return 2.0 * self.k ** 2 * (self.k + self.A) ** 2

    @property
    def closed_form_mass(self) -> float:
        """``pi^2 (k+A)^2 / k^2``, the cap mass for the standard structure."""
        return math.pi ** 2 * (self.k + self.A) ** 2 / self.k ** 2

    def matching_residuals(self) -> tuple:
        """Value and radial-derivative mismatch of ``L_k`` against ``L`` at ``|z| = 1/k``."""
        r = 1.0 / self.k
        quad = 0.5 * self.k * (self.k + self.A) * r ** 2 + self.constant
        dquad = self.k * (self.k + self.A) * r
        return (abs(quad - (math.log(r) + self.A * r)), abs(dquad - (1.0 / r + self.A)))


def capped_pole(k: float, A: float = 0.0) -> ScalarField:
    """The C^{1,1} function ``L_k``: quadratic on ``|z| <= 1/k``, ``L`` outside."""
    c = cap_constant(k, A)
    rk = 1.0 / k

    def Lk(x):
        r, outside, r2 = _safe_norm(x, rk)
        quad = 0.5 * k * (k + A) * r2 + c
        return jnp.where(outside, jnp.log(r) + A * r, quad)

    return ScalarField(Lk, "C11", f"L_{k:g}(A={A})")


def singular_model(A: float, k: float, calc: FormCalculus | None = None, points=None,
                   tol: float = 1e-9) -> SingularModel:
    """``L`` and its cap ``L_k``; if ``calc`` and ``points`` are given, L_k must be psh there."""
    if A < 0 or k < 1:
        raise ValueError("need A >= 0 and k >= 1")
    model = SingularModel(float(A), float(k), cap_constant(k, A), log_pole(A), capped_pole(k, A))
    if calc is not None and points is not None:
        rep = psh_check(model.Lk, calc, points, tol=tol)
        if not rep.is_psh:
            raise ValueError(f"L_k with k={k} is not psh: lambda_min = {rep.margin:.3e} "
                             f"at {rep.worst_point}")
    return model


def cap_schedule(ks: Sequence[float], A: float = 0.0) -> RegularizationSchedule:
    ks = sorted(ks)
    return RegularizationSchedule([capped_pole(k, A) for k in ks], "decreasing",
                                  [[1.0 / k] for k in ks], [f"k={k:g}" for k in ks])


def pointmass_mass(k: float, A: float = 0.0, calc: FormCalculus | None = None,
                   metric: HermitianMetric = DEFAULT_METRIC, panels: int = 8, order: int = 8,
                   sphere=(8, 16)) -> float:
    """``(i ddbar L_k)^2 (B_k)`` by radial-shell quadrature on the closed cap ball."""
    from .core import standard_structure

    calc = FormCalculus.for_structure(standard_structure()) if calc is None else calc
    u = capped_pole(k, A)
    nodes = quadrature_nodes(Region.ball(1.0 / k), None, "radial", (), panels, order, sphere)
    dens, dvf = ma_density_fn(u, calc, metric), dv_factor_fn(calc, metric)
    total, _ = integrate(lambda x: dens(x) * dvf(x), nodes)
    return total


# ---------------------------------------------------------------------------
# Sobolev diagnostics


def gradient_density_fn(u, calc: FormCalculus, metric: HermitianMetric = DEFAULT_METRIC):
    """Density of ``i del u ^ delbar u ^ omega`` against ``dV``.

    For the standard structure and metric this is ``|grad u|^2 / 2``.
    """
    fn = u.fn if isinstance(u, ScalarField) else u
    E = calc.derivative_along(fn)

    def dens(x):
        e = E(x)
        hg = jnp.outer(e[:2], e[2:])  # (zeta_p u)(zetabar_q u)
        G = 2.0 * metric.g(x)
        return jnp.real(wedge11(hg, G) / (4.0 * _det2(metric.g(x))))

    return dens


def sobolev_norm(u, calc: FormCalculus, region: Region, box: Box | None = None,
                 metric: HermitianMetric = DEFAULT_METRIC, method: str = "cells",
                 breakpoints=(), panels: int = 8, order: int = 8, sphere=(8, 16),
                 parts: bool = False):
    """``(int u^2 + i del u ^ delbar u ^ omega)^{1/2}`` over ``region``.

    With ``parts`` returns ``(norm, value part, gradient part)`` where the
    parts are the two integrals before the square root.
    """
    fn = u.fn if isinstance(u, ScalarField) else u
    nodes = quadrature_nodes(region, box, method, breakpoints, panels, order, sphere)
    gd, dvf = gradient_density_fn(fn, calc, metric), dv_factor_fn(calc, metric)
    val, _ = integrate(lambda x: fn(x) ** 2 * dvf(x), nodes)
    grad, _ = integrate(lambda x: gd(x) * dvf(x), nodes)
    norm = math.sqrt(max(val + grad, 0.0))
    return (norm, val, grad) if parts else norm


def truncation_gap(j: float, A: float = 0.0) -> ScalarField:
    """``max(L, -j) - L``, supported on ``|z| <= e^{-j}`` for ``A = 0``."""
    def f(x):
        r, _, _ = _safe_norm(x, 1e-300)
        return jnp.maximum(-j - jnp.log(r) - A * r, 0.0)
    return ScalarField(f, "Lipschitz", f"max(L,-{j})-L")


@dataclass
class ScalingFit:
    exponent: float
    residual: float
    radii: list
    norms: list


def scaling_probe(v, calc: FormCalculus, z0, radii: Sequence[float],
                  metric: HermitianMetric = DEFAULT_METRIC, panels: int = 8, order: int = 8,
                  sphere=(8, 16)) -> ScalingFit:
    """Least-squares slope of ``log ||v||_{W^{1,2}(B(z0, R))}`` against ``log R``."""
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValueError("scaling fit needs at least three radii")
    norms = [sobolev_norm(v, calc, Region.ball(R, z0), None, metric, "radial", (), panels,
                          order, sphere) for R in radii]
    X, Y = np.log(radii), np.log(norms)
    coef, res, *_ = np.polyfit(X, Y, 1, full=True)
    resid = float(np.sqrt(res[0] / len(X))) if len(res) else 0.0
    return ScalingFit(float(coef[0]), resid, radii, norms)
