"""Regularized maxima and the constructive Richberg approximation on a grid.

All fields are vertex samples of one :class:`acx.core.Box`.  Plurisubharmonicity
is certified through the compact-stencil complex Hessian of
:class:`acx.grid.GridHessian`; the Gaussian pre-smoothing of the patch
candidates uses :func:`scipy.ndimage.gaussian_filter`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jax.numpy as jnp
import numpy as np
from scipy import ndimage

from .core import Box, ScalarField, sq_norm
from .forms import FormCalculus
from .grid import GridHessian, second_derivative_norm
from .hessian import i_ddbar


class SeamError(ValueError):
    """Seam condition of the regularized maximum violated at a boundary vertex."""


class CoverError(ValueError):
    """No cover satisfying the oscillation condition at admissible radii."""


class CandidateError(ValueError):
    """A local candidate failed one of its inequalities."""


class SmoothingError(ValueError):
    """No admissible smoothing width at a gluing step."""


# ---------------------------------------------------------------------------
# the regularized maximum

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_BUMP_MASS = None


def _bump(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    out = np.zeros_like(t)
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _bump_mass() -> float:
    global _BUMP_MASS
    if _BUMP_MASS is None:
        _BUMP_MASS = float(0.5 * np.sum(_GL_W * _bump(0.5 * (_GL_X + 1))))
    return _BUMP_MASS


def profile(t, smooth: bool = False) -> np.ndarray:
    """Even convex profile with ``g(t) = |t|`` for ``|t| >= 1``.

    The default is ``(t^2 + 1) / 2`` on ``[-1, 1]`` (C^{1,1}).  With
    ``smooth=True`` the profile is ``|t| + 2 int_{|t|}^1 (tau - |t|) psi(tau) dtau``
    with ``psi`` a normalized C^infinity bump, so ``g'' = 2 psi`` and
    ``0 <= g - |t| <= g(0) < 1``.
    """
    a = np.abs(np.asarray(t, dtype=float))
    if not smooth:
        return np.where(a <= 1, 0.5 * (a ** 2 + 1), a)
    c = 0.5 / _bump_mass()
    inner = np.minimum(a, 1.0)
    half = 0.5 * (1.0 - inner)
    tau = inner[..., None] + half[..., None] * (_GL_X + 1)
    corr = 2 * c * half * np.sum(_GL_W * (tau - inner[..., None]) * _bump(tau), axis=-1)
    return a + np.where(a < 1, corr, 0.0)


def m_s(x, y, s: float, smooth: bool = False) -> np.ndarray:
    """``m_s(x, y) = (x + y)/2 + (s/2) g((x - y)/s)``.

    ``max <= m_s <= max + s/4`` (``+ s g(0)/2`` for the smooth profile)
    and ``m_s = max`` once ``|x - y| >= s``.

    Examples
    --------
    >>> float(m_s(0.0, 1.0, 0.1))
    1.0
    >>> float(m_s(0.0, 0.0, 0.1))
    0.025
    """
    if not s > 0:
        raise ValueError("smoothing width s must be positive")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return 0.5 * (x + y) + 0.5 * s * profile((x - y) / s, smooth)


def m_s_jax(x, y, s: float):
    """Traceable C^{1,1} version of :func:`m_s` for pointwise fields."""
    t = (x - y) / s
    a = jnp.abs(t)
    g = jnp.where(a <= 1, 0.5 * (t ** 2 + 1), a)
    return 0.5 * (x + y) + 0.5 * s * g


@dataclass(frozen=True)
class RegularizedMax:
    s: float
    smooth: bool = False

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("smoothing width s must be positive")

    def __call__(self, x, y):
        return m_s(x, y, self.s, self.smooth)

    @property
    def excess(self) -> float:
        """Largest value of ``m_s - max``, attained on the diagonal."""
        return 0.5 * self.s * float(profile(0.0, self.smooth))

    def check(self, x, y) -> dict:
        """Defects of the three defining properties on samples ``(x, y)``.

        Each entry is a maximal violation (``<= 0`` means satisfied).
        """
        x, y = np.asarray(x, float), np.asarray(y, float)
        m, mx = self(x, y), np.maximum(x, y)
        far = np.abs(x - y) >= self.s
        return {"lower": float((mx - m).max()),
                "upper": float((m - mx - self.s).max()),
                "equal_far": float(np.abs(m - mx)[far].max()) if far.any() else 0.0}


# ---------------------------------------------------------------------------
# grid masks


def ball_mask(box: Box, center, radius: float) -> np.ndarray:
    d = np.linalg.norm(box.mesh() - np.asarray(center, dtype=float), axis=-1)
    return d < radius


def boundary_band(mask, box: Box, width: float = 1.5) -> np.ndarray:
    """Vertices of ``mask`` within ``width`` cells of a vertex outside it.

    The faces of the box are not boundaries; a mask covering the whole
    grid has an empty band.
    """
    mask = np.asarray(mask, bool)
    if mask.all():
        return np.zeros_like(mask)
    dist = ndimage.distance_transform_edt(mask, sampling=box.h)
    return mask & (dist <= width * float(np.max(box.h)))


def regularized_max(s: float, u1, mask1, u2, mask2, box: Box, smooth: bool = False,
                    width: float = 1.5) -> np.ndarray:
    """Glue ``u1`` on ``mask1`` and ``u2`` on ``mask2`` with ``m_s`` on the overlap.

    The seam conditions ``u1 + s < u2`` on the band of ``mask1`` inside
    ``mask2`` (and symmetrically) are checked first; a violation raises
    :class:`SeamError` naming the vertex.  Outside both masks the result
    is NaN.
    """
    u1, u2 = np.asarray(u1, float), np.asarray(u2, float)
    m1, m2 = np.asarray(mask1, bool), np.asarray(mask2, bool)
    mesh = box.mesh()
    for a, b, ma, mb, name in ((u1, u2, m1, m2, "first"), (u2, u1, m2, m1, "second")):
        band = boundary_band(ma, box, width) & mb
        if band.any():
            gap = (b - a - s)[band]
            k = int(np.argmin(gap))
            if gap[k] <= 0:
                idx = np.argwhere(band)[k]
                raise SeamError(f"seam condition fails on the boundary of the {name} domain at "
                                f"vertex {idx.tolist()} = {mesh[tuple(idx)].tolist()}: "
                                f"gap {gap[k] + s:.3e} < s = {s:.3e}")
    out = np.full(box.shape, np.nan)
    both = m1 & m2
    out[m1 & ~m2] = u1[m1 & ~m2]
    out[m2 & ~m1] = u2[m2 & ~m1]
    out[both] = m_s(u1[both], u2[both], s, smooth)
    return out


# ---------------------------------------------------------------------------
# strictness


def strictness_margin(u, calc: FormCalculus | None = None, points=None, *, box: Box | None = None,
                      mask=None, phi=None, grid: GridHessian | None = None) -> float:
    """Largest ``eps`` with ``lambda_min(i ddbar u) >= eps lambda_max(i ddbar phi)`` pointwise.

    ``phi`` defaults to ``|x|^2``.  Analytic ``u`` (callable or
    :class:`ScalarField`) is probed at ``points``; an array ``u`` is read
    as vertex samples and differentiated with compact stencils over
    ``mask``.  Returns 0 when ``u`` is not strictly psh.

    Examples
    --------
    >>> from acx.core import standard_structure
    >>> calc = FormCalculus.for_structure(standard_structure())
    >>> round(strictness_margin(sq_norm(), calc, np.zeros((3, 4))), 12)
    1.0
    """
    if isinstance(u, np.ndarray):
        if grid is None:
            grid = GridHessian(box, calc)
        box = grid.box
        sel = grid.inner if mask is None else grid.inner & np.asarray(mask, bool)
        lam_u = np.linalg.eigvalsh(grid.apply(u, sel))[:, 0]
        ph = np.sum(box.mesh() ** 2, axis=-1) if phi is None else np.asarray(phi, float)
        lam_phi = np.linalg.eigvalsh(grid.apply(ph, sel))[:, -1]
    else:
        P = np.asarray(points, dtype=float).reshape(-1, 4)
        uf = u if isinstance(u, ScalarField) else ScalarField(u)
        lam_u = np.linalg.eigvalsh(_herm(i_ddbar(uf, calc, P)))[:, 0]
        pf = sq_norm() if phi is None else (phi if isinstance(phi, ScalarField) else ScalarField(phi))
        lam_phi = np.linalg.eigvalsh(_herm(i_ddbar(pf, calc, P)))[:, -1]
    if lam_u.size == 0:
        return 0.0
    if np.any(lam_phi <= 0):
        raise ValueError("phi must be strictly psh where the margin is measured")
    return float(max(0.0, np.min(lam_u / lam_phi)))


def _herm(H):
    return 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))


# ---------------------------------------------------------------------------
# covers


@dataclass
class CoverPiece:
    """Ball pair ``V = B(c, r_V)`` inside ``U = B(c, r_U)`` with certificates."""

    index: int
    center: tuple
    r_U: float
    r_V: float
    sup_u: float
    inf_u_plus_h: float
    rho_lambda_min: float
    _masks: dict = field(default_factory=dict, repr=False, compare=False)

    def rho(self, box: Box) -> np.ndarray:
        """Defining function ``|x - c|^2 - r_U^2`` at the vertices."""
        return np.sum((box.mesh() - np.array(self.center)) ** 2, axis=-1) - self.r_U ** 2

    def masks(self, box: Box, width: float = 1.5) -> tuple:
        """``(U, closed V, boundary band of U)`` vertex masks.

        The band is ``U`` within ``width`` cells of the sphere.
        """
        key = (box, width)
        if key not in self._masks:
            d = np.linalg.norm(box.mesh() - np.array(self.center), axis=-1)
            U = d < self.r_U
            band = U & (d >= self.r_U - width * float(np.max(box.h)))
            self._masks[key] = (U, d <= self.r_V, band)
        return self._masks[key]

    def ring(self, box: Box, width: float = 1.5) -> np.ndarray:
        """Discrete boundary of ``U``: vertices with ``r_U <= d <= r_U + width h``."""
        d = np.linalg.norm(box.mesh() - np.array(self.center), axis=-1)
        return (d >= self.r_U) & (d <= self.r_U + width * float(np.max(box.h)))

    def intersects(self, other: "CoverPiece") -> bool:
        return float(np.linalg.norm(np.subtract(self.center, other.center))) < self.r_U + other.r_U

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("index", "center", "r_U", "r_V", "sup_u",
                                              "inf_u_plus_h", "rho_lambda_min")}


def make_cover(u, h, box: Box, K_lower, K_upper, r_U: float, r_V: float,
               grid: GridHessian, shrink: float = 0.85, min_cells: float = 1.0) -> list:
    """Finite ball cover of the compact box ``K`` with the three conditions.

    Centers sit at the cell centers of a lexicographic lattice whose cells
    have half-diagonal at most ``r_V``, so the closed balls ``V`` cover
    ``K``.  While some ``U`` violates ``sup_U u < inf_U (u + h)`` both
    radii shrink by ``shrink``; :class:`CoverError` is raised once
    ``r_V`` drops below ``min_cells`` grid cells or a ball leaves the box.
    """
    lo, hi = np.broadcast_to(np.asarray(K_lower, float), (4,)), np.broadcast_to(
        np.asarray(K_upper, float), (4,))
    if np.any(hi < lo):
        raise CoverError("K must have lower <= upper")
    if not r_V < r_U:
        raise CoverError("need r_V < r_U")
    hmax = float(np.max(box.h))
    mesh = box.mesh()
    u, hh = np.asarray(u, float), np.asarray(h, float)
    if np.any(hh <= 0):
        raise CoverError("h must be positive")
    while True:
        if r_V < min_cells * hmax:
            raise CoverError(f"oscillation condition unachievable: r_V={r_V:.3e} below "
                             f"{min_cells} cells")
        counts = [max(1, int(np.ceil((b - a) / r_V - 1e-12))) for a, b in zip(lo, hi)]
        axes = [a + (np.arange(m) + 0.5) * (b - a) / m for a, b, m in zip(lo, hi, counts)]
        centers = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 4)
        if not all(box.contains_ball(c, r_U, margin=2 * hmax) for c in centers):
            raise CoverError(f"balls of radius {r_U:.3e} around K do not fit in the box "
                             "with a two-cell margin")
        pieces, ok = [], True
        for i, c in enumerate(centers):
            U = np.linalg.norm(mesh - c, axis=-1) <= r_U
            sup_u, inf_uh = float(u[U].max()), float((u + hh)[U].min())
            if not sup_u < inf_uh:
                ok = False
                break
            pieces.append(CoverPiece(i, tuple(c.tolist()), r_U, r_V, sup_u, inf_uh, 0.0))
        if ok:
            break
        r_U, r_V = shrink * r_U, shrink * r_V
    for p in pieces:
        rho = p.rho(box)
        U, _, _ = p.masks(box)
        lam = grid.lambda_min(rho, U)[U & grid.inner]
        p.rho_lambda_min = float(np.nanmin(lam))
        if not p.rho_lambda_min > 0:
            raise CoverError(f"U_{p.index} is not strictly pseudoconvex: lambda_min(rho)="
                             f"{p.rho_lambda_min:.3e}")
    Kmask = np.all((mesh >= lo - 1e-12) & (mesh <= hi + 1e-12), axis=-1)
    covered = np.zeros(box.shape, bool)
    for p in pieces:
        covered |= p.masks(box)[1]
    if not covered[Kmask].all():
        raise CoverError("the closed balls V do not cover K")
    return pieces


# ---------------------------------------------------------------------------
# local candidates


@dataclass
class LocalCandidate:
    piece: CoverPiece
    values: np.ndarray = field(repr=False)
    backend: str
    eps: float
    checks: dict

    def to_dict(self) -> dict:
        return {"piece": self.piece.index, "backend": self.backend, "eps": self.eps,
                **self.checks}


def _verify_candidate(v, u, h, piece: CoverPiece, box: Box, grid: GridHessian, backend: str,
                      eps: float) -> LocalCandidate:
    U, V, band = piece.masks(box)
    d = v - u
    checks = {"boundary_max": float(d[piece.ring(box)].max()),
              "interior_min": float(d[V].min()),
              "top_max": float((d - h)[U].max())}
    inner = U & grid.inner & ~band
    lam = grid.lambda_min(np.where(np.isfinite(v), v, 0.0), inner)
    checks["lambda_min"] = float(np.nanmin(lam[inner]))
    failures = []
    if not checks["boundary_max"] < 0:
        failures.append(f"v < u on the discrete boundary (max v-u = {checks['boundary_max']:.3e})")
    if not checks["interior_min"] > 0:
        failures.append(f"v > u on closed V (min v-u = {checks['interior_min']:.3e})")
    if not checks["top_max"] < 0:
        failures.append(f"v < u+h on U (max v-u-h = {checks['top_max']:.3e})")
    if not checks["lambda_min"] > 0:
        failures.append(f"strict psh on U (lambda_min = {checks['lambda_min']:.3e})")
    if failures:
        raise CandidateError(f"{backend} candidate for piece {piece.index} fails: "
                             + "; ".join(failures))
    return LocalCandidate(piece, v, backend, eps, checks)


def local_candidate(u, h, piece: CoverPiece, box: Box, grid: GridHessian,
                    backend: str = "patch", u_smooth=None, sigma: float | None = None,
                    eps: float | None = None) -> LocalCandidate:
    """Smooth strictly psh ``v`` on ``U`` with ``v < u`` on the discrete
    boundary of ``U``, ``v > u`` on closed ``V`` and ``v < u + h`` on ``U``.

    The discrete boundary is the ring ``r_U <= d <= r_U + 1.5 h`` where the
    Dirichlet data of the PDE backend lives.

    ``patch``: ``v = u_delta - eps' rho + c`` with ``u_delta`` the Gaussian
    smoothing of ``u`` (width ``sigma``, physical units), ``eps'`` half
    the strictness margin of ``u_delta`` against ``rho`` on ``U`` (or of
    the supplied ``eps``) and ``c`` the midpoint of the admissible
    interval.  The patch constant also keeps ``v < u`` on the inner
    boundary band, the seam that gluing needs.

    ``dirichlet``: solves ``(i ddbar v)^2 = (eps/2)^2 (i ddbar rho)^2`` in
    ``U`` with data ``phi = u_delta - (eps/8) |sup_V rho|`` on the sphere,
    after checking ``u + (eps/4) sup_V rho < phi < u`` on the ring.
    Off the sphere the data is extended as ``phi - (eps/2) rho``.

    Either way the four properties are verified on the grid, and
    :class:`CandidateError` reports the failures.
    """
    u, h = np.asarray(u, float), np.broadcast_to(np.asarray(h, float), box.shape)
    U, V, band = piece.masks(box)
    if u_smooth is None:
        u_smooth = u if sigma is None else gaussian_smoothing(u, box, sigma)
    rho = piece.rho(box)
    region = U & grid.inner
    margin = strictness_margin(u_smooth, mask=region, phi=rho, grid=grid)
    if eps is not None:
        margin = min(margin, eps)
    if not margin > 0:
        raise CandidateError(f"strictness margin not established on U_{piece.index}")
    if backend == "patch":
        e = 0.5 * margin
        w = u_smooth - u - e * rho
        lo = -float(w[V].min())
        hi_band = -float(w[band | piece.ring(box)].max())
        hi_top = -float((w - h)[U].max())
        hi = min(hi_band, hi_top)
        if not lo < hi:
            which = "boundary band" if hi_band <= hi_top else "upper band u+h"
            raise CandidateError(f"patch candidate for piece {piece.index}: interval for the "
                                 f"constant is empty ({lo:.3e} >= {hi:.3e}), binding: {which}")
        v = u_smooth - e * rho + 0.5 * (lo + hi)
        return _verify_candidate(v, u, h, piece, box, grid, "patch", e)
    if backend == "dirichlet":
        from .dirichlet import Ball, DirichletProblem, solve_dirichlet
        from .ma import ma_density_fn

        sup_K = float(rho[V].max())
        phi = u_smooth - margin / 8 * abs(sup_K)
        ring = piece.ring(box)
        lower_ok = (u + margin / 4 * sup_K < phi)[ring]
        upper_ok = (phi < u)[ring]
        if not (lower_ok.all() and upper_ok.all()):
            raise CandidateError(f"dirichlet data for piece {piece.index} leaves the window "
                                 "u + (eps/4) sup rho < phi < u")
        c = jnp.asarray(piece.center)
        rho_fn = lambda x: jnp.sum((x - c) ** 2) - piece.r_U ** 2
        dens = ma_density_fn(rho_fn, grid.calc)
        f = lambda x: (margin / 2) ** 2 * dens(x)
        # data vertices off the sphere see phi - (eps/2) rho, equal to phi on it
        prob = DirichletProblem(Ball(piece.center, piece.r_U), phi - margin / 2 * rho, f,
                                grid.calc, box)
        sol, rep = solve_dirichlet(prob)
        if not rep.converged:
            raise CandidateError(f"dirichlet solve for piece {piece.index} did not converge: "
                                 f"{rep.status}")
        return _verify_candidate(sol, u, h, piece, box, grid, "dirichlet", margin)
    raise ValueError("backend must be 'patch' or 'dirichlet'")


def gaussian_smoothing(u, box: Box, sigma: float) -> np.ndarray:
    """Gaussian smoothing of vertex samples with physical width ``sigma``."""
    return ndimage.gaussian_filter(np.asarray(u, float), sigma / np.asarray(box.h),
                                   mode="nearest", truncate=4.0)


# ---------------------------------------------------------------------------
# Richberg gluing


@dataclass
class RichbergResult:
    psi: np.ndarray = field(repr=False)
    cover: list
    steps: list
    certificates: dict
    passed: bool

    def report_json(self) -> str:
        return json.dumps({"steps": self.steps, "certificates": self.certificates,
                           "passed": self.passed})


def richberg(u, h, box: Box, calc: FormCalculus, K_lower, K_upper, r_U: float, r_V: float,
             sigma: float | None, backend: str = "patch", smooth_profile: bool = False,
             grid: GridHessian | None = None, band_tol: float = 1e-12,
             eps: float | None = None) -> RichbergResult:
    """Smooth strictly psh ``psi`` with ``u <= psi <= u + h`` on the grid.

    ``u`` and ``h`` are vertex samples (or ``h`` a positive constant).
    Starting from ``psi_0 = u`` the pieces are folded in lexicographic
    order, ``psi_{n+1} = max_s{v_{n+1}, psi_n}``, with ``s`` half the
    smallest of

    * ``inf_U (u + h - max(v_{n+1}, psi_n))``,
    * ``inf`` over the boundary band of ``psi_n - v_{n+1}``,
    * ``S_p = inf_{V_p} (v_p - u) / #{k : U_k meets U_p}`` over pieces ``p``
      meeting ``U_{n+1}``.

    ``sigma=None`` skips the Gaussian smoothing (for inputs that are
    already smooth) and ``eps`` caps the strictness margin used by the
    candidates, which keeps ``psi`` closer to ``u``.

    Certificates: the band ``u <= psi <= u + h`` at every vertex, the
    minimum eigenvalue of ``i ddbar psi`` on ``K``, the largest compact
    second difference on ``K`` and the last step that changed ``psi`` on
    ``K``.
    """
    u = np.asarray(u, float).reshape(box.shape)
    h = np.broadcast_to(np.asarray(h, float), box.shape).copy()
    if grid is None:
        grid = GridHessian(box, calc)
    mesh = box.mesh()
    lo = np.broadcast_to(np.asarray(K_lower, float), (4,))
    hi = np.broadcast_to(np.asarray(K_upper, float), (4,))
    Kmask = np.all((mesh >= lo - 1e-12) & (mesh <= hi + 1e-12), axis=-1)
    cover = make_cover(u, h, box, lo, hi, r_U, r_V, grid)
    u_smooth = u if not sigma else gaussian_smoothing(u, box, sigma)
    cands = [local_candidate(u, h, p, box, grid, backend, u_smooth=u_smooth, eps=eps)
             for p in cover]
    counts = [sum(p.intersects(q) for q in cover) for p in cover]
    S = [float((c.values - u)[c.piece.masks(box)[1]].min()) / n for c, n in zip(cands, counts)]
    psi = u.copy()
    everywhere = np.ones(box.shape, bool)
    steps = []
    last_change = -1
    for n, (p, cand) in enumerate(zip(cover, cands)):
        U, _, band = p.masks(box)
        v = cand.values
        bounds = {"upper band": float((u + h - np.maximum(v, psi))[U].min()),
                  "boundary": float((psi - v)[band].min()),
                  "S_p": min(S[q.index] for q in cover if q.intersects(p))}
        binding = min(bounds, key=bounds.get)
        if not bounds[binding] > 0:
            raise SmoothingError(f"no admissible s at step {n}: binding constraint {binding} "
                                 f"= {bounds[binding]:.3e}")
        s = 0.5 * bounds[binding]
        new = regularized_max(s, v, U, psi, everywhere, box, smooth_profile)
        if np.any(new[Kmask] != psi[Kmask]):
            last_change = n
        psi = new
        lam = grid.lambda_min(psi, U)[U & grid.inner]
        steps.append({"piece": p.index, "s": s, "binding": binding, "bounds": bounds,
                      "band_min": float((psi - u).min()), "band_max": float((psi - u - h).max()),
                      "lambda_min": float(np.nanmin(lam)) if lam.size else None})
    lamK = grid.lambda_min(psi, Kmask)[Kmask & grid.inner]
    cert = {"band_lower": float((psi - u).min()),
            "band_upper": float((psi - u - h).max()),
            "lambda_min_K": float(lamK.min()),
            "second_derivative_K": second_derivative_norm(psi, box, Kmask),
            "stabilized_after": last_change,
            "pieces": len(cover), "r_U": cover[0].r_U, "r_V": cover[0].r_V,
            "candidates": [c.to_dict() for c in cands]}
    passed = (cert["band_lower"] >= -band_tol and cert["band_upper"] <= band_tol
              and cert["lambda_min_K"] > 0)
    return RichbergResult(psi, cover, steps, cert, bool(passed))


# ---------------------------------------------------------------------------
# smooth-max schedules


def smoothmax_field(fields, s: float) -> ScalarField:
    """Pointwise ``m_s`` folded over ``fields`` (callables), a C^{1,1} field."""
    fns = [f.fn if isinstance(f, ScalarField) else f for f in fields]

    def fn(x):
        out = fns[0](x)
        for g in fns[1:]:
            out = m_s_jax(out, g(x), s)
        return out

    return ScalarField(fn, "C11", f"m_{s:g}")


def smoothmax_schedule(fields, widths, breakpoints=None):
    """Decreasing schedule of smooth maxima ``m_s`` for ``s`` decreasing.

    ``m_s`` is nondecreasing in ``s`` and tends to the pointwise maximum,
    so a decreasing list of widths gives a decreasing sequence of C^{1,1}
    approximants.
    """
    from .ma import RegularizationSchedule

    widths = [float(w) for w in widths]
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise ValueError("widths must be strictly decreasing")
    members = [smoothmax_field(fields, s) for s in widths]
    return RegularizationSchedule(members, "decreasing",
                                  None if breakpoints is None else [breakpoints(s) for s in widths],
                                  [f"s={s:g}" for s in widths])
