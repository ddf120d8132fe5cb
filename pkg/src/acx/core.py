"""Almost complex structures, scalar fields with jets, frames and coframes.

Everything pointwise is written as a jax-traceable function of a single
point ``p`` (shape ``(4,)``, coordinates ``(x1, y1, x2, y2)``).  Batched
evaluation over arrays of points goes through :func:`evaluate`, which
vmaps, jits and caches the kernel.

Matrix convention: ``J(p)`` acts on column vectors of components in the
coordinate basis, i.e. ``J @ e_k`` is the image of ``d/dx_k``.  With this
convention the standard structure has ``J d/dx_k = d/dy_k``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)

Array = jnp.ndarray
PointFn = Callable[[Array], Array]

REGULARITIES = ("C2", "C11", "Lipschitz", "continuous")


class StructureError(ValueError):
    """J fails the defining identity J^2 = -I somewhere on the box."""


class FrameDegeneracyError(ValueError):
    """The seeds {X1, JX1, X2, JX2} are linearly dependent at some point."""


# ---------------------------------------------------------------------------
# batched evaluation


_KERNELS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _kernel(fn, nparams: int = 0):
    try:
        return _KERNELS[fn][nparams]
    except (KeyError, TypeError):
        pass
    k = jax.jit(jax.vmap(fn, in_axes=(0,) + (None,) * nparams))
    try:
        _KERNELS.setdefault(fn, {})[nparams] = k
    except TypeError:
        pass
    return k


def evaluate(fn: PointFn, points, *params, chunk: int = 4096) -> np.ndarray:
    """Evaluate a pointwise function on an ``(N, 4)`` array of points.

    Extra ``params`` are passed unbatched as traced arguments, so a kernel
    ``fn(p, *params)`` compiles once for a whole parametrized family.
    Batches are padded to a power of two (capped at ``chunk``) so repeated
    calls with varying ``N`` reuse a handful of compiled kernels.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    n = P.shape[0]
    if n == 0:
        raise ValueError("no points to evaluate")
    kern = _kernel(fn, len(params))
    args = [jnp.asarray(q) for q in params]
    size = min(chunk, 1 << max(0, int(np.ceil(np.log2(n)))))
    out = []
    for start in range(0, n, size):
        block = P[start:start + size]
        m = block.shape[0]
        if m < size:
            block = np.concatenate([block, np.repeat(block[:1], size - m, axis=0)])
        out.append(np.asarray(kern(jnp.asarray(block), *args))[:m])
    return np.concatenate(out, axis=0)


# ---------------------------------------------------------------------------
# derivative providers


class AnalyticJets:
    """Exact derivatives by forward-mode automatic differentiation."""

    kind = "analytic"

    def jacobian(self, f: PointFn) -> PointFn:
        return jax.jacfwd(f)

    def __repr__(self):
        return "AnalyticJets()"


class GridJets:
    """Second-order centered differences with fixed steps per axis.

    Nested use only ever queries lattice points ``p + h * k`` with integer
    ``k``, so when the base fields are grid-backed on a box with the same
    spacing this is exactly differencing of grid samples.
    """

    kind = "grid"

    def __init__(self, h):
        self.h = np.broadcast_to(np.asarray(h, dtype=float), (4,)).copy()

    def jacobian(self, f: PointFn) -> PointFn:
        steps = [np.eye(4)[j] * self.h[j] for j in range(4)]

        def df(p):
            cols = [(f(p + s) - f(p - s)) / (2.0 * hj) for s, hj in zip(steps, self.h)]
            return jnp.stack(cols, axis=-1)

        return df

    def __repr__(self):
        return f"GridJets(h={self.h.tolist()})"


ANALYTIC = AnalyticJets()


# ---------------------------------------------------------------------------
# coordinate boxes


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box with a uniform vertex grid."""

    lower: tuple
    upper: tuple
    resolution: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.broadcast_to(self.lower, (4,)))
        hi = tuple(float(v) for v in np.broadcast_to(self.upper, (4,)))
        res = tuple(int(v) for v in np.broadcast_to(self.resolution, (4,)))
        if not all(np.isfinite(lo + hi)):
            raise ValueError("box corners must be finite")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"box lower {lo} must be < upper {hi} componentwise")
        if any(r < 3 for r in res):
            raise ValueError(f"resolution must be >= 3 per axis, got {res}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "resolution", res)

    @classmethod
    def cube(cls, center=0.0, radius=1.0, n=17):
        c = np.broadcast_to(np.asarray(center, dtype=float), (4,))
        return cls(tuple(c - radius), tuple(c + radius), (n,) * 4)

    @property
    def h(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / (np.array(self.resolution) - 1)

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axes(self) -> list:
        return [np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.resolution)]

    def mesh(self) -> np.ndarray:
        """Vertex coordinates, shape ``resolution + (4,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        return self.mesh().reshape(-1, 4)

    def interior_mask(self, margin: int = 2) -> np.ndarray:
        """Vertices at least ``margin`` cells from every face."""
        masks = []
        for n in self.resolution:
            m = np.zeros(n, bool)
            m[margin:n - margin] = True
            masks.append(m)
        return np.einsum("i,j,k,l->ijkl", *masks).astype(bool)

    def interior_points(self, margin: int = 2) -> np.ndarray:
        return self.mesh()[self.interior_mask(margin)]

    def cell_centers(self) -> np.ndarray:
        """Cell midpoints, shape ``tuple(n - 1 for n in resolution) + (4,)``."""
        ax = [0.5 * (a[1:] + a[:-1]) for a in self.axes()]
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)

    def refined(self) -> "Box":
        """Same box with the spacing halved."""
        return Box(self.lower, self.upper, tuple(2 * r - 1 for r in self.resolution))

    def contains_ball(self, center, radius, margin: float = 0.0) -> bool:
        c = np.asarray(center, dtype=float)
        return bool(np.all(c - radius - margin >= np.array(self.lower) - 1e-12)
                    and np.all(c + radius + margin <= np.array(self.upper) + 1e-12))

    def describe(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper),
                "resolution": list(self.resolution)}


def _grid_lookup(box: Box, samples: np.ndarray) -> PointFn:
    data = jnp.asarray(samples)
    lower = jnp.asarray(box.lower)
    h = jnp.asarray(box.h)
    hi = jnp.asarray(np.array(box.resolution) - 1)

    def lookup(p):
        idx = jnp.clip(jnp.round((p - lower) / h).astype(jnp.int32), 0, hi)
        return data[idx[0], idx[1], idx[2], idx[3]]

    return lookup


# ---------------------------------------------------------------------------
# scalar fields


class ScalarField:
    """Real function with value, gradient and Hessian access.

    Analytic fields differentiate ``fn`` with jax; grid-backed fields hold
    vertex samples of a :class:`Box` and use centered differences, so they
    may only be queried at vertices at least two cells from the faces.
    """

    def __init__(self, fn: PointFn, regularity: str = "C2", name: str = "u",
                 box: Box | None = None, samples: np.ndarray | None = None):
        if regularity not in REGULARITIES:
            raise ValueError(f"regularity must be one of {REGULARITIES}")
        self.fn = fn
        self.regularity = regularity
        self.name = name
        self.box = box
        self.samples = samples
        if samples is None:
            self._grad = jax.grad(fn)
            self._hess = jax.hessian(fn)
        else:
            jets = GridJets(box.h)
            self._grad = jets.jacobian(fn)
            self._hess = jets.jacobian(self._grad)

    # construction -----------------------------------------------------------
    @classmethod
    def from_grid(cls, box: Box, samples, regularity: str = "C2", name: str = "u"):
        samples = np.asarray(samples, dtype=float).reshape(box.resolution)
        return cls(_grid_lookup(box, samples), regularity, name, box, samples)

    def sampled(self, box: Box) -> "ScalarField":
        """Grid-backed copy holding this field's values at the vertices of ``box``."""
        vals = self.values(box.points()).reshape(box.resolution)
        return ScalarField.from_grid(box, vals, self.regularity, self.name)

    @classmethod
    def constant(cls, c: float, name: str = "const"):
        return cls(lambda p: jnp.asarray(c, dtype=float) + 0.0 * p[0], "C2", name)

    @classmethod
    def coordinate(cls, j: int):
        names = ("x1", "y1", "x2", "y2")
        return cls(lambda p: p[j], "C2", names[j])

    # evaluation ---------------------------------------------------------------
    @property
    def backing(self) -> str:
        return "analytic" if self.samples is None else "grid"

    def __call__(self, p):
        return self.fn(p)

    def grad_fn(self) -> PointFn:
        return self._grad

    def hess_fn(self) -> PointFn:
        return self._hess

    def _check_query(self, P):
        if self.samples is None:
            return
        P = np.asarray(P, dtype=float).reshape(-1, 4)
        k = (P - np.array(self.box.lower)) / self.box.h
        if not np.allclose(k, np.round(k), atol=1e-6):
            raise ValueError("grid-backed field queried off the vertex lattice")
        lo, hi = np.min(np.round(k), axis=0), np.max(np.round(k), axis=0)
        if np.any(lo < 2) or np.any(hi > np.array(self.box.resolution) - 3):
            raise ValueError("grid-backed field queried closer than 2h to the boundary")

    def values(self, P) -> np.ndarray:
        return evaluate(self.fn, P)

    def gradient(self, P) -> np.ndarray:
        self._check_query(P)
        return evaluate(self._grad, P)

    def hessian(self, P) -> np.ndarray:
        self._check_query(P)
        return evaluate(self._hess, P)

    # arithmetic ---------------------------------------------------------------
    def _combine(self, other, op, name):
        reg = self.regularity
        grid = self if self.samples is not None else (
            other if isinstance(other, ScalarField) and other.samples is not None else None)
        if grid is not None:
            box = grid.box
            a = self.sampled(box).samples if self.samples is None else self.samples
            if isinstance(other, ScalarField):
                b = other.sampled(box).samples if other.samples is None else other.samples
                if isinstance(other, ScalarField) and other.box not in (None, box):
                    raise ValueError("grid-backed fields live on different boxes")
                reg = REGULARITIES[max(REGULARITIES.index(self.regularity),
                                       REGULARITIES.index(other.regularity))]
            else:
                b = float(other)
            return ScalarField.from_grid(box, np.asarray(op(a, b)), reg, name)
        if isinstance(other, ScalarField):
            reg = REGULARITIES[max(REGULARITIES.index(self.regularity),
                                   REGULARITIES.index(other.regularity))]
            f, g = self.fn, other.fn
            return ScalarField(lambda p: op(f(p), g(p)), reg, name)
        c = float(other)
        f = self.fn
        return ScalarField(lambda p: op(f(p), c), reg, name)

    def __add__(self, other):
        return self._combine(other, jnp.add, f"({self.name}+...)")

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, jnp.subtract, f"({self.name}-...)")

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._combine(other, jnp.multiply, f"({self.name}*...)")

    __rmul__ = __mul__

    def __neg__(self):
        if self.samples is not None:
            return ScalarField.from_grid(self.box, -self.samples, self.regularity, f"-{self.name}")
        f = self.fn
        return ScalarField(lambda p: -f(p), self.regularity, f"-{self.name}")

    def __repr__(self):
        return f"ScalarField({self.name!r}, {self.regularity}, {self.backing})"


def sq_norm(center=None) -> ScalarField:
    """|z - c|^2 in the coordinates of C^2."""
    c = jnp.zeros(4) if center is None else jnp.asarray(center, dtype=float)
    return ScalarField(lambda p: jnp.sum((p - c) ** 2), "C2", "|z|^2")


# ---------------------------------------------------------------------------
# almost complex structures


J_ST = np.array([[0.0, -1.0, 0.0, 0.0],
                 [1.0, 0.0, 0.0, 0.0],
                 [0.0, 0.0, 0.0, -1.0],
                 [0.0, 0.0, 1.0, 0.0]])


class AlmostComplexStructure:
    """Matrix field ``J(p)`` with entrywise first and second derivatives."""

    def __init__(self, matrix_fn: PointFn, name: str = "J", box: Box | None = None,
                 samples: np.ndarray | None = None, params: dict | None = None):
        self.matrix = matrix_fn
        self.name = name
        self.box = box
        self.samples = samples
        self.params = dict(params or {})

    @property
    def backing(self) -> str:
        return "analytic" if self.samples is None else "grid"

    def jets(self):
        """Derivative provider matching this structure's backing."""
        return ANALYTIC if self.samples is None else GridJets(self.box.h)

    def matrices(self, P) -> np.ndarray:
        return evaluate(self.matrix, P)

    def derivative(self, P) -> np.ndarray:
        """``dJ[..., i, j, k] = d J_ij / d x_k``."""
        return evaluate(self.jets().jacobian(self.matrix), P)

    def second_derivative(self, P) -> np.ndarray:
        jets = self.jets()
        return evaluate(jets.jacobian(jets.jacobian(self.matrix)), P)

    def defect(self, P) -> np.ndarray:
        """Sup-norm of ``J^2 + I`` at each point."""
        M = self.matrices(P)
        return np.abs(M @ M + np.eye(4)).max(axis=(1, 2))

    def sampled(self, box: Box) -> "AlmostComplexStructure":
        vals = self.matrices(box.points()).reshape(box.resolution + (4, 4))
        return AlmostComplexStructure(_grid_lookup(box, vals), self.name, box, vals, self.params)

    def __repr__(self):
        return f"AlmostComplexStructure({self.name!r}, {self.backing})"


def make_structure(provider: PointFn, box: Box, name: str = "J", tol: float | None = None,
                   params: dict | None = None) -> AlmostComplexStructure:
    """Wrap a matrix-valued provider, rejecting it unless J^2 = -I on the grid.

    ``tol`` defaults to 1e-9.
    """
    tol = 1e-9 if tol is None else tol
    J = AlmostComplexStructure(provider, name, params=params)
    P = box.points()
    defect = J.defect(P)
    worst = int(np.argmax(defect))
    if not np.all(np.isfinite(defect)) or defect[worst] > tol:
        raise StructureError(
            f"{name}: |J^2 + I| = {defect[worst]:.3e} > {tol:.1e} at {P[worst].tolist()}")
    return J


def standard_structure(box: Box | None = None) -> AlmostComplexStructure:
    M = jnp.asarray(J_ST)
    J = AlmostComplexStructure(lambda p: M + 0.0 * p[0], "jst", params={"kind": "jst"})
    if box is not None:
        make_structure(J.matrix, box, "jst")
    return J


def similarity_structure(S: PointFn, box: Box, name: str = "similarity",
                         det_min: float = 1e-6, params: dict | None = None
                         ) -> AlmostComplexStructure:
    """J = S J_st S^{-1}; satisfies J^2 = -I up to roundoff."""
    dets = np.linalg.det(evaluate(S, box.points()))
    worst = int(np.argmin(np.abs(dets)))
    if not np.isfinite(dets[worst]) or abs(dets[worst]) < det_min:
        raise StructureError(
            f"{name}: |det S| = {abs(dets[worst]):.3e} < {det_min:.1e} "
            f"at {box.points()[worst].tolist()}")
    Jst = jnp.asarray(J_ST)

    def matrix(p):
        s = S(p)
        return s @ Jst @ jnp.linalg.inv(s)

    return make_structure(matrix, box, name, params=params)


def monomial_basis(degree: int):
    """Exponent table and pointwise evaluator of all monomials of total degree <= degree."""
    exps = np.array([e for e in np.ndindex(*(degree + 1,) * 4) if sum(e) <= degree], dtype=int)
    cols = jnp.arange(4)

    def monomials(x):
        # explicit integer powers keep derivatives finite at 0 (x ** 0.0 does not)
        powers = jnp.stack([x ** k for k in range(degree + 1)])
        return jnp.prod(powers[exps, cols], axis=1)

    return exps, monomials


def similarity_coefficients(seed: int, degree: int = 2) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = len(monomial_basis(degree)[0])
    return rng.uniform(-1.0, 1.0, size=(4, 4, n))


def similarity_matrix_fn(degree: int = 2) -> Callable:
    """``(p, coef, scale) -> S(p) = I + scale * coef . monomials(p)``."""
    _, mono = monomial_basis(degree)

    def S(p, coef, scale):
        return jnp.eye(4) + scale * (coef @ mono(p))

    return S


def random_similarity(seed: int, box: Box, scale: float = 0.1, degree: int = 2
                      ) -> AlmostComplexStructure:
    """S = I + scale * P(x) with seeded polynomial entries of total degree <= degree."""
    coef = jnp.asarray(similarity_coefficients(seed, degree))
    Sfn = similarity_matrix_fn(degree)
    return similarity_structure(lambda p: Sfn(p, coef, scale), box, f"similarity:{seed}",
                                params={"kind": "similarity", "seed": seed, "scale": scale,
                                        "degree": degree})


def ja_matrix(a: PointFn) -> PointFn:
    """The block matrix [[0,1,0,0],[-1,0,0,0],[0,0,a,1],[0,0,-1-a^2,-a]]."""

    def matrix(p):
        av = a(p)
        z = 0.0 * av
        return jnp.array([[z, 1.0 + z, z, z],
                          [-1.0 + z, z, z, z],
                          [z, z, av, 1.0 + z],
                          [z, z, -1.0 - av ** 2, -av]])

    return matrix


def ja_structure(a, box: Box, name: str | None = None) -> AlmostComplexStructure:
    """The structure J_a built from a smooth real function ``a``."""
    fn = a.fn if isinstance(a, ScalarField) else a
    label = name or f"ja:{getattr(a, 'name', 'a')}"
    return make_structure(ja_matrix(fn), box, label, params={"kind": "ja", "a": fn})


# ---------------------------------------------------------------------------
# frames


E = np.eye(4)


@dataclass(frozen=True)
class Frame:
    """Frame (zeta_1, zeta_2) of T^{1,0} with zeta_k = X_k - i J X_k.

    ``vectors(p)`` returns the complex 4x4 matrix whose columns are
    zeta_1, zeta_2, conj(zeta_1), conj(zeta_2); ``coframe(p)`` is its
    inverse, so row ``a`` is the dual covector of column ``a``.
    """

    structure: AlmostComplexStructure
    seeds: tuple = (tuple(E[0]), tuple(E[2]))
    vectors: PointFn = field(init=False, repr=False, compare=False)
    coframe: PointFn = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        J = self.structure.matrix
        X = jnp.asarray(np.array(self.seeds, dtype=float)).T  # columns X1, X2

        def vectors(p):
            JX = J(p) @ X
            Z = X - 1j * JX
            return jnp.concatenate([Z, jnp.conj(Z)], axis=1)

        def coframe(p):
            return jnp.linalg.inv(vectors(p))

        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "coframe", coframe)

    def seed_determinant(self, P) -> np.ndarray:
        X = np.array(self.seeds, dtype=float).T
        M = self.structure.matrices(P)
        JX = M @ X
        cols = np.stack([X[:, 0].repeat(len(M)).reshape(4, -1).T, JX[:, :, 0],
                         X[:, 1].repeat(len(M)).reshape(4, -1).T, JX[:, :, 1]], axis=-1)
        return np.linalg.det(cols)

    def duality_residual(self, P) -> np.ndarray:
        Z = evaluate(self.vectors, P)
        C = evaluate(self.coframe, P)
        return np.abs(C @ Z - np.eye(4)).max(axis=(1, 2))

    def volume_factor(self, P) -> np.ndarray:
        """Lebesgue density of zeta1* ^ zeta2* ^ conj(zeta1*) ^ conj(zeta2*)."""
        Z = evaluate(self.vectors, P)
        return np.real(1.0 / np.linalg.det(Z))


def frame_field(J: AlmostComplexStructure, box: Box | None = None, seeds=None,
                det_min: float = 1e-6) -> Frame:
    """Frame from real seeds (default d/dx1, d/dx2), checked for degeneracy on ``box``."""
    seeds = (tuple(E[0]), tuple(E[2])) if seeds is None else tuple(tuple(map(float, s)) for s in seeds)
    if len(seeds) != 2:
        raise ValueError("need exactly two seed vectors")
    F = Frame(J, seeds)
    if box is not None:
        P = box.points()
        det = F.seed_determinant(P)
        worst = int(np.argmin(np.abs(det)))
        if abs(det[worst]) < det_min:
            raise FrameDegeneracyError(
                f"seeds degenerate for {J.name}: det[X1,JX1,X2,JX2] = {det[worst]:.3e} "
                f"at {P[worst].tolist()}")
    return F


# ---------------------------------------------------------------------------
# hermitian metric


@dataclass(frozen=True)
class HermitianMetric:
    """Positive (1,1)-form ``omega = (i/2) sum g_pq (2 zeta_p*) ^ conj(2 zeta_q*)``.

    The coframe is rescaled by two so that for the standard structure
    ``2 zeta_p* = dz_p`` and the default ``g = I`` is the Euclidean Kahler
    form, with ``omega^2 / 2`` the Lebesgue volume.
    """

    coefficients: PointFn | None = None

    def g(self, p):
        if self.coefficients is None:
            return jnp.eye(2, dtype=complex) + 0.0 * p[0]
        return self.coefficients(p)

    def h(self, p):
        """Coefficients in the ``i sum h_pq zeta_p* ^ conj(zeta_q*)`` normalization."""
        return 2.0 * self.g(p)

    def check(self, P) -> float:
        G = evaluate(self.g, P)
        if np.abs(G - np.conj(np.swapaxes(G, -1, -2))).max() > 1e-9:
            raise ValueError("metric coefficients are not Hermitian")
        lam = np.linalg.eigvalsh(G).min()
        if lam <= 0:
            raise ValueError(f"metric not positive definite (min eigenvalue {lam:.3e})")
        return float(lam)


DEFAULT_METRIC = HermitianMetric()
