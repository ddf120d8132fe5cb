"""Bigraded exterior calculus over a frame of T^{1,0}.

A k-form is stored by its values on frame vectors: a complex antisymmetric
tensor of shape ``(4,) * k`` indexed by the frame basis
``(zeta_1, zeta_2, conj(zeta_1), conj(zeta_2))``.  Indices 0, 1 are of type
(1,0) and 2, 3 of type (0,1).  The exterior derivative is evaluated on
frame vectors with the invariant formula, so derivative terms come from
``zeta_a`` acting on coefficients and bracket terms from the structure
functions ``[E_a, E_b] = sum_k c^k_ab E_k``.  With ``d = del + delbar - theta
- thetabar`` the four operators are the bidegree components of that
expression.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import jax.numpy as jnp
import numpy as np

from .core import ANALYTIC, AlmostComplexStructure, Box, Frame, ScalarField, evaluate, frame_field

# conj swaps zeta_p <-> conj(zeta_p)
CONJ_INDEX = np.array([2, 3, 0, 1])
_TYPE = np.array([1, 1, 0, 0])


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


_PERMS: dict = {}


def _permutations(k: int):
    if k not in _PERMS:
        _PERMS[k] = [(p, _perm_sign(p)) for p in itertools.permutations(range(k))]
    return _PERMS[k]


def bidegree_mask(p: int, q: int) -> np.ndarray:
    """Boolean mask of tensor entries of bidegree (p, q)."""
    k = p + q
    if k == 0:
        return np.array(p == 0 and q == 0)
    if p < 0 or q < 0:
        return np.zeros((4,) * k, bool)
    counts = sum(np.ix_(*([_TYPE] * k)))
    return np.broadcast_to(counts, (4,) * k) == p


def basis_tensor(indices) -> np.ndarray:
    """Antisymmetric tensor of the wedge of dual frame covectors, e.g. (0, 2) -> zeta1* ^ conj(zeta1*)."""
    k = len(indices)
    T = np.zeros((4,) * k)
    for perm, sign in _permutations(k):
        T[tuple(indices[i] for i in perm)] += sign
    return T


@dataclass(frozen=True)
class PQForm:
    """A (p, q)-form given by its frame-basis coefficient tensor field."""

    p: int
    q: int
    coeffs: Callable
    real: bool = False

    @property
    def degree(self) -> int:
        return self.p + self.q

    @property
    def in_range(self) -> bool:
        return 0 <= self.p <= 2 and 0 <= self.q <= 2

    def __add__(self, other: "PQForm") -> "PQForm":
        if (self.p, self.q) != (other.p, other.q):
            raise ValueError(f"bidegree mismatch {(self.p, self.q)} vs {(other.p, other.q)}")
        f, g = self.coeffs, other.coeffs
        return PQForm(self.p, self.q, lambda x: f(x) + g(x), self.real and other.real)

    def __sub__(self, other: "PQForm") -> "PQForm":
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c) -> "PQForm":
        f = self.coeffs
        return PQForm(self.p, self.q, lambda x: c * f(x), self.real and np.isrealobj(c))

    def multiply(self, fn: Callable) -> "PQForm":
        """Pointwise product with a scalar function."""
        f = self.coeffs
        return PQForm(self.p, self.q, lambda x: fn(x) * f(x), False)

    def values(self, points) -> np.ndarray:
        return evaluate(self.coeffs, points)


def zero_form(p: int, q: int) -> PQForm:
    k = max(p + q, 0)
    return PQForm(p, q, lambda x: jnp.zeros((4,) * k, complex) + 0.0 * x[0], True)


def form_from_components(p: int, q: int, components: dict) -> PQForm:
    """Build a (p, q)-form from ``{sorted index tuple: scalar function}``.

    Keys list p indices from {0, 1} followed by q indices from {2, 3}.
    """
    keys = list(components)
    for key in keys:
        if len(key) != p + q or sum(_TYPE[list(key)]) != p:
            raise ValueError(f"component {key} is not of bidegree {(p, q)}")
    B = jnp.asarray(np.stack([basis_tensor(k) for k in keys])) if keys else None
    fns = [components[k] for k in keys]

    def coeffs(x):
        if B is None:
            return jnp.zeros((4,) * (p + q), complex) + 0.0 * x[0]
        c = jnp.stack([jnp.asarray(f(x), complex) for f in fns])
        return jnp.tensordot(c, B, axes=1)

    return PQForm(p, q, coeffs)


def conj_form(w: PQForm) -> PQForm:
    """Complex conjugate; bidegree (p, q) becomes (q, p)."""
    f = w.coeffs
    k = w.degree

    def coeffs(x):
        T = f(x)
        for ax in range(k):
            T = jnp.take(T, CONJ_INDEX, axis=ax)
        return jnp.conj(T)

    return PQForm(w.q, w.p, coeffs, w.real)


def wedge(a: PQForm, b: PQForm) -> PQForm:
    """Exterior product, ``(a ^ b)(v) = 1/(k! l!) sum_sigma sgn a(v_sigma...) b(...)``."""
    k, l = a.degree, b.degree
    n = k + l
    p, q = a.p + b.p, a.q + b.q
    if n > 4 or p > 2 or q > 2:
        return zero_form(p, q)
    fa, fb = a.coeffs, b.coeffs
    perms = _permutations(n)
    norm = 1.0 / (math.factorial(k) * math.factorial(l))

    def coeffs(x):
        outer = jnp.tensordot(fa(x), fb(x), axes=0) if n else fa(x) * fb(x)
        if n == 0:
            return outer
        acc = 0.0
        for perm, sign in perms:
            # (T o sigma)[i_0..i_n] = T[i_sigma^-1 ...]; summing over all sigma makes order moot
            acc = acc + sign * jnp.transpose(outer, perm)
        return norm * acc

    return PQForm(p, q, coeffs)


class FormCalculus:
    """The operators del, delbar, theta, thetabar for a fixed frame.

    ``jets`` decides how coefficients and frame vectors are differentiated:
    exactly (:data:`~acx.core.ANALYTIC`) or by centered differences
    (:class:`~acx.core.GridJets`).
    """

    def __init__(self, frame: Frame, jets=None):
        self.frame = frame
        self.structure = frame.structure
        self.jets = frame.structure.jets() if jets is None else jets
        Z, C = frame.vectors, frame.coframe
        dZ = self.jets.jacobian(Z)

        def structure_functions(x):
            z = Z(x)
            dz = dZ(x)  # [m, b, j] = d_j Z[m, b]
            ezb = jnp.einsum("ja,mbj->mab", z, dz)
            br = ezb - jnp.swapaxes(ezb, 1, 2)
            return jnp.einsum("km,mab->kab", C(x), br)

        self.structure_functions = structure_functions

    @classmethod
    def for_structure(cls, J: AlmostComplexStructure, box: Box | None = None, seeds=None,
                      jets=None) -> "FormCalculus":
        return cls(frame_field(J, box, seeds), jets)

    # -- vector-field level ---------------------------------------------------
    def derivative_along(self, f: Callable) -> Callable:
        """``x -> (..., 4)`` array of ``E_a f`` for the four frame vectors."""
        df = self.jets.jacobian(f)
        Z = self.frame.vectors
        return lambda x: jnp.tensordot(df(x).astype(complex), Z(x), axes=1)

    def vector_derivative(self, V: Callable, f: Callable) -> Callable:
        """``V f`` for a complex vector field given in coordinate components."""
        df = self.jets.jacobian(f)
        return lambda x: jnp.tensordot(df(x).astype(complex), V(x), axes=1)

    # -- forms -----------------------------------------------------------------
    def function(self, u) -> PQForm:
        fn = u.fn if isinstance(u, ScalarField) else u
        return PQForm(0, 0, lambda x: jnp.asarray(fn(x), complex), True)

    def coordinate_one_form(self, coeffs: Callable) -> PQForm:
        """Complex 1-form ``sum_j w_j dx_j`` converted to the frame basis (all bidegrees)."""
        Z = self.frame.vectors
        return PQForm(1, 0, lambda x: jnp.asarray(coeffs(x), complex) @ Z(x))

    def _d_terms(self, w: PQForm, with_derivative: bool):
        k = w.degree
        T = w.coeffs
        c = self.structure_functions
        D = self.derivative_along(T) if with_derivative else None

        def full(x):
            out = 0.0
            if with_derivative:
                G = jnp.moveaxis(D(x), -1, 0)  # G[a, rest] = E_a T[rest]
                for i in range(k + 1):
                    out = out + (-1) ** i * jnp.moveaxis(G, 0, i)
            if k >= 1:
                K = jnp.tensordot(c(x), T(x), axes=([0], [0]))  # K[a, b, rest]
                for i in range(k + 1):
                    for j in range(i + 1, k + 1):
                        out = out + (-1) ** (i + j) * jnp.moveaxis(K, (0, 1), (i, j))
            if not hasattr(out, "shape"):
                out = jnp.zeros((4,) * (k + 1), complex) + 0.0 * x[0]
            return out

        return full

    def _project(self, full, p: int, q: int, sign: float = 1.0) -> PQForm:
        if p < 0 or q < 0 or p > 2 or q > 2:
            return zero_form(p, q)
        mask = jnp.asarray(bidegree_mask(p, q))
        return PQForm(p, q, lambda x: sign * jnp.where(mask, full(x), 0.0))

    def partial(self, w: PQForm) -> PQForm:
        if not w.in_range:
            return zero_form(w.p + 1, w.q)
        return self._project(self._d_terms(w, True), w.p + 1, w.q)

    def dbar(self, w: PQForm) -> PQForm:
        if not w.in_range:
            return zero_form(w.p, w.q + 1)
        return self._project(self._d_terms(w, True), w.p, w.q + 1)

    def theta(self, w: PQForm) -> PQForm:
        if not w.in_range or w.degree == 0:
            return zero_form(w.p + 2, w.q - 1)
        return self._project(self._d_terms(w, False), w.p + 2, w.q - 1, -1.0)

    def thetabar(self, w: PQForm) -> PQForm:
        if not w.in_range or w.degree == 0:
            return zero_form(w.p - 1, w.q + 2)
        return self._project(self._d_terms(w, False), w.p - 1, w.q + 2, -1.0)

    def d(self, w: PQForm) -> dict:
        """All bidegree components of ``d w`` keyed by bidegree."""
        full = self._d_terms(w, True)
        k = w.degree + 1
        return {(a, k - a): self._project(full, a, k - a) for a in range(k + 1)}

    # -- evaluation helpers ----------------------------------------------------
    def values(self, w: PQForm, points) -> np.ndarray:
        return evaluate(w.coeffs, points)


# ---------------------------------------------------------------------------
# complex vector fields


@dataclass(frozen=True)
class ComplexVectorField:
    """Complex vector field in coordinate components with a bidegree tag."""

    components: Callable
    kind: str = "mixed"  # "(1,0)", "(0,1)" or "mixed"

    def values(self, points) -> np.ndarray:
        return evaluate(self.components, points)

    def conj(self) -> "ComplexVectorField":
        f = self.components
        kind = {"(1,0)": "(0,1)", "(0,1)": "(1,0)"}.get(self.kind, "mixed")
        return ComplexVectorField(lambda x: jnp.conj(f(x)), kind)


def frame_vector(frame: Frame, a: int) -> ComplexVectorField:
    Z = frame.vectors
    return ComplexVectorField(lambda x: Z(x)[:, a], "(1,0)" if a < 2 else "(0,1)")


def lie_bracket(Z: ComplexVectorField, W: ComplexVectorField, jets=ANALYTIC) -> ComplexVectorField:
    """``[Z, W]^m = Z^j d_j W^m - W^j d_j Z^m``."""
    dZ = jets.jacobian(Z.components)
    dW = jets.jacobian(W.components)

    def comp(x):
        z, w = Z.components(x), W.components(x)
        return dW(x) @ z - dZ(x) @ w

    return ComplexVectorField(comp)


def pq_project(V: ComplexVectorField, J: AlmostComplexStructure):
    """Split a complex vector field into its (1,0) and (0,1) parts."""
    M, f = J.matrix, V.components

    def part(sign):
        return lambda x: 0.5 * (f(x) + sign * 1j * (M(x) @ f(x)))

    return ComplexVectorField(part(-1.0), "(1,0)"), ComplexVectorField(part(1.0), "(0,1)")


def frame_coordinates(frame: Frame, V: ComplexVectorField) -> Callable:
    """``x -> (4,)`` coefficients of V in the frame (zeta_1, zeta_2, conj zeta_1, conj zeta_2)."""
    C, f = frame.coframe, V.components
    return lambda x: C(x) @ f(x)
