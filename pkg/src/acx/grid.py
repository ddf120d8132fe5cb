"""Compact finite-difference stencils for grid-sampled functions.

The complex Hessian is linear in the jets of ``u``,

    h_pq = sum_jk A_pq^{jk} d_j d_k u + sum_k B_pq^k d_k u,

with ``A`` and ``B`` built from the frame and its structure functions.
Contracting them with the compact second-order stencil gives a 33-point
operator per ``(p, q)``; the same weights drive both array evaluation and
the sparse Newton matrices of the Dirichlet solver.
"""

from __future__ import annotations

import functools
import itertools

import jax.numpy as jnp
import numpy as np
from scipy import sparse

from .core import Box, DEFAULT_METRIC, HermitianMetric, evaluate
from .forms import FormCalculus

OFFSETS = [(0, 0, 0, 0)]
for _k in range(4):
    for _s in (1, -1):
        e = [0] * 4
        e[_k] = _s
        OFFSETS.append(tuple(e))
for _j, _k in itertools.combinations(range(4), 2):
    for _sj, _sk in itertools.product((1, -1), repeat=2):
        e = [0] * 4
        e[_j], e[_k] = _sj, _sk
        OFFSETS.append(tuple(e))
OFFSETS = np.array(OFFSETS)


def _jet_coefficients_fn(calc: FormCalculus):
    Z = calc.frame.vectors
    dZ = calc.jets.jacobian(Z)
    c = calc.structure_functions

    def coeffs(x):
        z = Z(x)
        zp, zb = z[:, :2], z[:, 2:]
        A = jnp.einsum("jp,kq->pqjk", zp, zb)
        dzb = dZ(x)[:, 2:, :]
        B = jnp.einsum("jp,kqj->pqk", zp, dzb)
        B = B - jnp.einsum("bpq,kb->pqk", c(x)[2:, :2, 2:], z[:, 2:])
        return jnp.concatenate([A.reshape(-1), B.reshape(-1)])

    return coeffs


def jet_coefficients(calc: FormCalculus, points) -> tuple:
    """``(A, B)`` with shapes (N, 2, 2, 4, 4) and (N, 2, 2, 4) at ``points``."""
    R = evaluate(_jet_coefficients_fn(calc), points)
    return R[:, :64].reshape(-1, 2, 2, 4, 4), R[:, 64:].reshape(-1, 2, 2, 4)


def stencil_weights(A, B, h) -> np.ndarray:
    """Complex weights (N, 2, 2, 33) of the compact stencil for ``h_pq``.

    Order of the last axis follows :data:`OFFSETS`.
    """
    h = np.asarray(h, dtype=float)
    As = 0.5 * (A + np.swapaxes(A, -1, -2))
    N = A.shape[0]
    W = np.zeros((N, 2, 2, len(OFFSETS)), complex)
    for i, off in enumerate(OFFSETS):
        nz = np.flatnonzero(off)
        if len(nz) == 0:
            W[..., i] = -2.0 * sum(As[..., k, k] / h[k] ** 2 for k in range(4))
        elif len(nz) == 1:
            k = nz[0]
            W[..., i] = As[..., k, k] / h[k] ** 2 + off[k] * B[..., k] / (2 * h[k])
        else:
            j, k = nz
            W[..., i] = off[j] * off[k] * 2.0 * As[..., j, k] / (4 * h[j] * h[k])
    return W


def fd_jets(samples, h) -> tuple:
    """Compact centered gradient and Hessian on vertices one cell inside the box.

    Returns arrays of shape ``(n-2,)*4 + (4,)`` and ``(n-2,)*4 + (4, 4)``.
    """
    U = np.asarray(samples, dtype=float)
    h = np.asarray(h, dtype=float)
    core = (slice(1, -1),) * 4

    def shifted(off):
        return U[tuple(slice(1 + o, U.shape[a] - 1 + o) for a, o in enumerate(off))]

    g = np.empty(U[core].shape + (4,))
    H = np.empty(U[core].shape + (4, 4))
    for k in range(4):
        e = np.zeros(4, int)
        e[k] = 1
        g[..., k] = (shifted(e) - shifted(-e)) / (2 * h[k])
        H[..., k, k] = (shifted(e) - 2 * U[core] + shifted(-e)) / h[k] ** 2
    for j, k in itertools.combinations(range(4), 2):
        ej, ek = np.eye(4, dtype=int)[j], np.eye(4, dtype=int)[k]
        v = (shifted(ej + ek) - shifted(ej - ek) - shifted(ek - ej) + shifted(-ej - ek))
        H[..., j, k] = H[..., k, j] = v / (4 * h[j] * h[k])
    return g, H


class GridHessian:
    """Complex Hessian of grid samples on a fixed box under a fixed structure.

    Jet coefficients are evaluated once on the vertices one cell inside the
    box; :meth:`apply` then costs a few array contractions per call.
    """

    def __init__(self, box: Box, calc: FormCalculus,
                 metric: HermitianMetric = DEFAULT_METRIC):
        self.box = box
        self.calc = calc
        self.inner = box.interior_mask(1)
        P = box.mesh()[self.inner]
        self.points = P
        self.A, self.B = jet_coefficients(calc, P)
        G = evaluate(metric.g, P)
        self.det_g = np.real(G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0])

    def apply(self, samples, mask=None) -> np.ndarray:
        """Hermitian ``h_pq`` at the inner vertices (those in ``mask`` if given), shape (N, 2, 2)."""
        U = np.asarray(samples).reshape(self.box.shape)
        A, B = self.A, self.B
        if mask is None:
            g, H = fd_jets(U, self.box.h)
        else:
            m = np.asarray(mask, bool) & self.inner
            sel = m[self.inner]
            A, B = A[sel], B[sel]
            if not m.any():
                return np.zeros((0, 2, 2), complex)
            idx = np.argwhere(m)
            lo, hi = idx.min(0), idx.max(0) + 1
            block = tuple(slice(a - 1, b + 1) for a, b in zip(lo, hi))
            g, H = fd_jets(U[block], self.box.h)
            inner_m = m[tuple(slice(a, b) for a, b in zip(lo, hi))]
            g, H = g[inner_m], H[inner_m]
        g, H = g.reshape(-1, 4), H.reshape(-1, 4, 4)
        h = np.einsum("npqjk,njk->npq", A, H) + np.einsum("npqk,nk->npq", B, g)
        return 0.5 * (h + np.conj(np.swapaxes(h, 1, 2)))

    def lambda_min(self, samples, mask=None) -> np.ndarray:
        """Smallest eigenvalue of ``h_pq`` as a full-grid array.

        NaN on the outer shell and outside ``mask``.
        """
        out = np.full(self.box.shape, np.nan)
        sel = self.inner if mask is None else self.inner & np.asarray(mask, bool)
        out[sel] = np.linalg.eigvalsh(self.apply(samples, sel))[:, 0]
        return out

    def density(self, samples) -> np.ndarray:
        """Density of ``(i ddbar u)^2`` against ``dV`` (NaN on the outer shell)."""
        h = self.apply(samples)
        out = np.full(self.box.shape, np.nan)
        out[self.inner] = np.real(h[:, 0, 0] * h[:, 1, 1] - h[:, 0, 1] * h[:, 1, 0]) / (
            2.0 * self.det_g)
        return out


@functools.lru_cache(maxsize=8)
def _offset_index(shape: tuple) -> np.ndarray:
    strides = np.array([int(np.prod(shape[a + 1:])) for a in range(4)])
    return OFFSETS @ strides


def stencil_matrices(box: Box, rows: np.ndarray, W: np.ndarray) -> list:
    """Sparse ``(len(rows), n_vertices)`` matrices, one per ``(p, q)``.

    ``rows`` are flat vertex indices at least one cell inside the box and
    ``W`` their stencil weights from :func:`stencil_weights`.
    """
    n = int(np.prod(box.shape))
    cols = rows[:, None] + _offset_index(box.shape)[None, :]
    r = np.repeat(np.arange(len(rows)), len(OFFSETS))
    out = []
    for p in range(2):
        for q in range(2):
            out.append(sparse.csr_matrix((W[:, p, q, :].ravel(), (r, cols.ravel())),
                                         shape=(len(rows), n)))
    return out


def second_derivative_norm(samples, box: Box, mask=None) -> float:
    """Max over ``mask`` of the largest absolute compact second difference."""
    _, H = fd_jets(np.asarray(samples).reshape(box.shape), box.h)
    m = np.abs(H).max(axis=(-1, -2))
    if mask is not None:
        m = m[np.asarray(mask)[(slice(1, -1),) * 4]]
    return float(m.max()) if m.size else 0.0
