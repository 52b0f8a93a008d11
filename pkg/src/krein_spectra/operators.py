"""Finite-difference realizations of -Laplace + V on a GridDomain.

Padded vectors live on interior nodes followed by ring nodes. With ``C`` the
interior-by-ring stencil adjacency, the building blocks are

* ``L_int`` (Dirichlet realization): ``(2n/h^2 + V)`` on the diagonal,
  ``-1/h^2`` per interior neighbour;
* ``L_ext = [L_int; -C^T/h^2]``: the stencil applied to zero-extended
  interior vectors, i.e. the clamped (minimal) operator;
* ``L_ext^T = [L_int, -C/h^2]``: the stencil on padded vectors evaluated at
  interior nodes, i.e. the maximal operator.

The buckling pencil is ``(L_ext^T L_ext, L_int)``; the lumped mass ``h^n I``
cancels from both sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import LengthMismatch, NegativePotential, TooLarge, UnsupportedShape
from .geometry import GridDomain, shape_center


@dataclass(frozen=True, eq=False)
class Potential:
    """Nonnegative potential sampled on padded nodes (interior, then ring)."""

    kind: str
    sampled: np.ndarray

    @property
    def is_zero(self):
        return not np.any(self.sampled)

    def interior(self, domain):
        return self.sampled[: domain.n_int]

    def ring(self, domain):
        return self.sampled[domain.n_int :]


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def sample_potential(spec, domain: GridDomain) -> Potential:
    """Sample a potential description at the padded nodes of ``domain``.

    ``spec`` is a number (constant), a ``Potential`` already sampled on this
    domain, or a dict with ``kind`` one of ``constant`` (``value``), ``radial``
    (``table`` of ``[radius, value]`` rows, optional ``center``), ``grid_file``
    (``path``) or ``grid_values`` (``values``).
    """
    if isinstance(spec, Potential):
        if spec.sampled.size != domain.n_pad:
            raise LengthMismatch(f"potential has {spec.sampled.size} values, domain has {domain.n_pad} nodes")
        return spec
    if spec is None:
        spec = 0.0
    if isinstance(spec, (int, float)):
        spec = {"kind": "constant", "value": float(spec)}
    kind = spec.get("kind", "constant")
    if kind == "constant":
        values = np.full(domain.n_pad, float(spec.get("value", 0.0)))
    elif kind == "radial":
        table = np.asarray(spec["table"], dtype=float)
        if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 1:
            raise LengthMismatch("radial potential table must be a list of [radius, value] rows")
        order = np.argsort(table[:, 0])
        center = np.asarray(spec.get("center", shape_center(domain.shape)), dtype=float)
        dist = np.linalg.norm(domain.coords(domain.padded_nodes) - center, axis=1)
        values = np.interp(dist, table[order, 0], table[order, 1])
    elif kind in ("grid_file", "grid_values"):
        if kind == "grid_file":
            values = np.loadtxt(Path(spec["path"]), dtype=float, ndmin=1)
        else:
            values = np.asarray(spec["values"], dtype=float).ravel()
        if values.size != domain.n_pad:
            raise LengthMismatch(
                f"potential file has {values.size} values, expected {domain.n_pad} "
                f"({domain.n_int} interior + {domain.n_ring} ring)"
            )
    else:
        raise LengthMismatch(f"unknown potential kind {kind!r}")
    if not np.all(np.isfinite(values)):
        raise NegativePotential("potential values must be finite")
    if np.any(values < 0):
        raise NegativePotential(f"potential is negative at {int(np.sum(values < 0))} node(s), min {values.min()}")
    return Potential(kind=kind, sampled=_freeze(values))


def _potential(V, domain):
    return sample_potential(V, domain)


@dataclass(frozen=True, eq=False)
class InteriorOperator:
    matrix: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class ExtendedOperator:
    matrix: sp.csr_matrix
    n_int: int
    n_ring: int

    @property
    def interior_block(self):
        return self.matrix[: self.n_int]

    @property
    def ring_block(self):
        return self.matrix[self.n_int :]

    @property
    def max_operator(self):
        """Stencil on padded vectors, evaluated at interior nodes."""
        return self.matrix.T.tocsr()


@dataclass(frozen=True, eq=False)
class Pencil:
    A: sp.csr_matrix
    B: sp.csr_matrix
    R: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class NeumannOperator:
    """Variational Neumann realization on interior and ring nodes.

    ``stiffness`` is symmetric positive semidefinite; ``mass`` holds the
    lumped weights (fraction of each node's dual cell inside the shape). The
    ghost-reflection operator is ``diag(mass)^-1 @ stiffness``.
    """

    stiffness: sp.csr_matrix
    mass: np.ndarray

    @property
    def matrix(self):
        return self.stiffness

    @property
    def mass_matrix(self):
        return sp.diags(self.mass, format="csr")

    @property
    def ghost_reflection(self):
        return sp.diags(1.0 / self.mass) @ self.stiffness


def _csr(m):
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.sort_indices()
    return m


def ring_coupling(domain: GridDomain) -> sp.csr_matrix:
    """0/1 interior-by-ring adjacency matrix ``C``."""
    rows, cols = domain.interior_ring_pairs
    return _csr(sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(domain.n_int, domain.n_ring)))


def assemble_interior(domain: GridDomain, V=None) -> InteriorOperator:
    V = _potential(V, domain)
    inv_h2 = 1.0 / domain.h**2
    rows, cols = domain.interior_pairs
    diag = 2 * domain.ndim * inv_h2 + V.interior(domain)
    n = domain.n_int
    r = np.concatenate([np.arange(n), rows])
    c = np.concatenate([np.arange(n), cols])
    v = np.concatenate([diag, np.full(rows.size, -inv_h2)])
    return InteriorOperator(_csr(sp.coo_matrix((v, (r, c)), shape=(n, n))))


def assemble_extended(domain: GridDomain, V=None) -> ExtendedOperator:
    L = assemble_interior(domain, V).matrix
    R = -ring_coupling(domain).T / domain.h**2
    return ExtendedOperator(_csr(sp.vstack([L, R])), domain.n_int, domain.n_ring)


def assemble_pencil(domain: GridDomain, V=None) -> Pencil:
    ext = assemble_extended(domain, V)
    L = _csr(ext.interior_block)
    R = _csr(ext.ring_block)
    A = _csr(ext.matrix.T @ ext.matrix)
    A = _csr(0.5 * (A + A.T))
    return Pencil(A=A, B=L, R=R)


def _dual_weights(domain, pts, dirs):
    """Fraction of the dual face/cell around ``pts`` that lies in the shape.

    Sample points sit at quarter-lattice offsets along ``dirs``, so none of
    them can fall on a lattice-aligned boundary.
    """
    q = domain.h / 4.0
    signs = np.array(np.meshgrid(*[[-1, 1]] * len(dirs), indexing="ij")).reshape(len(dirs), -1).T
    hits = np.zeros(len(pts))
    for s in signs:
        off = np.zeros(domain.ndim)
        for sgn, d in zip(s, dirs):
            off[d] = sgn * q
        hits += domain.shape.contains(pts + off)
    return hits / len(signs)


def assemble_neumann(domain: GridDomain, V=None) -> NeumannOperator:
    """Neumann stiffness and lumped mass on interior and ring nodes.

    Edge weights are the fraction of the perpendicular dual face inside the
    shape; for a straight boundary node this reproduces the ghost-reflection
    row ``(2n u_r - 2 u_in - sum of tangential neighbours) / h^2``.
    """
    if not domain.exact_boundary:
        raise UnsupportedShape(f"Neumann operator needs a lattice-aligned boundary, not {domain.shape.kind}")
    V = _potential(V, domain)
    nodes = domain.padded_nodes
    n = nodes.size
    mass = _dual_weights(domain, domain.coords(nodes), list(range(domain.ndim)))
    rows, cols, vals = [], [], []
    inv_h2 = 1.0 / domain.h**2
    for axis, stride in enumerate(domain.strides):
        nb = domain.padded_index(nodes + stride)
        keep = nb >= 0
        p = np.nonzero(keep)[0]
        q = nb[keep]
        mid = 0.5 * (domain.coords(nodes[p]) + domain.coords(nodes[q]))
        w = _dual_weights(domain, mid, [d for d in range(domain.ndim) if d != axis]) * inv_h2
        rows += [p, q, p, q]
        cols += [p, q, q, p]
        vals += [w, w, -w, -w]
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    K = _csr(K + sp.diags(V.sampled * mass))
    return NeumannOperator(stiffness=K, mass=_freeze(mass))


def dirichlet_trace(domain: GridDomain) -> sp.csr_matrix:
    """Selector of ring values from a padded vector."""
    n_ring = domain.n_ring
    return _csr(sp.hstack([sp.csr_matrix((n_ring, domain.n_int)), sp.identity(n_ring, format="csr")]))


def flux_trace(domain: GridDomain, convention: str = "sum") -> sp.csr_matrix:
    """One-sided outward difference ``(u(r) - u(interior neighbour)) / h`` at ring nodes.

    ``convention="sum"`` adds the differences over all interior neighbours of
    a ring node (several only at reentrant corners); ``"mean"`` averages them.
    """
    ir, rc = domain.interior_ring_pairs
    deg = domain.ring_degree().astype(float)
    if convention == "sum":
        scale = np.ones(domain.n_ring)
    elif convention == "mean":
        scale = 1.0 / deg
    else:
        raise ValueError(f"unknown flux convention {convention!r}")
    n_int = domain.n_int
    rows = np.concatenate([np.arange(domain.n_ring), rc])
    cols = np.concatenate([n_int + np.arange(domain.n_ring), ir])
    vals = np.concatenate([deg * scale, -scale[rc]]) / domain.h
    return _csr(sp.coo_matrix((vals, (rows, cols)), shape=(domain.n_ring, domain.n_pad)))


def edge_differences(domain: GridDomain) -> sp.csr_matrix:
    """One row ``(u(r) - u(i)) / h`` per ring-interior stencil edge ``(i, r)``."""
    ir, rc = domain.interior_ring_pairs
    m = ir.size
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([domain.n_int + rc, ir])
    vals = np.concatenate([np.ones(m), -np.ones(m)]) / domain.h
    return _csr(sp.coo_matrix((vals, (rows, cols)), shape=(m, domain.n_pad)))


def zero_pad(domain: GridDomain, u_int) -> np.ndarray:
    u_int = np.asarray(u_int)
    return np.concatenate([u_int, np.zeros(domain.n_ring, dtype=u_int.dtype)])


def kernel_dimension(domain: GridDomain, V=None) -> int:
    """``dim ker(L_ext^T)`` by dense rank computation."""
    if domain.n_pad > 2000:
        raise TooLarge(f"dense rank computation limited to 2000 padded nodes, got {domain.n_pad}")
    M = assemble_extended(domain, V).matrix.toarray().T
    return domain.n_pad - int(np.linalg.matrix_rank(M))


def pencil_identity_error(pencil: Pencil) -> float:
    """``max |A - B^2 - R^T R|`` relative to ``max |A|``."""
    D = pencil.A - pencil.B @ pencil.B - pencil.R.T @ pencil.R
    scale = abs(pencil.A).max()
    return float(abs(D).max() / scale) if D.nnz else 0.0


def clamped_subspace(domain: GridDomain) -> np.ndarray:
    """Orthonormal basis of padded vectors vanishing on the ring and on ring-adjacent interior nodes."""
    ir, _ = domain.interior_ring_pairs
    free = np.setdiff1d(np.arange(domain.n_int), ir)
    Q = np.zeros((domain.n_pad, free.size))
    Q[free, np.arange(free.size)] = 1.0
    return Q


def disjointness_check(domain: GridDomain, convention: str = "edges") -> dict:
    """Compare ``ker(Dirichlet trace) ∩ ker(flux trace)`` with the clamped subspace.

    ``convention="edges"`` uses every one-sided difference separately, so a
    reentrant corner contributes one condition per adjacent side; ``"sum"`` and
    ``"mean"`` collapse them into one row per ring node, which leaves one extra
    null direction at each ring node with two interior neighbours. Returns
    dimensions and the spectral-norm distance of the two orthogonal projectors.
    """
    if domain.n_pad > 500:
        raise TooLarge(f"null-space check limited to 500 padded nodes, got {domain.n_pad}")
    F = edge_differences(domain) if convention == "edges" else flux_trace(domain, convention)
    T = sp.vstack([dirichlet_trace(domain), F]).toarray()
    N = sla.null_space(T)
    Q = clamped_subspace(domain)
    P1 = N @ N.T
    P2 = Q @ Q.T
    dist = float(np.linalg.norm(P1 - P2, 2)) if N.size or Q.size else 0.0
    return {
        "convention": convention,
        "nullspace_dim": int(N.shape[1]),
        "clamped_dim": int(Q.shape[1]),
        "projector_distance": dist,
        "multi_neighbour_ring_nodes": int(np.sum(domain.ring_degree() > 1)),
    }
