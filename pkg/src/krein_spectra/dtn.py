"""Discrete Dirichlet-to-Neumann maps and the Krein boundary condition.

Ring values play the role of the Dirichlet trace and the one-sided outward
difference at ring nodes the Neumann trace. ``M(z)`` sends ring data ``phi``
to minus the Neumann trace of its z-harmonic extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooLarge, UnsupportedShape
from .geometry import GridDomain
from .krein import KreinEigenpair, _shifted_solver, split_max_domain, z_harmonic_extension
from .operators import flux_trace, ring_coupling, sample_potential, zero_pad


def _require_exact(domain):
    if not domain.exact_boundary:
        raise UnsupportedShape(f"boundary traces need a lattice-aligned boundary, not {domain.shape.kind}")


@dataclass(frozen=True, eq=False)
class DtNMap:
    z: complex
    matrix: np.ndarray
    domain: GridDomain
    convention: str = "sum"

    def symmetry_error(self):
        M = self.matrix
        return float(np.linalg.norm(M - M.T) / max(np.linalg.norm(M), 1e-300))


@dataclass(frozen=True, eq=False)
class BoundaryOperators:
    Sigma: np.ndarray
    Lambda: np.ndarray
    sigma_min_singular: float
    lambda_min_singular: float
    m_condition: float

    def report(self, rtol=1e-10):
        def inertia(S):
            w = np.linalg.eigvalsh(0.5 * (S + S.T))
            cut = rtol * max(np.abs(w).max(), 1e-300)
            return {"positive": int(np.sum(w > cut)), "negative": int(np.sum(w < -cut)), "zero": int(np.sum(np.abs(w) <= cut))}

        def sym(S):
            return float(np.linalg.norm(S - S.T) / max(np.linalg.norm(S), 1e-300))

        return {
            "sigma_symmetry_error": sym(self.Sigma),
            "lambda_symmetry_error": sym(self.Lambda),
            "sigma_min_singular": self.sigma_min_singular,
            "lambda_min_singular": self.lambda_min_singular,
            "sigma_inertia": inertia(self.Sigma),
            "lambda_inertia": inertia(self.Lambda),
            "m_i_condition": self.m_condition,
        }


def harmonic_extension(domain: GridDomain, V, z, phi) -> np.ndarray:
    """Padded z-harmonic vector with ring values ``phi``."""
    _require_exact(domain)
    return z_harmonic_extension(domain, sample_potential(V, domain), z, phi)


def neumann_trace(domain: GridDomain, u, convention: str = "sum") -> np.ndarray:
    _require_exact(domain)
    return flux_trace(domain, convention) @ np.asarray(u)


def dtn_map(domain: GridDomain, V=None, z=0.0, convention: str = "sum") -> DtNMap:
    """Dense ``n_ring x n_ring`` matrix whose column j is ``-gamma_N f_z(e_j)``."""
    _require_exact(domain)
    V = sample_potential(V, domain)
    lu = _shifted_solver(domain, V, z)
    C = ring_coupling(domain).toarray() / domain.h**2
    X = lu.solve(C.astype(lu.U.dtype))
    ext = np.vstack([X, np.eye(domain.n_ring, dtype=X.dtype)])
    M = -(flux_trace(domain, convention) @ ext)
    if np.isrealobj(M):
        M = np.asarray(M, dtype=float)
    return DtNMap(z=z, matrix=M, domain=domain, convention=convention)


def sigma_lambda(domain: GridDomain, V=None, convention: str = "sum") -> BoundaryOperators:
    """``Sigma = Im(-M(i)^-1)`` and ``Lambda = Im M(i)``."""
    Mi = dtn_map(domain, V, 1j, convention).matrix
    Minv = np.linalg.inv(Mi)
    Sigma = np.imag(-Minv)
    Lam = np.imag(Mi)
    return BoundaryOperators(
        Sigma=Sigma,
        Lambda=Lam,
        sigma_min_singular=float(np.linalg.svd(Sigma, compute_uv=False).min()),
        lambda_min_singular=float(np.linalg.svd(Lam, compute_uv=False).min()),
        m_condition=float(np.linalg.cond(Mi)),
    )


def boundary_condition_residual(domain: GridDomain, u, M0: np.ndarray, convention: str = "sum") -> np.ndarray:
    """``gamma_N u + M(0) gamma_D u`` for a padded vector ``u``."""
    u = np.asarray(u)
    return neumann_trace(domain, u, convention) + M0 @ u[domain.n_int :]


def check_krein_bc(pair: KreinEigenpair, domain: GridDomain, V=None, convention: str = "sum", M0=None):
    """Return ``(exact_residual, trace_residual)`` of the Krein boundary condition.

    ``exact_residual`` uses the harmonic component of ``g`` (from
    ``split_max_domain``) and vanishes up to round-off; ``trace_residual``
    uses ``g`` itself and picks up the one-sided trace of the clamped part.
    """
    _require_exact(domain)
    V = sample_potential(V, domain)
    if M0 is None:
        M0 = dtn_map(domain, V, 0.0, convention).matrix
    _, u0 = split_max_domain(pair.g_padded, domain, V, 0.0)
    n0 = np.linalg.norm(u0)
    exact = np.linalg.norm(boundary_condition_residual(domain, u0, M0, convention)) / n0 if n0 > 0 else 0.0
    trace = np.linalg.norm(boundary_condition_residual(domain, pair.g_padded, M0, convention)) / np.linalg.norm(pair.g_padded)
    return float(exact), float(trace)


def converse_inclusion_trial(domain: GridDomain, V, u, M0=None, convention: str = "sum") -> dict:
    """Split ``u = u_D + u_0`` and compare the boundary residual of ``u`` with the flux of ``u_D``.

    Whenever the residual of ``u`` vanishes, ``u_D`` must have zero flux as
    well as zero ring values, i.e. lie in the clamped subspace.
    """
    _require_exact(domain)
    V = sample_potential(V, domain)
    if M0 is None:
        M0 = dtn_map(domain, V, 0.0, convention).matrix
    u = np.asarray(u, dtype=float)
    u_D, _ = split_max_domain(u, domain, V, 0.0)
    nu = max(np.linalg.norm(u), 1e-300)
    bc = float(np.linalg.norm(boundary_condition_residual(domain, u, M0, convention)) / nu)
    flux = float(np.linalg.norm(neumann_trace(domain, u_D, convention)) / nu)
    return {"bc_residual": bc, "flux_of_dirichlet_part": flux, "ring_of_dirichlet_part": float(np.abs(u_D[domain.n_int :]).max(initial=0.0))}


def random_krein_domain_vector(domain: GridDomain, V, rng) -> np.ndarray:
    """Random clamped vector plus a random harmonic vector (an element of the discrete Krein domain)."""
    _require_exact(domain)
    ir, _ = domain.interior_ring_pairs
    v = rng.standard_normal(domain.n_int)
    v[np.unique(ir)] = 0.0
    phi = rng.standard_normal(domain.n_ring)
    return zero_pad(domain, v) + harmonic_extension(domain, V, 0.0, phi)


def potential_monotonicity(domain: GridDomain, V1, V2, phis, convention: str = "sum") -> dict:
    """Signs of ``phi^T (M_V2(0) - M_V1(0)) phi`` over test vectors ``phis`` (rows)."""
    D = dtn_map(domain, V2, 0.0, convention).matrix - dtn_map(domain, V1, 0.0, convention).matrix
    q = np.einsum("ij,jk,ik->i", phis, D, phis)
    scale = max(np.abs(D).max(), 1e-300)
    return {
        "nonpositive": int(np.sum(q <= 1e-12 * scale)),
        "nonnegative": int(np.sum(q >= -1e-12 * scale)),
        "count": int(q.size),
        "min": float(q.min()),
        "max": float(q.max()),
    }


def small_grid_guard(domain: GridDomain, limit: int = 500):
    if domain.n_pad > limit:
        raise TooLarge(f"check limited to {limit} padded nodes, got {domain.n_pad}")
