"""Eigenvalue counting, Weyl coefficients and asymptotic fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .eigensolve import Spectrum, counting
from .errors import InvalidDimension, WindowBeyondReliability, WindowTooSparse
from .geometry import unit_ball_volume

MIN_WINDOW_POINTS = 10


@dataclass(frozen=True)
class WeylFit:
    C_fit: float
    D_fit: Optional[float]
    C_theory: float
    window: tuple
    relative_error: float
    mode: str
    n_points: int

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def weyl_coefficient(n: int, volume: float) -> float:
    """Leading Weyl constant ``v_n |Omega| / (2 pi)^n``."""
    if int(n) != n or n < 2:
        raise InvalidDimension(f"Weyl coefficient needs an integer n >= 2, got {n!r}")
    if not volume > 0:
        raise ValueError(f"volume must be positive, got {volume!r}")
    return unit_ball_volume(int(n)) * volume / (2 * math.pi) ** n


def _symbol_ratio(xi):
    """``(sum_j xi_j^2 / sum_{j,k} xi_j^2 xi_k^2)^(n/2)`` for unit vectors in rows of ``xi``."""
    sq = xi**2
    num = sq.sum(axis=1)
    den = num**2
    return (num / den) ** (xi.shape[1] / 2)


def kozlov_constant(n: int, volume: float, resolution: int = 64) -> float:
    """Sphere-integral form of the leading constant, evaluated by quadrature.

    n=2: trapezoid rule with ``resolution`` points on the unit circle.
    n=3: Gauss-Legendre in ``cos(theta)`` (``resolution`` nodes) times a
    trapezoid rule in ``phi`` (``2 * resolution`` nodes).
    """
    if n not in (2, 3):
        raise InvalidDimension(f"quadrature implemented for n in {{2, 3}}, got {n!r}")
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if n == 2:
        t = 2 * math.pi * np.arange(resolution) / resolution
        xi = np.column_stack([np.cos(t), np.sin(t)])
        sphere = 2 * math.pi * _symbol_ratio(xi).mean()
    else:
        c, w = np.polynomial.legendre.leggauss(resolution)
        nphi = 2 * resolution
        phi = 2 * math.pi * np.arange(nphi) / nphi
        C, P = np.meshgrid(c, phi, indexing="ij")
        S = np.sqrt(1 - C**2)
        xi = np.column_stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), C.ravel()])
        vals = _symbol_ratio(xi).reshape(C.shape)
        sphere = float(np.sum(w[:, None] * vals) * 2 * math.pi / nphi)
    return float(volume * sphere / (n * (2 * math.pi) ** n))


def _window_samples(spectrum, window):
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ValueError(f"window must satisfy 0 < lo < hi, got {window}")
    if hi > spectrum.reliable_below:
        raise WindowBeyondReliability(
            f"window upper end {hi:g} exceeds reliable_below={spectrum.reliable_below:g}"
        )
    eigs = np.sort(np.asarray(spectrum.eigenvalues, dtype=float))
    lam = eigs[(eigs >= lo) & (eigs <= hi)]
    N = np.array([counting(eigs, x) for x in lam], dtype=float)
    return lam, N, (lo, hi)


def fit_counting(spectrum: Spectrum, n: int, window, mode: str = "two_term", C_theory: Optional[float] = None,
                 volume: Optional[float] = None) -> WeylFit:
    """Least-squares fit of the counting function, sampled at the eigenvalues in ``window``.

    ``one_term`` fits ``N ~ C lam^(n/2)``; ``two_term`` fits
    ``N ~ C lam^(n/2) + D lam^((n-1)/2)``. The theory constant comes from
    ``C_theory`` or from ``volume``.
    """
    lam, N, win = _window_samples(spectrum, window)
    if lam.size < MIN_WINDOW_POINTS:
        raise WindowTooSparse(f"only {lam.size} eigenvalues in window {win}, need {MIN_WINDOW_POINTS}")
    if C_theory is None:
        if volume is None:
            raise ValueError("pass C_theory or volume")
        C_theory = weyl_coefficient(n, volume)
    cols = [lam ** (n / 2)]
    if mode == "two_term":
        cols.append(lam ** ((n - 1) / 2))
    elif mode != "one_term":
        raise ValueError(f"unknown fit mode {mode!r}")
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, N, rcond=None)
    C_fit = float(coef[0])
    D_fit = float(coef[1]) if mode == "two_term" else None
    return WeylFit(C_fit, D_fit, float(C_theory), win, abs(C_fit - C_theory) / C_theory, mode, int(lam.size))


def remainder_diagnostic(spectrum: Spectrum, n: int, C_theory: float, window=None) -> list:
    """Rows ``(lam, N, C lam^(n/2), (N - C lam^(n/2)) / lam^((n - 1/2)/2))``, no verdict."""
    eigs = np.sort(np.asarray(spectrum.eigenvalues, dtype=float))
    eigs_pos = eigs[eigs > 0]
    if window is not None:
        lo, hi = window
        sel = eigs_pos[(eigs_pos >= lo) & (eigs_pos <= hi)]
    else:
        sel = eigs_pos[eigs_pos <= spectrum.reliable_below]
    rows = []
    for x in sel:
        N = counting(eigs, x)
        model = C_theory * x ** (n / 2)
        rows.append((float(x), int(N), float(model), float((N - model) / x ** ((n - 0.5) / 2))))
    return rows


def power_law_spectrum(C: float, n: int, count: int, D: float = 0.0) -> Spectrum:
    """Eigenvalues whose counting function is exactly ``C lam^(n/2) + D lam^((n-1)/2)`` at each eigenvalue."""
    lams = []
    for j in range(1, count + 1):
        if D == 0.0:
            lams.append((j / C) ** (2 / n))
            continue
        # f is increasing in s = lam^(1/2) beyond its minimum at s_min
        def f(s):
            return C * s**n + D * s ** (n - 1) - j

        lo = max(0.0, -D * (n - 1) / (C * n))
        hi = lo + 1.0
        while f(hi) < 0:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        lams.append(hi * hi)
    return Spectrum(np.array(lams))


def rectangle_dirichlet_eigenvalues(width: float, height: float, lam_max: float) -> np.ndarray:
    """Analytic Dirichlet eigenvalues ``pi^2 (p^2/w^2 + q^2/h^2)`` up to ``lam_max``."""
    pmax = int(math.sqrt(lam_max) * width / math.pi) + 1
    qmax = int(math.sqrt(lam_max) * height / math.pi) + 1
    p, q = np.meshgrid(np.arange(1, pmax + 1), np.arange(1, qmax + 1), indexing="ij")
    lam = math.pi**2 * ((p / width) ** 2 + (q / height) ** 2)
    return np.sort(lam[lam <= lam_max].ravel())


def dominance_failures(krein_eigs, dirichlet_eigs) -> list:
    """Eigenvalues ``x`` (from either list) with ``N(x, Krein) > N(x, Dirichlet)``."""
    kr = np.sort(np.asarray(krein_eigs))
    di = np.sort(np.asarray(dirichlet_eigs))
    top = min(kr[-1], di[-1])
    pts = np.unique(np.concatenate([kr, di]))
    pts = pts[pts <= top]
    return [float(x) for x in pts if counting(kr, x) > counting(di, x)]
