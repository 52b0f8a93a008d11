from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from krein_spectra.eigensolve import (
    Spectrum,
    b_orthogonality_error,
    counting,
    residual,
    solve_pencil,
    solve_symmetric,
)
from krein_spectra.errors import NoConvergence, NotPositiveDefinite, ZeroVector
from krein_spectra.geometry import Disk, LShape, Rectangle, rasterize
from krein_spectra.krein import verify_T_reciprocity
from krein_spectra.operators import assemble_interior, assemble_pencil


@pytest.mark.parametrize("mode", ["dense", "iterative"])
def test_pencil_examples(mode):
    s = solve_pencil(np.array([[320.0]]), np.array([[16.0]]), 1, mode=mode)
    assert s.eigenvalues[0] == pytest.approx(20.0, rel=1e-14)
    s = solve_pencil(np.diag([2.0, 6.0]), np.eye(2), 2, mode=mode)
    assert np.allclose(s.eigenvalues, [2, 6], rtol=1e-14)
    rng = np.random.default_rng(1)
    X = rng.standard_normal((6, 6))
    Bm = X @ X.T + 6 * np.eye(6)
    s = solve_pencil(Bm, Bm, 6, mode=mode)
    assert np.allclose(s.eigenvalues, 1.0, rtol=1e-12)


def test_symmetric_examples(square_quarter):
    assert np.allclose(solve_symmetric(np.array([[0.0, 1.0], [1.0, 0.0]]), 2).eigenvalues, [-1, 1], atol=1e-15)
    L = assemble_interior(square_quarter).matrix
    assert solve_symmetric(L, 1).eigenvalues[0] == pytest.approx(18.7452, abs=5e-5)
    assert solve_symmetric(L, 1, mode="iterative").eigenvalues[0] == pytest.approx(128 * np.sin(np.pi / 8) ** 2, rel=1e-12)
    assert np.array_equal(solve_symmetric(np.zeros((3, 3)), 3).eigenvalues, np.zeros(3))
    top = solve_symmetric(L, 1, largest=True).eigenvalues[0]
    assert top == pytest.approx(128 * np.sin(3 * np.pi / 8) ** 2, rel=1e-12)


def test_counting_examples():
    assert counting([2, 5, 5, 9], 5) == 3
    assert counting([0, 0, 3], 10) == 1
    assert counting([2, 5, 5, 9], 1.9) == 0
    assert counting([-1, 0, 2], 2) == 1


def test_residual_examples():
    A, B = np.array([[320.0]]), np.array([[16.0]])
    assert residual(A, B, 20.0, np.array([1.0])) == 0.0
    assert residual(A, B, 21.0, np.array([1.0])) == pytest.approx(16 / 656, rel=1e-14)
    assert residual(A, B, 21.0, np.array([1.0])) == pytest.approx(0.0244, abs=5e-5)
    with pytest.raises(ZeroVector):
        residual(A, B, 20.0, np.zeros(1))


def test_exact_pair_residual(lshape_eighth):
    p = assemble_pencil(lshape_eighth)
    s = solve_pencil(p.A, p.B, 5)
    for j in range(5):
        assert residual(p.A, p.B, s.eigenvalues[j], s.eigenvectors[:, j]) < 1e-14
    assert np.all(s.residuals <= 1e-10)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        solve_pencil(np.eye(2), np.diag([1.0, -1.0]), 1)


def test_no_convergence_reports_partial():
    d = rasterize(Rectangle(1, 1), 1 / 32)
    p = assemble_pencil(d)
    with pytest.raises(NoConvergence) as info:
        solve_pencil(p.A, p.B, 8, mode="iterative", maxiter=12)
    part = info.value.partial
    assert part is not None and not part.converged


@pytest.mark.parametrize("shape,h", [(Rectangle(1, 1), 0.5), (Rectangle(1, 1), 0.25), (LShape(1, 0.5), 0.25),
                                     (LShape(1, 0.5), 0.125)])
def test_T_reciprocity(shape, h):
    r = verify_T_reciprocity(rasterize(shape, h))
    assert r["max_relative_mismatch"] <= 1e-9
    assert r["all_T_positive"]


def test_T_reciprocity_single_node(square_half):
    r = verify_T_reciprocity(square_half)
    assert r["T_eigenvalues"][0] == pytest.approx(1 / 20, rel=1e-14)
    assert r["pencil"][0] == pytest.approx(20, rel=1e-14)
    assert r["max_relative_mismatch"] <= 1e-14


@pytest.mark.parametrize("mode", ["dense", "iterative"])
def test_b_orthogonality(lshape_eighth, mode):
    p = assemble_pencil(lshape_eighth)
    s = solve_pencil(p.A, p.B, 12, mode=mode)
    assert b_orthogonality_error(s, p.B) <= 1e-8


@pytest.mark.parametrize("shape,h", [(Rectangle(1, 1), 1 / 32), (Disk(1), 1 / 16), (LShape(1, 0.5), 1 / 32)])
def test_dense_iterative_agree(shape, h):
    d = rasterize(shape, h)
    assert d.n_int <= 2000
    p = assemble_pencil(d)
    a = solve_pencil(p.A, p.B, 20).eigenvalues
    b = solve_pencil(p.A, p.B, 20, mode="iterative").eigenvalues
    assert np.max(np.abs(a - b) / a) <= 1e-8


def test_iterative_deterministic(lshape_eighth):
    p = assemble_pencil(lshape_eighth)
    a = solve_pencil(p.A, p.B, 6, mode="iterative", seed=3)
    b = solve_pencil(p.A, p.B, 6, mode="iterative", seed=3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_multiplets():
    s = Spectrum(np.array([1.0, 2.0, 2.0 * (1 + 1e-10), 3.0]))
    assert [len(m) for m in s.multiplets()] == [1, 2, 1]


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**31 - 1))
def test_random_pencil_properties(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n))
    A = X @ X.T + 0.1 * np.eye(n)
    B = Y @ Y.T + 0.5 * np.eye(n)
    s = solve_pencil(A, B, n)
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.all(s.eigenvalues > 0)
    assert np.all(s.residuals <= 1e-10)
    assert b_orthogonality_error(s, B) <= 1e-8
    ref = np.sort(np.linalg.eigvals(np.linalg.solve(B, A)).real)
    assert np.allclose(s.eigenvalues, ref, rtol=1e-7)


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(st.floats(-5, 20, allow_nan=False), min_size=1, max_size=30), lam=st.floats(-1, 25))
def test_counting_property(vals, lam):
    eigs = sorted(vals)
    assert counting(eigs, lam) == sum(1 for v in eigs if 0 < v <= lam)


def test_sparse_input_accepted(square_quarter):
    p = assemble_pencil(square_quarter)
    s1 = solve_pencil(p.A, p.B, 3)
    s2 = solve_pencil(p.A.toarray(), p.B.toarray(), 3)
    s3 = solve_pencil(sp.csc_matrix(p.A), sp.csc_matrix(p.B), 3, mode="iterative")
    assert np.allclose(s1.eigenvalues, s2.eigenvalues, rtol=1e-13)
    assert np.allclose(s1.eigenvalues, s3.eigenvalues, rtol=1e-10)
