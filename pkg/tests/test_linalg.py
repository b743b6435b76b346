import numpy as np
import pytest

from axmaxwell import modal_ops
from axmaxwell.femcore import SPACE_Y
from axmaxwell.linalg import (
    BorderedSystem,
    HermitianSparse,
    SolverError,
    solve_bordered,
    solve_hpd,
)


def _random_hpd(n, rng):
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = M.conj().T @ M + n * np.eye(n)
    rows, cols = np.nonzero(np.ones((n, n)))
    return HermitianSparse.from_coo(rows, cols, A.ravel(), n), A


def test_from_coo_accumulates_duplicates():
    A = HermitianSparse.from_coo([0, 0, 1], [0, 0, 1], [1.0, 2.0, 5.0], 2)
    assert A.nnz == 2
    dense = A.to_dense()
    assert dense[0, 0] == 3.0
    assert dense[1, 1] == 5.0


def test_matvec_with_empty_rows():
    A = HermitianSparse.from_coo([0, 2], [0, 2], [2.0, 3.0], 3)
    x = np.array([1.0, 5.0, 2.0], dtype=complex)
    assert np.allclose(A.matvec(x), [2.0, 0.0, 6.0])


def test_matvec_matches_dense(rng):
    A, dense = _random_hpd(17, rng)
    x = rng.normal(size=17) + 1j * rng.normal(size=17)
    assert np.allclose(A.matvec(x), dense @ x, rtol=1e-13)


def test_identity_converges_immediately():
    A = HermitianSparse.from_coo(range(5), range(5), np.ones(5), 5)
    b = np.arange(1.0, 6.0, dtype=complex)
    x, info = solve_hpd(A, b)
    assert np.allclose(x, b)
    assert info.iterations == 1


def test_zero_rhs_needs_no_iterations():
    A = HermitianSparse.from_coo(range(4), range(4), 2 * np.ones(4), 4)
    x, info = solve_hpd(A, np.zeros(4))
    assert np.all(x == 0.0)
    assert info.iterations == 0


def test_cg_matches_dense_solve(rng):
    A, dense = _random_hpd(30, rng)
    b = rng.normal(size=30) + 1j * rng.normal(size=30)
    x, info = solve_hpd(A, b, tol=1e-12)
    xd = np.linalg.solve(dense, b)
    assert np.linalg.norm(x - xd) <= 1e-8 * np.linalg.norm(xd)
    assert info.converged


def test_cg_history_non_increasing_every_ten(lshape, lshape_quad, rng):
    msh, _ = lshape
    system = modal_ops.assemble_a_k(msh, 1, SPACE_Y, quad=lshape_quad)
    b = rng.normal(size=system.matrix.n) + 1j * rng.normal(size=system.matrix.n)
    _, info = solve_hpd(system.matrix, b, tol=1e-11)
    sampled = np.array(info.history[::10])
    assert np.all(sampled[1:] <= sampled[:-1])


def test_nonconvergence_reports_residual():
    rng = np.random.default_rng(0)
    A, _ = _random_hpd(40, rng)
    b = rng.normal(size=40) + 1j * rng.normal(size=40)
    with pytest.raises(SolverError) as err:
        solve_hpd(A, b, tol=1e-14, maxit=2)
    assert err.value.residual is not None
    assert err.value.iterations == 2


def test_zero_diagonal_is_rejected():
    A = HermitianSparse.from_coo([0, 1], [1, 0], [1.0, 1.0], 2)
    with pytest.raises(SolverError):
        solve_hpd(A, np.ones(2))


def test_bordered_decouples_without_coupling(rng):
    A, _ = _random_hpd(12, rng)
    F = rng.normal(size=12) + 1j * rng.normal(size=12)
    sys = BorderedSystem(A, np.zeros(12, dtype=complex), 2.0, F, 3.0 + 1.0j)
    x, c = solve_bordered(sys, tol=1e-12)
    xd, _ = solve_hpd(A, F, tol=1e-12)
    assert np.allclose(x, xd, atol=1e-9)
    assert c == pytest.approx((3.0 + 1.0j) / 2.0)


def test_bordered_zero_data(rng):
    A, _ = _random_hpd(9, rng)
    y = rng.normal(size=9) + 1j * rng.normal(size=9)
    sys = BorderedSystem(A, y, 5.0, np.zeros(9, dtype=complex), 0.0)
    x, c = solve_bordered(sys, tol=1e-12)
    assert np.linalg.norm(x) <= 1e-12
    assert abs(c) <= 1e-12


def test_bordered_manufactured_recovery(rng):
    A, dense = _random_hpd(25, rng)
    y = rng.normal(size=25) + 1j * rng.normal(size=25)
    alpha = 40.0
    x0 = rng.normal(size=25) + 1j * rng.normal(size=25)
    c0 = 0.8 - 0.3j
    F = dense @ x0 + c0 * y
    f = np.vdot(y, x0) + alpha * c0
    x, c = solve_bordered(BorderedSystem(A, y, alpha, F, f), tol=1e-13)
    assert abs(c - c0) <= 1e-8 * abs(c0)
    assert np.linalg.norm(x - x0) <= 1e-8 * np.linalg.norm(x0)


def test_bordered_matches_dense_augmented(lshape, lshape_quad, rng):
    msh, _ = lshape
    system = modal_ops.assemble_a_k(msh, 2, SPACE_Y, quad=lshape_quad)
    n = system.matrix.n
    assert n <= 200 or n <= 300  # keep the dense oracle cheap
    y = rng.normal(size=n) + 1j * rng.normal(size=n)
    F = rng.normal(size=n) + 1j * rng.normal(size=n)
    alpha, f = 30.0, 1.5 - 0.5j
    x, c = solve_bordered(BorderedSystem(system.matrix, y, alpha, F, f), tol=1e-13)
    aug = np.zeros((n + 1, n + 1), dtype=complex)
    aug[:n, :n] = system.matrix.to_dense()
    aug[:n, n] = y
    aug[n, :n] = np.conj(y)
    aug[n, n] = alpha
    ref = np.linalg.solve(aug, np.concatenate([F, [f]]))
    got = np.concatenate([x, [c]])
    assert np.linalg.norm(got - ref) <= 1e-8 * np.linalg.norm(ref)


def test_degenerate_coupling_raises(rng):
    A = HermitianSparse.from_coo(range(3), range(3), np.ones(3), 3)
    y = np.array([1.0, 0.0, 0.0], dtype=complex)
    # alpha equal to y^H K^-1 y makes the Schur denominator vanish
    sys = BorderedSystem(A, y, 1.0, np.ones(3, dtype=complex), 1.0)
    with pytest.raises(SolverError):
        solve_bordered(sys, tol=1e-13)


def test_transpose_pairing_differs_and_is_recorded(rng):
    """The plain-transpose border is kept for comparison; on genuinely
    complex systems it solves a different (non-Hermitian) problem."""
    A, _ = _random_hpd(15, rng)
    y = rng.normal(size=15) + 1j * rng.normal(size=15)
    F = rng.normal(size=15) + 1j * rng.normal(size=15)
    sys = BorderedSystem(A, y, 25.0, F, 2.0 + 1.0j)
    x_c, c_c = solve_bordered(sys, tol=1e-12, pairing="conjugate")
    x_t, c_t = solve_bordered(sys, tol=1e-12, pairing="transpose")
    assert np.isfinite(c_t.real) and np.isfinite(c_t.imag)
    assert abs(c_c - c_t) > 1e-8  # the two conventions disagree on complex data
    with pytest.raises(ValueError):
        solve_bordered(sys, pairing="other")
