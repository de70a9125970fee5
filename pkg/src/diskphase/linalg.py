"""Minimal sparse linear algebra: CSR assembly, BiCGStab, damped Newton.

Self-contained on purpose; the stepper may plug in a faster linear solver,
but these routines are the reference implementations for the contracts
exercised by the test suite.
"""

from dataclasses import dataclass, field

import numpy as np


class LinearSolverError(RuntimeError):
    def __init__(self, message, best_residual=None, iterations=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class NewtonError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SparseMatrix:
    """Square CSR matrix with sorted, duplicate-free column indices."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n: int
    _rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        rows.setflags(write=False)
        object.__setattr__(self, "_rows", rows)

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.n)
        hit = self.indices == self._rows
        np.add.at(diag, self._rows[hit], self.data[hit])
        return diag

    def todense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self._rows, self.indices] = self.data
        return out


def assemble(triplets, n: int) -> SparseMatrix:
    """Build canonical CSR from (row, col, value) triplets; duplicates summed."""
    if n <= 0:
        raise ValueError("n must be positive")
    trips = list(triplets)
    if trips:
        rows = np.asarray([t[0] for t in trips], dtype=np.int64)
        cols = np.asarray([t[1] for t in trips], dtype=np.int64)
        vals = np.asarray([t[2] for t in trips], dtype=float)
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise ValueError(f"triplet index out of range for n={n}")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        keep = np.ones(rows.size, dtype=bool)
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(keep)
        sums = np.add.reduceat(vals, starts)
        rows, cols, vals = rows[starts], cols[starts], sums
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return SparseMatrix(indptr=indptr, indices=cols, data=vals, n=n)


def matvec(a: SparseMatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n,):
        raise ValueError(f"vector has shape {x.shape}, expected ({a.n},)")
    return np.bincount(a._rows, weights=a.data * x[a.indices], minlength=a.n)


def solve_bicgstab(
    a: SparseMatrix,
    b: np.ndarray,
    tol: float = 1e-12,
    maxit: int = 2000,
    jacobi: bool = True,
) -> tuple[np.ndarray, int]:
    """BiCGStab with optional Jacobi preconditioning.

    Returns (x, iterations); the exit residual is recomputed from scratch so
    the reported convergence is never optimistic.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (a.n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({a.n},)")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(a.n), 0
    if jacobi:
        diag = a.diagonal()
        inv_diag = np.where(np.abs(diag) > 1e-300, 1.0 / diag, 1.0)
    else:
        inv_diag = np.ones(a.n)

    x = np.zeros(a.n)
    r = b.copy()
    r_hat = r.copy()
    rho_prev = alpha = omega = 1.0
    v = p = np.zeros(a.n)
    best_x, best_res = x.copy(), bnorm

    for k in range(1, maxit + 1):
        rho = float(r_hat @ r)
        if abs(rho) < 1e-300:
            raise LinearSolverError(
                f"BiCGStab breakdown (rho) at iteration {k}",
                best_residual=best_res / bnorm,
                iterations=k,
            )
        beta = (rho / rho_prev) * (alpha / omega)
        p = r + beta * (p - omega * v)
        ph = inv_diag * p
        v = matvec(a, ph)
        denom = float(r_hat @ v)
        if abs(denom) < 1e-300:
            raise LinearSolverError(
                f"BiCGStab breakdown (r_hat.v) at iteration {k}",
                best_residual=best_res / bnorm,
                iterations=k,
            )
        alpha = rho / denom
        s = r - alpha * v
        x_half = x + alpha * ph
        if np.linalg.norm(s) <= tol * bnorm:
            true_res = float(np.linalg.norm(b - matvec(a, x_half)))
            if true_res <= tol * bnorm:
                return x_half, k
        sh = inv_diag * s
        t = matvec(a, sh)
        tt = float(t @ t)
        if tt < 1e-300:
            omega = 0.0
        else:
            omega = float(t @ s) / tt
        x = x_half + omega * sh
        r = s - omega * t
        rnorm = float(np.linalg.norm(r))
        if rnorm < best_res:
            best_res, best_x = rnorm, x.copy()
        if rnorm <= tol * bnorm:
            true_res = float(np.linalg.norm(b - matvec(a, x)))
            if true_res <= tol * bnorm:
                return x, k
        if omega == 0.0:
            raise LinearSolverError(
                f"BiCGStab breakdown (omega=0) at iteration {k}",
                best_residual=best_res / bnorm,
                iterations=k,
            )
        rho_prev = rho
    raise LinearSolverError(
        f"BiCGStab did not converge in {maxit} iterations "
        f"(best relative residual {best_res / bnorm:.3e})",
        best_residual=best_res / bnorm,
        iterations=maxit,
    )


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_norm: float = np.inf
    converged: bool = False
    linear_iterations: int = 0


def newton_solve(
    residual,
    jacobian,
    x0: np.ndarray,
    tol: float = 1e-11,
    maxit: int = 30,
    max_damping: int = 8,
    linear_solver=None,
) -> tuple[np.ndarray, NewtonReport]:
    """Damped Newton on residual(x) = 0 with max-norm convergence test.

    `jacobian(x)` returns a SparseMatrix (or anything the supplied
    `linear_solver(A, b)` accepts).  The step is halved up to `max_damping`
    times whenever the residual max-norm does not decrease.
    """
    if linear_solver is None:
        def linear_solver(a, b):
            return solve_bicgstab(a, b, tol=1e-13, maxit=10 * a.n)

    x = np.asarray(x0, dtype=float).copy()
    report = NewtonReport()
    f = np.asarray(residual(x), dtype=float)
    fnorm = float(np.max(np.abs(f))) if f.size else 0.0
    report.residual_norm = fnorm
    for it in range(1, maxit + 1):
        if fnorm <= tol:
            report.converged = True
            report.iterations = it - 1
            return x, report
        a = jacobian(x)
        dx, lin_iters = linear_solver(a, -f)
        report.linear_iterations += int(lin_iters)
        step = 1.0
        for _ in range(max_damping + 1):
            x_new = x + step * dx
            f_new = np.asarray(residual(x_new), dtype=float)
            fnorm_new = float(np.max(np.abs(f_new)))
            if fnorm_new < fnorm or fnorm_new <= tol:
                break
            step *= 0.5
        else:
            report.iterations = it
            raise NewtonError(
                f"Newton line search exhausted at iteration {it} "
                f"(residual {fnorm:.3e})",
                report=report,
            )
        x, f, fnorm = x_new, f_new, fnorm_new
        report.residual_norm = fnorm
    if fnorm <= tol:
        report.converged = True
        report.iterations = maxit
        return x, report
    report.iterations = maxit
    raise NewtonError(
        f"Newton did not converge in {maxit} iterations (residual {fnorm:.3e})",
        report=report,
    )
