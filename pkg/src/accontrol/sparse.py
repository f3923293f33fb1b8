"""
Compressed sparse row storage and a Jacobi-preconditioned conjugate
gradient solver.

The systems solved here are mass-plus-stiffness shifts at desk scale, so
plain CG with diagonal preconditioning is enough; Dirichlet conditions are
imposed by restricting to interior degrees of freedom, which keeps every
system exactly symmetric.
"""

import numpy as np
from scipy import sparse as sp

DROP_TOL = 1e-300
SYMMETRY_RTOL = 1e-14


class SolverError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class SparseMatrix:
    """Square CSR matrix with a symmetry flag.

    Attributes
    ----------
    row_offsets, column_indices, values : arrays
        Compressed-row layout (column indices sorted within each row,
        explicit zeros dropped).
    n : int
        Dimension.
    symmetric : bool
        Whether the matrix is flagged (and verified) symmetric.
    """

    def __init__(self, matrix, symmetric=False):
        csr = sp.csr_matrix(matrix)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError("matrix must be square, got {}".format(csr.shape))
        csr.sum_duplicates()
        csr.data[np.abs(csr.data) < DROP_TOL] = 0.0
        csr.eliminate_zeros()
        csr.sort_indices()
        if symmetric:
            diff = abs(csr - csr.T)
            scale = np.abs(csr.data).max() if csr.nnz else 1.0
            if csr.nnz and diff.data.size and diff.data.max() > SYMMETRY_RTOL * scale:
                raise ValueError("matrix flagged symmetric is not")
        self._csr = csr
        self.symmetric = bool(symmetric)

    @classmethod
    def from_coo(cls, n, rows, cols, vals, symmetric=False):
        """Assemble from triplets; duplicate entries are summed."""
        coo = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(coo.tocsr(), symmetric=symmetric)

    @property
    def n(self):
        return self._csr.shape[0]

    @property
    def row_offsets(self):
        return self._csr.indptr

    @property
    def column_indices(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    @property
    def nnz(self):
        return self._csr.nnz

    def diagonal(self):
        return self._csr.diagonal()

    def submatrix(self, keep):
        """Restriction to the index set `keep` (e.g. interior DOFs)."""
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.flatnonzero(keep)
        sub = self._csr[keep][:, keep]
        return SparseMatrix(sub, symmetric=self.symmetric)

    def scaled_add(self, alpha, other, beta=1.0):
        """Return beta*self + alpha*other as a new matrix."""
        out = beta * self._csr + alpha * other._csr
        return SparseMatrix(out, symmetric=self.symmetric and other.symmetric)

    def toarray(self):
        return self._csr.toarray()

    def __repr__(self):
        return "SparseMatrix(n={}, nnz={}, symmetric={})".format(
            self.n, self.nnz, self.symmetric)


def spmv(A, x):
    """Sparse matrix-vector product A @ x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (A.n,):
        raise ValueError("dimension mismatch: matrix {}x{}, vector {}".format(
            A.n, A.n, x.shape))
    return A._csr @ x


class CgResult:
    """Iteration log of one CG solve.

    When energy logging is on, `energies` holds 0.5*x'Ax - b'x recomputed
    from each accepted iterate; its decrease is equivalent to the decrease
    of the error in the A-norm, which the raw two-norm residuals do not
    guarantee.
    """

    def __init__(self):
        self.iterations = 0
        self.converged = False
        self.residuals = []
        self.energies = []


def cg_solve(A, b, tol=1e-10, max_iter=None, log_energy=False):
    """Solve A x = b for symmetric positive definite A.

    Jacobi-preconditioned conjugate gradients with relative two-norm
    stopping: ||Ax - b|| <= tol*||b||. With log_energy the quadratic
    energy of every iterate is recomputed and logged (one extra matvec
    per iteration, meant for diagnostics).

    Returns
    -------
    x : array
    result : CgResult

    Raises
    ------
    SolverError
        On non-convergence within max_iter, or when an indefinite matrix
        is detected (non-positive curvature direction).
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError("dimension mismatch: matrix {}x{}, rhs {}".format(
            A.n, A.n, b.shape))
    if max_iter is None:
        max_iter = max(10 * A.n, 100)

    result = CgResult()
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b)
    if bnorm == 0.0:
        result.converged = True
        return x, result

    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("matrix has non-positive diagonal entries")
    csr = A._csr

    r = b.copy()
    z = r / diag
    p = z.copy()
    rz = r @ z
    result.residuals.append(bnorm)
    if log_energy:
        result.energies.append(0.0)

    for it in range(1, max_iter + 1):
        Ap = csr @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            raise SolverError("non-positive curvature: matrix not SPD")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        result.iterations = it
        result.residuals.append(float(np.linalg.norm(r)))
        if log_energy:
            result.energies.append(float(0.5 * (x @ (csr @ x)) - b @ x))
        if result.residuals[-1] <= tol * bnorm:
            result.converged = True
            return x, result
        z = r / diag
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new

    raise SolverError("CG did not converge in {} iterations "
                      "(residual {:.3e}, target {:.3e})".format(
                          max_iter, result.residuals[-1], tol * bnorm))
