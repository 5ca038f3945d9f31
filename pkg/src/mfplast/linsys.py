"""Sparse 2N x 2N system container with direct factorization.

Unknown ordering is [u_0..u_{N-1}, v_0..v_{N-1}] (all x-displacements, then
all y-displacements).  Factorization happens once per geometry/material and
the handle is reused for every right-hand side; solves are serialized (the
driver never needs concurrent solves).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu


class LinSysError(RuntimeError):
    """Factorization failure or malformed system."""


@dataclass
class SparseSystem:
    """Assembled operator (CSC) over 2N unknowns plus an optional LU handle."""

    matrix: sparse.csc_matrix
    n_nodes: int
    lu: object | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> None:
        """Check structural invariants: square, every row non-empty."""
        rows, cols = self.matrix.shape
        if rows != cols:
            raise LinSysError(f"matrix not square: {rows}x{cols}")
        if rows == 0:
            raise LinSysError("empty matrix")
        counts = np.diff(self.matrix.tocsr().indptr)
        if np.any(counts == 0):
            empty = int(np.argmax(counts == 0))
            raise LinSysError(f"row {empty} has no nonzeros")


def from_triplets(rows, cols, vals, dim: int, n_nodes: int) -> SparseSystem:
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsc()
    return SparseSystem(matrix=mat, n_nodes=n_nodes)


def factorize(sys: SparseSystem):
    """Direct sparse LU of the assembled matrix; handle stored on the system."""
    try:
        sys.lu = splu(sys.matrix)
    except RuntimeError as exc:  # SuperLU signals singularity this way
        raise LinSysError(f"factorization failed: {exc}") from exc
    return sys.lu


def solve(sys: SparseSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve against the stored factorization."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (sys.dim,):
        raise LinSysError(f"rhs shape {rhs.shape} does not match dimension {sys.dim}")
    if sys.lu is None:
        factorize(sys)
    return sys.lu.solve(rhs)


def export_matrix(sys: SparseSystem, path) -> None:
    """Coordinate-format text export: header 'rows cols nnz', 1-based entries."""
    coo = sys.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r + 1} {c + 1} {float(v)!r}\n")
