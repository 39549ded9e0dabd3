"""Dense complex linear algebra and the low-rank operator representation.

Matrices are plain ``numpy.ndarray`` objects with dtype ``complex128``.  A
rank-k perturbation ``V[i, j] = sum_s u[s, i] * v[s, j]`` is held as the two
vector families ``u`` and ``v`` in a :class:`LowRankOperator`.  All values are
double precision; "exact" throughout this package means exact arithmetic at
machine precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, ParseError

__all__ = [
    "as_matrix",
    "mat_mul",
    "determinant",
    "LowRankOperator",
    "dense_to_lowrank",
    "matrix_to_json",
    "matrix_from_json",
    "load_matrix",
    "dump_matrix",
]

#: Default relative threshold for numerical-rank decisions.
RANK_TOL = 1e-10


def as_matrix(m, square=False) -> np.ndarray:
    """Validate ``m`` as a finite complex matrix and return a C-ordered copy/view."""
    a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise DimensionError("matrix entries must be finite")
    return a


def as_vector(w, length=None) -> np.ndarray:
    """Validate ``w`` as a finite complex vector."""
    a = np.ascontiguousarray(w, dtype=np.complex128)
    if a.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {a.shape}")
    if length is not None and a.shape[0] != length:
        raise DimensionError(f"expected vector of length {length}, got {a.shape[0]}")
    if a.size and not np.all(np.isfinite(a)):
        raise DimensionError("vector entries must be finite")
    return a


def mat_mul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def determinant(m) -> complex:
    """Determinant of a square complex matrix.

    Backed by the LAPACK partially pivoted LU factorization, which is stable
    and O(n^3); adequate for the few-thousand-dimensional matrices used here.
    """
    m = as_matrix(m, square=True)
    if m.shape[0] == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(m))


@dataclass(frozen=True)
class LowRankOperator:
    """A rank-k matrix ``V`` stored as vector pairs.

    ``V[i, j] = sum_s u[s, i] * v[s, j]`` where ``u`` and ``v`` have shape
    ``(rank, dim)``.  Note the defining product is bilinear; neither family is
    conjugated.
    """

    dim: int
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        try:
            u = np.ascontiguousarray(self.u, dtype=np.complex128).reshape(-1, self.dim)
            v = np.ascontiguousarray(self.v, dtype=np.complex128).reshape(-1, self.dim)
        except ValueError as exc:
            raise DimensionError(
                f"vector families do not fit dimension {self.dim}: {exc}"
            ) from exc
        if u.shape != v.shape:
            raise DimensionError(f"u and v shapes differ: {u.shape} vs {v.shape}")
        if u.size and not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DimensionError("low-rank vectors must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def rank(self) -> int:
        return self.u.shape[0]

    def to_dense(self) -> np.ndarray:
        """Materialize ``V`` as an explicit dim x dim matrix."""
        if self.rank == 0:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        return self.u.T @ self.v

    @classmethod
    def zero(cls, dim: int) -> "LowRankOperator":
        return cls(dim, np.zeros((0, dim)), np.zeros((0, dim)))


def dense_to_lowrank(m, tol: float = RANK_TOL) -> LowRankOperator:
    """Factor a square matrix into a :class:`LowRankOperator` of numerical rank.

    Uses a column-pivoted QR factorization; columns whose pivot magnitude
    falls below ``tol`` times the largest column norm are truncated.  The
    reconstruction matches ``m`` entrywise to within ``tol * max|m|``.
    """
    m = as_matrix(m, square=True)
    n = m.shape[0]
    if n == 0 or not np.any(m):
        return LowRankOperator.zero(n)
    q, r, perm = scipy.linalg.qr(m, pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diag > tol * diag[0]))
    if rank == 0:
        return LowRankOperator.zero(n)
    inv_perm = np.empty(n, dtype=np.intp)
    inv_perm[perm] = np.arange(n)
    # m = Q R P^T: keep the first `rank` columns of Q / rows of R P^T.
    u = np.ascontiguousarray(q[:, :rank].T)
    v = np.ascontiguousarray(r[:rank, :][:, inv_perm])
    return LowRankOperator(n, u, v)


# ---------------------------------------------------------------------------
# Matrix JSON format, used repo-wide:
#   {"rows": int, "cols": int, "data": [[re, im], ...]}   (row-major)
# Writers emit 17 significant digits.


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def matrix_to_json(m) -> str:
    m = as_matrix(m)
    pairs = ", ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in m.ravel())
    return f'{{"rows": {m.shape[0]}, "cols": {m.shape[1]}, "data": [{pairs}]}}'


def matrix_from_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return matrix_from_obj(obj)


def matrix_from_obj(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ParseError("matrix JSON must be an object")
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"matrix JSON missing/invalid field: {exc}") from exc
    if rows < 0 or cols < 0:
        raise ParseError("matrix dimensions must be nonnegative")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ParseError(f"matrix data must hold {rows * cols} [re, im] pairs")
    try:
        flat = np.array(
            [complex(float(p[0]), float(p[1])) for p in data], dtype=np.complex128
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if flat.size and not np.all(np.isfinite(flat)):
        raise ParseError("matrix entries must be finite")
    return flat.reshape(rows, cols)


def load_matrix(path) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return matrix_from_json(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def dump_matrix(m, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(matrix_to_json(m))
        fh.write("\n")
