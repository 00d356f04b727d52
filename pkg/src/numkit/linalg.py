"""
Dense kernels trên float64 - substrate cho flows và backprop

Matrix là ndarray 2-D, Vector là ndarray 1-D. Mọi kernel nhận Vector cũng
nhận row batch (N, len) và trả kết quả batch tương ứng.
"""
from typing import Tuple

import numpy as np

from ..exceptions import DimensionError
from .rng import Rng, rng_uniform


Matrix = np.ndarray
Vector = np.ndarray


def as_matrix(data, rows: int = None, cols: int = None) -> Matrix:
    """Copy thành float64 matrix, kiểm tra shape và finite"""
    array = np.array(data, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionError(f"expected a matrix, got {array.ndim}-d data")
    if (rows is not None and array.shape[0] != rows) or (cols is not None and array.shape[1] != cols):
        raise DimensionError(f"expected {rows}x{cols} matrix, got {array.shape[0]}x{array.shape[1]}")
    ensure_finite(array, "matrix")
    return array


def as_vector(data, length: int = None) -> Vector:
    array = np.array(data, dtype=np.float64).reshape(-1)
    if length is not None and array.shape[0] != length:
        raise DimensionError(f"expected vector of length {length}, got {array.shape[0]}")
    ensure_finite(array, "vector")
    return array


def ensure_finite(array: np.ndarray, what: str = "array"):
    if not np.all(np.isfinite(array)):
        raise DimensionError(f"{what} contains non-finite entries")


def uniform_init(rows: int, cols: int, bound: float, rng: Rng) -> Tuple[Matrix, Rng]:
    """
    Entries i.i.d. uniform on [-bound, +bound], filled row-major

    Args:
        rows, cols: shape (> 0)
        bound: half-width (>= 0)
        rng: generator state

    Returns:
        (matrix, advanced rng)
    """
    if rows <= 0 or cols <= 0:
        raise DimensionError(f"invalid matrix shape {rows}x{cols}")
    if bound < 0:
        raise DimensionError(f"bound must be >= 0, got {bound}")
    rng, unit = rng_uniform(rng, rows * cols)
    values = bound * (2.0 * unit - 1.0)
    return values.reshape(rows, cols), rng


def matvec(M: Matrix, v: Vector) -> Vector:
    """M·v; with a row batch V (N, cols) returns (N, rows)"""
    if v.shape[-1] != M.shape[1]:
        raise DimensionError(f"matvec: matrix has {M.shape[1]} cols, vector has {v.shape[-1]}")
    if v.ndim == 1:
        return M @ v
    return v @ M.T


def matvec_transposed(M: Matrix, v: Vector) -> Vector:
    """Mᵀ·v; with a row batch V (N, rows) returns (N, cols)"""
    if v.shape[-1] != M.shape[0]:
        raise DimensionError(f"matvec_transposed: matrix has {M.shape[0]} rows, vector has {v.shape[-1]}")
    if v.ndim == 1:
        return M.T @ v
    return v @ M


def outer_accumulate(G: Matrix, u: Vector, v: Vector, alpha: float = 1.0) -> Matrix:
    """
    G + alpha·u·vᵀ (new matrix)

    Với row batches U (N, rows), V (N, cols) cộng tổng các outer products.
    """
    if u.shape[-1] != G.shape[0] or v.shape[-1] != G.shape[1]:
        raise DimensionError(
            f"outer_accumulate: G is {G.shape[0]}x{G.shape[1]}, "
            f"u has {u.shape[-1]}, v has {v.shape[-1]}"
        )
    if u.ndim == 1 and v.ndim == 1:
        return G + alpha * np.outer(u, v)
    if u.ndim != 2 or v.ndim != 2 or u.shape[0] != v.shape[0]:
        raise DimensionError("outer_accumulate: batched u and v must have the same number of rows")
    return G + alpha * (u.T @ v)


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)
