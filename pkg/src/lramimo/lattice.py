"""Lattice basis reduction with exact integer change-of-basis bookkeeping.

The reduction operates on the columns of a real matrix.  All column
operations are mirrored on an integer matrix Z (and its inverse) kept in
arbitrary-precision Python integers, so the factorization H = C Z is exact
up to the floating-point column arithmetic on C alone.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

DEFAULT_DELTA = 0.75

# Sweep bound: reduction of a full-rank basis terminates long before this
# for delta < 1; the cap turns a pathological non-terminating input
# (possible only at delta == 1) into an error instead of a hang.
_MAX_SWEEPS_PER_DIM = 20000


class ReductionError(ValueError):
    """Raised when a basis cannot be reduced (rank loss, no convergence)."""


@dataclass(frozen=True)
class ReducedBasis:
    """Result of a reduction: original = reduced @ unimodular.

    ``reduced`` holds the near-orthogonal basis columns in floats;
    ``unimodular`` and ``unimodular_inv`` are exact integer matrices
    (object arrays of Python ints) with determinant +-1.
    """

    reduced: np.ndarray
    unimodular: np.ndarray
    unimodular_inv: np.ndarray


def lll_reduce(basis: np.ndarray, delta: float = DEFAULT_DELTA) -> ReducedBasis:
    """Reduce the columns of ``basis`` with the Lovasz condition ``delta``.

    The returned factors satisfy reduced @ unimodular == basis up to
    floating-point rounding, with the integer matrices exact.  The reduced
    basis is size reduced (all Gram-Schmidt coefficients at most 1/2 in
    magnitude) and satisfies the Lovasz condition for ``delta``.

    Parameters
    ----------
    basis : array, shape (m, n) with m >= n, full column rank.
    delta : Lovasz parameter in (1/4, 1]; termination is guaranteed for
        delta < 1.
    """
    h = np.asarray(basis, dtype=float)
    if h.ndim != 2 or h.shape[0] < h.shape[1]:
        raise ReductionError(f"basis must be m x n with m >= n, got shape {h.shape}")
    if not (0.25 < delta <= 1.0):
        raise ValueError(f"delta must lie in (1/4, 1], got {delta}")
    n = h.shape[1]
    s = np.linalg.svd(h, compute_uv=False)
    if s.size == 0 or s[-1] <= 1e-10 * max(h.shape) * s[0]:
        raise ReductionError("basis is rank deficient")

    c = h.copy()
    # Rows of z / columns of zinv mirror the column operations on c.
    z = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    zinv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    sweeps = 0
    limit = _MAX_SWEEPS_PER_DIM * n * n
    k = 1
    while k < n:
        sweeps += 1
        if sweeps > limit:
            raise ReductionError(f"reduction did not converge within {limit} sweeps")
        # Fresh orthogonalization each visit; the triangular factor carries
        # the Gram-Schmidt data (mu_{i,j} = r[j,i]/r[j,j], |c*_i| = |r[i,i]|).
        r = np.linalg.qr(c, mode="r")
        for j in range(k - 1, -1, -1):
            mu = r[j, k] / r[j, j]
            if abs(mu) > 0.5:
                q = int(round(mu))
                c[:, k] -= q * c[:, j]
                r[:, k] -= q * r[:, j]
                zk = z[k]
                zj = z[j]
                for t in range(n):
                    zj[t] += q * zk[t]
                for row in zinv:
                    row[k] -= q * row[j]
        mu_adj = r[k - 1, k] / r[k - 1, k - 1]
        if r[k, k] ** 2 >= (delta - mu_adj**2) * r[k - 1, k - 1] ** 2:
            k += 1
        else:
            c[:, [k - 1, k]] = c[:, [k, k - 1]]
            z[k - 1], z[k] = z[k], z[k - 1]
            for row in zinv:
                row[k - 1], row[k] = row[k], row[k - 1]
            k = max(k - 1, 1)

    z_arr = np.array(z, dtype=object)
    zinv_arr = np.array(zinv, dtype=object)
    if not _is_identity(z_arr @ zinv_arr):
        raise ReductionError("internal bookkeeping error: Z @ Zinv != I")
    return ReducedBasis(reduced=c, unimodular=z_arr, unimodular_inv=zinv_arr)


def integer_determinant(matrix: np.ndarray) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    a = _as_int_rows(matrix)
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for piv in range(n - 1):
        if a[piv][piv] == 0:
            for i in range(piv + 1, n):
                if a[i][piv] != 0:
                    a[piv], a[i] = a[i], a[piv]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(piv + 1, n):
            for j in range(piv + 1, n):
                a[i][j] = (a[i][j] * a[piv][piv] - a[i][piv] * a[piv][j]) // prev
            a[i][piv] = 0
        prev = a[piv][piv]
    return sign * a[n - 1][n - 1]


def unimodular_inverse(matrix: np.ndarray) -> np.ndarray:
    """Exact integer inverse of a unimodular matrix.

    Raises ValueError when the determinant is not +-1.
    """
    a = _as_int_rows(matrix)
    n = len(a)
    det = integer_determinant(matrix)
    if det not in (1, -1):
        raise ValueError(f"matrix is not unimodular: determinant is {det}, expected +-1")
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[col])]
    inv = [[v.numerator for v in row[n:]] for row in aug]
    for row in aug:
        for v in row[n:]:
            if v.denominator != 1:
                raise ValueError("inverse is not integral; matrix is not unimodular")
    return np.array(inv, dtype=object)


def z_covariance(unimodular: np.ndarray, symbol_var: float) -> np.ndarray:
    """Covariance of the basis-transformed symbol vector.

    For white symbols of per-component variance ``symbol_var``, the
    transformed vector Z a has covariance symbol_var * Z Z^T.
    """
    if not (symbol_var > 0.0):
        raise ValueError(f"symbol_var must be > 0, got {symbol_var}")
    zf = np.asarray(matrix_to_float(unimodular))
    return symbol_var * (zf @ zf.T)


def matrix_to_float(matrix: np.ndarray) -> np.ndarray:
    """View an exact integer (object) matrix as float64."""
    return np.asarray(matrix, dtype=object).astype(float)


def orthogonality_defect(basis: np.ndarray) -> float:
    """Product of column norms over the lattice volume; 1 iff orthogonal."""
    b = np.asarray(basis, dtype=float)
    norms = np.linalg.norm(b, axis=0)
    gram = b.T @ b
    sign, logdet = np.linalg.slogdet(gram)
    if sign <= 0:
        raise ValueError("basis is rank deficient")
    return float(np.exp(np.sum(np.log(norms)) - 0.5 * logdet))


def _as_int_rows(matrix: np.ndarray):
    arr = np.asarray(matrix, dtype=object)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    rows = []
    for row in arr.tolist():
        out = []
        for v in row:
            iv = int(v)
            if iv != v:
                raise ValueError(f"matrix entry {v!r} is not an integer")
            out.append(iv)
        rows.append(out)
    return rows


def _is_identity(arr: np.ndarray) -> bool:
    n = arr.shape[0]
    return all(arr[i, j] == (1 if i == j else 0) for i in range(n) for j in range(n))
