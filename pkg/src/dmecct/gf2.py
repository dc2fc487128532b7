"""Dense linear algebra over GF(2).

Bit matrices are plain 2-D ``numpy.uint8`` arrays holding 0/1 entries.
Every function returns fresh arrays and never mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RankDeficient


def as_bits(m, ndim: int = 2) -> np.ndarray:
    """Copy ``m`` into a uint8 array, checking that every entry is 0 or 1."""
    a = np.array(m, dtype=np.int64, copy=True)
    if a.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-D bit array, got shape {a.shape}")
    if a.size and (a.min() < 0 or a.max() > 1):
        raise ValueError("bit arrays may only contain 0 and 1")
    return a.astype(np.uint8)


def rref(m) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns.

    Zero rows are kept and end up at the bottom.
    """
    a = as_bits(m)
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(a[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        ones = np.flatnonzero(a[:, c])
        ones = ones[ones != r]
        if ones.size:
            a[ones] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m) -> int:
    return len(rref(m)[1])


@dataclass(frozen=True, eq=False)
class SystematicResult:
    """``h_sys = [I | P]`` together with the column order that produced it.

    ``h_sys[:, c]`` is a row-reduced image of input column
    ``column_permutation[c]``.
    """

    h_sys: np.ndarray
    column_permutation: np.ndarray

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.column_permutation, np.arange(self.column_permutation.size)))

    def in_input_coordinates(self) -> np.ndarray:
        """The systematic matrix with columns moved back to the input order.

        Its rows span the same space as the input matrix.
        """
        out = np.empty_like(self.h_sys)
        out[:, self.column_permutation] = self.h_sys
        return out


def to_systematic(h) -> SystematicResult:
    """Row-reduce ``h`` to ``[I_r | P]``.

    Column swaps happen only when the pivots of the RREF are not the leading
    ``r`` columns; the swap is then recorded in ``column_permutation``.
    """
    reduced, pivots = rref(h)
    rows, cols = reduced.shape
    if len(pivots) < rows:
        raise RankDeficient(len(pivots), rows)
    if pivots == list(range(rows)):
        return SystematicResult(reduced, np.arange(cols))
    pivot_set = set(pivots)
    perm = np.array(pivots + [c for c in range(cols) if c not in pivot_set])
    return SystematicResult(reduced[:, perm], perm)


def nullspace_generator(h) -> np.ndarray:
    """A k x n generator matrix G with ``G @ h.T == 0 (mod 2)``.

    When no column permutation is needed the result is ``[P^T | I_k]``.
    """
    res = to_systematic(h)
    r, n = res.h_sys.shape
    k = n - r
    g_perm = np.zeros((k, n), dtype=np.uint8)
    g_perm[:, :r] = res.h_sys[:, r:].T
    g_perm[:, r:] = np.eye(k, dtype=np.uint8)
    g = np.empty_like(g_perm)
    g[:, res.column_permutation] = g_perm
    return g


def row_space_equal(a, b) -> bool:
    a = as_bits(a)
    b = as_bits(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    ra, rb = rank(a), rank(b)
    return ra == rb == rank(np.vstack([a, b]))


def matvec_mod2(m, v) -> np.ndarray:
    """``m @ v mod 2``. ``v`` may carry leading batch axes: (..., cols)."""
    m = np.asarray(m, dtype=np.uint8)
    v = np.asarray(v)
    if v.shape[-1] != m.shape[1]:
        raise DimensionMismatch(f"vector length {v.shape[-1]} != {m.shape[1]} columns")
    # int32 accumulation is exact for any realistic block length
    return ((v.astype(np.int32) @ m.T.astype(np.int32)) & 1).astype(np.uint8)


def matmul_mod2(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.int32)
    b = np.asarray(b, dtype=np.int32)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return ((a @ b) & 1).astype(np.uint8)
