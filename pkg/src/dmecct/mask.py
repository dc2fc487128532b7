"""Self-attention masks derived from parity-check matrices."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gf2
from .codes import LinearCode

# Additive offset for masked logits in 32-bit arithmetic. exp(-1e9) underflows
# to exactly 0, and unlike -inf it never produces NaN through 0 * inf.
SENTINEL_F32 = -1e9


@dataclass(frozen=True, eq=False)
class AttentionMask:
    """Square (2n-k) x (2n-k) mask; ``allowed[p, q]`` is True where attention is kept."""

    allowed: np.ndarray
    n: int
    source: str  # "conventional", "systematic" or "modified"

    @property
    def size(self) -> int:
        return self.allowed.shape[0]

    def additive(self, dtype=np.float32) -> np.ndarray:
        """0 where allowed, the masking offset elsewhere.

        64-bit masks use a true ``-inf``; 32-bit masks use ``SENTINEL_F32``.
        """
        dtype = np.dtype(dtype)
        fill = -np.inf if dtype == np.float64 else SENTINEL_F32
        return np.where(self.allowed, 0.0, fill).astype(dtype)

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Row pointers and column indices of the allowed entries."""
        counts = self.allowed.sum(axis=1)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        indices = np.nonzero(self.allowed)[1].astype(np.int64)
        return indptr, indices


def count_matrix(h) -> np.ndarray:
    """The integer accumulator of the mask construction loop, before thresholding."""
    h = gf2.as_bits(h)
    rows, n = h.shape
    size = n + rows
    counts = np.eye(size, dtype=np.int64)
    for i in range(rows):
        idx = np.flatnonzero(h[i])
        for j in idx:
            for l in idx:
                counts[j, l] += 1
                counts[l, j] += 1
                counts[n + i, j] += 1
                counts[j, n + i] += 1
    return counts


def allowed_by_support(h) -> np.ndarray:
    """Independent characterization of the unmasked set.

    (p, q) is kept iff p == q, or both are bits sharing a check, or one is
    check i and the other a bit in check i's support.
    """
    h = gf2.as_bits(h).astype(bool)
    rows, n = h.shape
    allowed = np.eye(n + rows, dtype=bool)
    hi = h.astype(np.int64)
    allowed[:n, :n] |= (hi.T @ hi) > 0
    allowed[n:, :n] |= h
    allowed[:n, n:] |= h.T
    return allowed


def build_mask(h, systematic: bool = False, source: str | None = None) -> AttentionMask:
    """Attention mask from a PCM.

    With ``systematic=True`` the PCM is first brought to ``[I | P]``; if that
    needs a column swap the systematic rows are mapped back to the input
    column order so bit positions keep their meaning.
    """
    h = gf2.as_bits(h)
    if systematic:
        h = gf2.to_systematic(h).in_input_coordinates()
    allowed = count_matrix(h) > 0
    if source is None:
        source = "systematic" if systematic else "conventional"
    return AttentionMask(allowed=allowed, n=h.shape[1], source=source)


def sparsity(mask: AttentionMask) -> float:
    """Fraction of masked entries over the full map, diagonal included."""
    return float(1.0 - mask.allowed.mean())


def dm_mask_pair(code: LinearCode):
    """Masks and PCMs for the two streams of the double-masked decoder.

    Stream 1 uses the systematic PCM. Stream 2 uses the conventional PCM, or
    for polar codes the row-reduced (modified) conventional PCM.
    """
    h1 = code.h_sys
    if code.family == "Polar" and code.h_mod is not None:
        h2, src2 = code.h_mod, "modified"
    else:
        h2, src2 = code.h_conv, "conventional"
    if not gf2.row_space_equal(h1, h2):
        raise AssertionError(f"{code.name}: stream PCMs define different codebooks")
    m1 = build_mask(h1, systematic=False, source="systematic")
    m2 = build_mask(h2, systematic=False, source=src2)
    return m1, m2, h1, h2


def code_mask(code: LinearCode, kind: str) -> tuple[AttentionMask, np.ndarray]:
    """Mask and PCM for one of ``conventional``, ``systematic`` or ``modified``."""
    if kind == "conventional":
        h = code.h_conv
    elif kind == "systematic":
        h = code.h_sys
    elif kind == "modified":
        if code.h_mod is None:
            raise ValueError(f"{code.name} has no modified PCM")
        h = code.h_mod
    else:
        raise ValueError(f"unknown mask kind {kind!r}")
    return build_mask(h, source=kind), h


def format_mask_dense01(mask: AttentionMask) -> str:
    return "".join(" ".join("1" if v else "0" for v in row) + "\n" for row in mask.allowed)


def format_mask_pgm(mask: AttentionMask, scale: int = 1) -> str:
    """Plain (P2) PGM: white = unmasked, black = masked."""
    img = np.where(mask.allowed, 255, 0).astype(np.int64)
    if scale > 1:
        img = np.kron(img, np.ones((scale, scale), dtype=np.int64))
    h, w = img.shape
    lines = ["P2", f"# {mask.source} mask, {mask.size}x{mask.size}", f"{w} {h}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in img)
    return "\n".join(lines) + "\n"


def save_mask(mask: AttentionMask, path, format: str = "dense01", scale: int = 1) -> None:
    if format == "dense01":
        text = format_mask_dense01(mask)
    elif format == "pgm":
        text = format_mask_pgm(mask, scale)
    else:
        raise ValueError(f"unknown mask format {format!r}")
    Path(path).write_text(text)
