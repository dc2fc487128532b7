"""Linear code construction: BCH, polar, and user-supplied parity-check matrices.

Binary polynomials are stored as Python ints, bit ``i`` holding the
coefficient of ``x**i`` (so ``0b1011`` is ``x^3 + x + 1``).
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gf2
from .errors import (
    BadDimensions,
    DesignDistanceTooLarge,
    DimensionMismatch,
    FrozenSetSizeMismatch,
    InconsistentDegrees,
    ParseError,
    UnknownCode,
    UnsupportedFieldDegree,
)

# One primitive polynomial per field degree. The BCH codebook depends on this
# choice (it fixes which element is alpha).
PRIMITIVE_POLYS = {
    2: 0b111,  # x^2 + x + 1
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,  # x^5 + x^2 + 1
    6: 0b1000011,  # x^6 + x + 1
    7: 0b10001001,  # x^7 + x^3 + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,  # x^9 + x^4 + 1
    10: 0b10000001001,  # x^10 + x^3 + 1
}

# Design Bhattacharyya parameter used for the bundled polar codes (see README).
BUNDLED_POLAR_Z0 = 0.1


# ---------------------------------------------------------------------------
# GF(2)[x] arithmetic


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_divmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise ZeroDivisionError("polynomial division by zero")
    q = 0
    db = b.bit_length()
    while a.bit_length() >= db:
        shift = a.bit_length() - db
        q |= 1 << shift
        a ^= b << shift
    return q, a


def poly_degree(a: int) -> int:
    return a.bit_length() - 1


def poly_to_str(a: int) -> str:
    if a == 0:
        return "0"
    terms = []
    for i in range(poly_degree(a), -1, -1):
        if (a >> i) & 1:
            terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
    return " + ".join(terms)


def poly_coeffs(a: int, length: int) -> np.ndarray:
    """Coefficient vector ``[a_0, a_1, ..., a_{length-1}]``."""
    return np.array([(a >> i) & 1 for i in range(length)], dtype=np.uint8)


def _field_tables(m: int) -> tuple[list[int], dict[int, int]]:
    """Antilog and log tables of GF(2^m) for the fixed primitive polynomial."""
    prim = PRIMITIVE_POLYS[m]
    order = (1 << m) - 1
    exp = [1]
    for _ in range(order - 1):
        v = exp[-1] << 1
        if v >> m:
            v ^= prim
        exp.append(v)
    log = {v: i for i, v in enumerate(exp)}
    if len(log) != order:
        raise AssertionError(f"polynomial {bin(prim)} is not primitive")
    return exp, log


def minimal_polynomial(m: int, power: int) -> int:
    """Minimal polynomial over GF(2) of ``alpha**power`` in GF(2^m)."""
    exp, log = _field_tables(m)
    order = len(exp)
    coset = []
    e = power % order
    while e not in coset:
        coset.append(e)
        e = (2 * e) % order

    def fmul(a, b):
        if a == 0 or b == 0:
            return 0
        return exp[(log[a] + log[b]) % order]

    # prod (X + alpha^e) with coefficients in GF(2^m); they collapse to {0, 1}
    coeffs = [1]
    for e in coset:
        root = exp[e]
        nxt = [0] * (len(coeffs) + 1)
        for d, c in enumerate(coeffs):
            nxt[d + 1] ^= c
            nxt[d] ^= fmul(c, root)
        coeffs = nxt
    if any(c not in (0, 1) for c in coeffs):
        raise AssertionError("minimal polynomial has coefficients outside GF(2)")
    return sum(c << d for d, c in enumerate(coeffs))


def bch_generator_poly(m: int, t: int) -> int:
    """``lcm`` of the minimal polynomials of alpha, alpha^2, ..., alpha^(2t)."""
    if m not in PRIMITIVE_POLYS:
        raise UnsupportedFieldDegree(f"field degree must be in 2..10, got {m}")
    n = (1 << m) - 1
    g = 1
    seen: set[int] = set()
    for i in range(1, 2 * t + 1):
        mp = minimal_polynomial(m, i)
        if mp not in seen:
            seen.add(mp)
            g = poly_mul(g, mp)
    if poly_degree(g) >= n:
        raise DesignDistanceTooLarge(f"t={t} leaves no message bits for n={n}")
    return g


# ---------------------------------------------------------------------------
# Code containers


@dataclass(frozen=True, eq=False)
class LinearCode:
    name: str
    family: str  # "BCH", "Polar" or "Custom"
    n: int
    k: int
    h_conv: np.ndarray
    h_sys: np.ndarray
    generator: np.ndarray
    column_permutation: np.ndarray
    h_mod: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def seq_len(self) -> int:
        return 2 * self.n - self.k

    def manifest(self) -> dict:
        out = {
            "name": self.name,
            "family": self.family,
            "n": self.n,
            "k": self.k,
            "permutation": [int(i) for i in self.column_permutation],
        }
        if "frozen_set" in self.meta:
            out["frozen_set"] = list(self.meta["frozen_set"])
        if "primitive_poly" in self.meta:
            out["primitive_poly"] = self.meta["primitive_poly"]
        return out


@dataclass(frozen=True, eq=False)
class PolarDesign:
    m: int
    frozen_set: tuple[int, ...]
    bhattacharyya: np.ndarray
    z0: float


def _finish(name, family, h_conv, generator=None, h_mod=None, meta=None) -> LinearCode:
    h_conv = gf2.as_bits(h_conv)
    r, n = h_conv.shape
    sys = gf2.to_systematic(h_conv)
    if generator is None:
        generator = gf2.nullspace_generator(h_conv)
    return LinearCode(
        name=name,
        family=family,
        n=n,
        k=n - r,
        h_conv=h_conv,
        h_sys=sys.in_input_coordinates(),
        generator=gf2.as_bits(generator),
        column_permutation=sys.column_permutation,
        h_mod=h_mod,
        meta=dict(meta or {}),
    )


def code_from_pcm(h, name: str = "custom") -> LinearCode:
    """Wrap an arbitrary full-row-rank PCM as a ``Custom`` code."""
    return _finish(name, "Custom", h)


# ---------------------------------------------------------------------------
# Polar codes


def polar_kernel(m: int) -> np.ndarray:
    """``F^{(x)m}`` with ``F = [[1, 0], [1, 1]]``."""
    g = np.ones((1, 1), dtype=np.uint8)
    f = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    for _ in range(m):
        g = np.kron(g, f).astype(np.uint8)
    return g


def bhattacharyya(n: int, z0: float = 0.5) -> np.ndarray:
    """Bhattacharyya parameters of the n synthetic channels.

    Index bits are read MSB first; a 0 bit takes the degraded branch
    ``2z - z^2`` and a 1 bit the upgraded branch ``z^2``.
    """
    z = np.array([z0], dtype=np.float64)
    while z.size < n:
        nxt = np.empty(2 * z.size)
        nxt[0::2] = 2 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


def polar_design(n: int, k: int, z0: float = 0.5, frozen_override=None) -> PolarDesign:
    if n < 2 or n & (n - 1):
        raise BadDimensions(f"polar block length must be a power of two, got {n}")
    if not 0 < k < n:
        raise BadDimensions(f"need 0 < k < n, got k={k}, n={n}")
    z = bhattacharyya(n, z0)
    if frozen_override is not None:
        frozen = sorted(int(i) for i in set(frozen_override))
        if len(frozen) != n - k or frozen[0] < 0 or frozen[-1] >= n:
            raise FrozenSetSizeMismatch(f"need {n - k} distinct indices in [0, {n}), got {len(frozen)}")
    else:
        order = sorted(range(n), key=lambda i: (-z[i], i))
        frozen = sorted(order[: n - k])
    return PolarDesign(m=n.bit_length() - 1, frozen_set=tuple(frozen), bhattacharyya=z, z0=z0)


def modify_polar_pcm(h, fixpoint: bool = False) -> np.ndarray:
    """Single forward sweep: if row i+1's support lies inside row i, XOR it out of row i.

    With ``fixpoint=True`` the sweep repeats until nothing changes.
    """
    out = gf2.as_bits(h)
    while True:
        changed = False
        for i in range(out.shape[0] - 1):
            nxt = out[i + 1]
            if nxt.any() and np.all(out[i] >= nxt):
                out[i] ^= nxt
                changed = True
        if not (fixpoint and changed):
            return out


def build_polar(
    n: int,
    k: int,
    z0: float = 0.5,
    frozen_override=None,
    bit_order: str = "natural",
    name: str | None = None,
) -> LinearCode:
    """Polar code whose PCM rows are the frozen columns of ``F^{(x)m}``.

    ``bit_order="parity_first"`` relabels codeword positions so the frozen
    indices come first (ascending), then the information indices. The
    codebook is the same up to that relabeling, and the PCM then reaches
    ``[I | P]`` by row operations alone.
    """
    design = polar_design(n, k, z0, frozen_override)
    gn = polar_kernel(design.m)
    frozen = list(design.frozen_set)
    info = [i for i in range(n) if i not in set(frozen)]
    if bit_order == "natural":
        order = list(range(n))
    elif bit_order == "parity_first":
        order = frozen + info
    else:
        raise ValueError(f"unknown bit order {bit_order!r}")
    h_conv = gn[:, frozen].T[:, order]
    generator = gn[info][:, order]
    meta = {
        "frozen_set": frozen,
        "z0": z0,
        "bit_order": order,
        "bhattacharyya": design.bhattacharyya.tolist(),
    }
    return _finish(
        name or f"polar-{n}-{k}",
        "Polar",
        h_conv,
        generator=generator,
        h_mod=modify_polar_pcm(h_conv),
        meta=meta,
    )


# ---------------------------------------------------------------------------
# BCH codes


def build_bch(m: int, t: int, name: str | None = None) -> LinearCode:
    """Narrow-sense primitive BCH code of length ``2**m - 1``.

    The PCM is the cyclic one built from ``h(x) = (x^n + 1) / g(x)``:
    row i holds the coefficients of ``x^i * reverse(h)``.
    """
    if m not in PRIMITIVE_POLYS:
        raise UnsupportedFieldDegree(f"field degree must be in 2..10, got {m}")
    n = (1 << m) - 1
    g = bch_generator_poly(m, t)
    r = poly_degree(g)
    k = n - r
    h, rem = poly_divmod((1 << n) | 1, g)
    if rem:
        raise AssertionError("g(x) does not divide x^n + 1")
    h_rev = poly_coeffs(h, k + 1)[::-1]
    h_conv = np.zeros((r, n), dtype=np.uint8)
    for i in range(r):
        h_conv[i, i : i + k + 1] = h_rev
    g_coeffs = poly_coeffs(g, r + 1)
    generator = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        generator[i, i : i + r + 1] = g_coeffs
    meta = {
        "m": m,
        "t": t,
        "primitive_poly": poly_to_str(PRIMITIVE_POLYS[m]),
        "generator_poly": poly_to_str(g),
        "g": g,
        "h": h,
    }
    return _finish(name or f"bch-{n}-{k}", "BCH", h_conv, generator=generator, meta=meta)


def bch_t_for_dimension(m: int, k: int) -> int:
    """Smallest design capability t whose BCH code has dimension k."""
    n = (1 << m) - 1
    for t in range(1, n):
        try:
            dim = n - poly_degree(bch_generator_poly(m, t))
        except DesignDistanceTooLarge:
            break
        if dim == k:
            return t
        if dim < k:
            break
    raise BadDimensions(f"no BCH code of length {n} has dimension {k}")


# ---------------------------------------------------------------------------
# Encoding


def encode(code: LinearCode, message) -> np.ndarray:
    """``message @ G mod 2``; ``message`` may be a batch of shape (..., k)."""
    msg = np.asarray(message)
    if msg.shape[-1] != code.k:
        raise DimensionMismatch(f"message length {msg.shape[-1]} != k={code.k}")
    return gf2.matvec_mod2(code.generator.T, msg)


# ---------------------------------------------------------------------------
# PCM files


def _int_tokens(line: str, lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise ParseError(lineno, f"non-integer token in {line.strip()!r}") from None


def parse_alist(text: str) -> np.ndarray:
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if len(lines) < 4:
        raise ParseError(len(lines), "truncated alist header")
    it = iter(lines)

    def take(expected_len=None):
        try:
            lineno, ln = next(it)
        except StopIteration:
            raise ParseError(len(text.splitlines()), "unexpected end of file") from None
        toks = _int_tokens(ln, lineno)
        if expected_len is not None and len(toks) != expected_len:
            raise ParseError(lineno, f"expected {expected_len} entries, got {len(toks)}")
        return lineno, toks

    lineno, hdr = take(2)
    n, m = hdr
    if n < 1 or m < 1:
        raise ParseError(lineno, "matrix dimensions must be positive")
    _, (max_col, max_row) = take(2)
    _, col_deg = take(n)
    _, row_deg = take(m)
    if max(col_deg) > max_col or max(row_deg) > max_row:
        raise InconsistentDegrees("a degree exceeds the declared maximum")
    h = np.zeros((m, n), dtype=np.uint8)
    for c in range(n):
        lineno, toks = take()
        idx = [t for t in toks if t != 0]
        if len(idx) != col_deg[c]:
            raise InconsistentDegrees(f"column {c + 1} lists {len(idx)} rows, degree says {col_deg[c]}")
        for r in idx:
            if not 1 <= r <= m:
                raise ParseError(lineno, f"row index {r} outside 1..{m}")
            h[r - 1, c] = 1
    for r in range(m):
        lineno, toks = take()
        idx = [t for t in toks if t != 0]
        if len(idx) != row_deg[r]:
            raise InconsistentDegrees(f"row {r + 1} lists {len(idx)} columns, degree says {row_deg[r]}")
        for c in idx:
            if not 1 <= c <= n:
                raise ParseError(lineno, f"column index {c} outside 1..{n}")
            if not h[r, c - 1]:
                raise InconsistentDegrees(f"row list ({r + 1}, {c}) disagrees with the column lists")
    return h


def format_alist(h) -> str:
    h = gf2.as_bits(h)
    m, n = h.shape
    cols = [np.flatnonzero(h[:, c]) + 1 for c in range(n)]
    rows = [np.flatnonzero(h[r]) + 1 for r in range(m)]
    max_col = max(len(c) for c in cols)
    max_row = max(len(r) for r in rows)

    def padded(idx, width):
        vals = list(idx) + [0] * (width - len(idx))
        return " ".join(str(int(v)) for v in vals)

    out = [f"{n} {m}", f"{max_col} {max_row}"]
    out.append(" ".join(str(len(c)) for c in cols))
    out.append(" ".join(str(len(r)) for r in rows))
    out.extend(padded(c, max_col) for c in cols)
    out.extend(padded(r, max_row) for r in rows)
    return "\n".join(out) + "\n"


def parse_dense01(text: str) -> np.ndarray:
    rows = []
    for lineno, ln in enumerate(text.splitlines(), start=1):
        if not ln.strip() or ln.lstrip().startswith("#"):
            continue
        toks = ln.split()
        if any(t not in ("0", "1") for t in toks):
            raise ParseError(lineno, "dense01 rows may only contain 0 and 1")
        if rows and len(toks) != len(rows[0]):
            raise ParseError(lineno, f"row has {len(toks)} entries, expected {len(rows[0])}")
        rows.append([int(t) for t in toks])
    if not rows:
        raise ParseError(0, "empty matrix")
    return np.array(rows, dtype=np.uint8)


def format_dense01(h) -> str:
    h = gf2.as_bits(h)
    return "".join(" ".join(str(int(v)) for v in row) + "\n" for row in h)


def load_pcm(path, format: str = "alist") -> np.ndarray:
    text = Path(path).read_text()
    if format == "alist":
        return parse_alist(text)
    if format == "dense01":
        return parse_dense01(text)
    raise ValueError(f"unknown PCM format {format!r}")


def save_pcm(h, path, format: str = "alist") -> None:
    if format == "alist":
        text = format_alist(h)
    elif format == "dense01":
        text = format_dense01(h)
    else:
        raise ValueError(f"unknown PCM format {format!r}")
    Path(path).write_text(text)


def save_manifest(code: LinearCode, path) -> None:
    Path(path).write_text(json.dumps(code.manifest(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Bundled codes

BENCHMARK_CODES = (
    "bch-31-11",
    "bch-31-16",
    "bch-63-30",
    "bch-63-45",
    "polar-64-22",
    "polar-64-32",
    "polar-64-48",
)

BUNDLED_CODES = (
    "bch-7-4",
    "bch-15-7",
    "bch-15-11",
    "bch-31-21",
    "bch-63-36",
    "polar-8-4",
    "polar-16-8",
    "polar-32-16",
) + BENCHMARK_CODES

_NAME = re.compile(r"^(bch|polar)-(\d+)-(\d+)$")


@functools.lru_cache(maxsize=None)
def get_code(name: str) -> LinearCode:
    """Look up a code by name, e.g. ``bch-31-11`` or ``polar-64-22``.

    Any BCH length 2^m - 1 (m = 2..10) and any power-of-two polar length
    parse; polar codes use the parity-first bit order and the bundled design
    parameter.
    """
    match = _NAME.match(name.lower())
    if not match:
        raise UnknownCode(name)
    family, n, k = match.group(1), int(match.group(2)), int(match.group(3))
    if family == "bch":
        m = (n + 1).bit_length() - 1
        if (1 << m) - 1 != n:
            raise UnknownCode(f"{name}: BCH length must be 2^m - 1")
        return build_bch(m, bch_t_for_dimension(m, k), name=name.lower())
    return build_polar(n, k, z0=BUNDLED_POLAR_Z0, bit_order="parity_first", name=name.lower())


def resolve_code(name: str | None = None, pcm_path=None, pcm_format: str = "alist") -> LinearCode:
    if pcm_path is not None:
        return code_from_pcm(load_pcm(pcm_path, pcm_format), name=name or Path(pcm_path).stem)
    if name is None:
        raise UnknownCode("no code given")
    return get_code(name)
