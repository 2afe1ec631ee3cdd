"""Low-discrepancy point sets on the unit cube.

These grids serve as the target points of the empirical multivariate ranks.
Sobol points are produced in natural (not Gray-code) order from the
Joe & Kuo ``new-joe-kuo-6.21201`` direction numbers; the origin, which is
always the first Sobol/Halton point, is dropped so no rank vector is zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnsupportedDimensionError

__all__ = ["QmcGrid", "sobol", "halton", "lattice_1d", "make_grid", "MAX_SOBOL_DIM"]

_BITS = 32

# (degree s, coefficient a, initial m_1..m_s) for dimensions 2, 3, ...
# Dimension 1 is the van der Corput sequence and needs no entry.
_JOE_KUO = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
    (6, 19, (1, 1, 1, 15, 7, 5)),
    (6, 22, (1, 3, 1, 15, 13, 25)),
    (6, 25, (1, 1, 5, 5, 19, 61)),
    (7, 1, (1, 3, 7, 11, 23, 15, 103)),
    (7, 4, (1, 3, 7, 13, 13, 15, 69)),
    (7, 7, (1, 1, 3, 13, 7, 35, 63)),
    (7, 8, (1, 3, 5, 9, 1, 25, 53)),
    (7, 14, (1, 3, 1, 13, 9, 35, 107)),
    (7, 19, (1, 3, 1, 5, 27, 61, 31)),
    (7, 21, (1, 1, 5, 11, 19, 41, 61)),
    (7, 28, (1, 3, 5, 3, 3, 13, 69)),
    (7, 31, (1, 1, 7, 13, 1, 19, 1)),
    (7, 32, (1, 3, 7, 5, 13, 19, 59)),
    (7, 37, (1, 1, 3, 9, 25, 29, 41)),
    (7, 41, (1, 3, 5, 13, 23, 1, 55)),
    (7, 42, (1, 3, 7, 3, 13, 59, 17)),
    (7, 50, (1, 3, 1, 3, 5, 53, 69)),
    (7, 55, (1, 1, 5, 5, 23, 33, 13)),
    (7, 56, (1, 1, 7, 7, 1, 61, 123)),
    (7, 59, (1, 1, 7, 9, 13, 61, 49)),
    (7, 62, (1, 3, 3, 5, 3, 55, 33)),
    (8, 14, (1, 3, 1, 15, 31, 13, 49, 245)),
    (8, 21, (1, 3, 5, 15, 31, 59, 63, 97)),
    (8, 22, (1, 3, 1, 11, 11, 11, 77, 249)),
)

MAX_SOBOL_DIM = len(_JOE_KUO) + 1

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
           67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137,
           139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199)


@dataclass(frozen=True)
class QmcGrid:
    dim: int
    points: np.ndarray  # (n, dim), read-only
    kind: str

    def __post_init__(self):
        self.points.setflags(write=False)

    def __len__(self):
        return self.points.shape[0]


def _direction_numbers(dim):
    """Direction integers v[j, k] scaled to 32 bits, shape (dim, 32)."""
    v = np.zeros((dim, _BITS), dtype=np.uint64)
    v[0] = [1 << (_BITS - 1 - k) for k in range(_BITS)]
    for j in range(1, dim):
        s, a, m = _JOE_KUO[j - 1]
        row = [0] * _BITS
        for k in range(min(s, _BITS)):
            row[k] = m[k] << (_BITS - 1 - k)
        for k in range(s, _BITS):
            val = row[k - s] ^ (row[k - s] >> s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    val ^= row[k - i]
            row[k] = val
        v[j] = row
    return v


def _check_sizes(dim, n, skip):
    if dim < 1 or n < 1 or skip < 0:
        raise InvalidInputError(f"need dim >= 1, n >= 1, skip >= 0; got {dim}, {n}, {skip}")


def sobol(dim, n, skip=0):
    """First ``n`` Sobol points after the origin and ``skip`` further points.

    Point ``i`` (counting the origin as 0) is the XOR of the direction
    numbers selected by the binary digits of ``i``.
    """
    _check_sizes(dim, n, skip)
    if dim > MAX_SOBOL_DIM:
        raise UnsupportedDimensionError(
            f"Sobol dimension {dim} exceeds the shipped table ({MAX_SOBOL_DIM})")
    idx = np.arange(1 + skip, 1 + skip + n, dtype=np.uint64)
    if int(idx[-1]) >= 1 << _BITS:
        raise InvalidInputError("Sobol index exceeds 2**32 - 1")
    v = _direction_numbers(dim)
    acc = np.zeros((n, dim), dtype=np.uint64)
    for b in range(_BITS):
        bit = (idx >> np.uint64(b)) & np.uint64(1)
        if not bit.any():
            continue
        acc ^= bit[:, None] * v[:, b][None, :]
    return QmcGrid(dim, acc.astype(np.float64) / float(1 << _BITS), "sobol")


def _radical_inverse(idx, base):
    out = np.zeros(idx.shape, dtype=np.float64)
    frac = 1.0 / base
    i = idx.copy()
    while i.any():
        out += (i % base) * frac
        i //= base
        frac /= base
    return out


def halton(dim, n, skip=0):
    _check_sizes(dim, n, skip)
    if dim > len(_PRIMES):
        raise UnsupportedDimensionError(f"Halton dimension {dim} exceeds {len(_PRIMES)}")
    idx = np.arange(1 + skip, 1 + skip + n, dtype=np.int64)
    pts = np.column_stack([_radical_inverse(idx, b) for b in _PRIMES[:dim]])
    return QmcGrid(dim, pts, "halton")


def lattice_1d(n):
    """Equally spaced points i/(n+1), i = 1..n."""
    if n < 1:
        raise InvalidInputError(f"need n >= 1, got {n}")
    pts = np.arange(1, n + 1, dtype=np.float64) / (n + 1)
    return QmcGrid(1, pts[:, None], "lattice-1d")


def make_grid(kind, dim, n, skip=0):
    if kind == "sobol":
        return sobol(dim, n, skip)
    if kind == "halton":
        return halton(dim, n, skip)
    if kind == "lattice-1d":
        if dim != 1:
            raise InvalidInputError("lattice-1d grids are one-dimensional")
        return lattice_1d(n)
    raise InvalidInputError(f"unknown grid kind {kind!r}")
