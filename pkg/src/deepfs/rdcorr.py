"""Rank distance covariance / correlation and per-feature screening.

With ``a[k, l] = ||Rank(X_k) - Rank(X_l)||`` and ``b`` likewise for Y::

    S1 = mean(a * b)
    S2 = mean(a) * mean(b)
    S3 = mean_k( rowmean(a)[k] * rowmean(b)[k] )
    RdCov^2 = S1 + S2 - 2 S3

The Y side (the encoding) is shared by every feature, so its distance
matrix and marginals are computed once and kept in an :class:`RdcCache`.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np

from .errors import DimensionError, InsufficientSamplesError, InvalidInputError
from .mvrank import RankMap, rank_1d
from .qmc import lattice_1d

__all__ = ["RdcCache", "rank_distances", "build_cache", "rdcov2", "rdcorr",
           "screen_all", "ZERO_TOL"]

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class RdcCache:
    rank_dist: np.ndarray
    row_means: np.ndarray
    grand_mean: float
    self_rdcov: float

    @property
    def n(self):
        return self.rank_dist.shape[0]


def _ranks(obj):
    r = obj.ranks if isinstance(obj, RankMap) else np.asarray(obj, dtype=np.float64)
    return r[:, None] if r.ndim == 1 else r


def rank_distances(ranks):
    r = _ranks(ranks)
    if r.shape[1] == 1:
        d = np.abs(r[:, 0][:, None] - r[:, 0][None, :])
    else:
        diff = r[:, None, :] - r[None, :, :]
        d = np.sqrt(np.einsum("kld,kld->kl", diff, diff))
    return d


def _rdcov2_from_parts(a, a_rows, a_mean, b, b_rows, b_mean):
    n = a.shape[0]
    s1 = float(np.einsum("kl,kl->", a, b)) / (n * n)
    s2 = a_mean * b_mean
    s3 = float(a_rows @ b_rows) / n
    return max(s1 + s2 - 2.0 * s3, 0.0)


def build_cache(ranks_y):
    b = rank_distances(ranks_y)
    n = b.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {n}")
    b.setflags(write=False)
    rows = b.mean(axis=1)
    rows.setflags(write=False)
    grand = float(rows.mean())
    self_cov = math.sqrt(_rdcov2_from_parts(b, rows, grand, b, rows, grand))
    return RdcCache(b, rows, grand, self_cov)


def rdcov2(ranks_x, cache):
    a = rank_distances(ranks_x)
    if a.shape[0] != cache.n:
        raise DimensionError(f"sample sizes differ: {a.shape[0]} vs {cache.n}")
    rows = a.mean(axis=1)
    return _rdcov2_from_parts(a, rows, float(rows.mean()),
                              cache.rank_dist, cache.row_means, cache.grand_mean)


def _corr_from_dist(a, cache):
    rows = a.mean(axis=1)
    mean = float(rows.mean())
    xy = _rdcov2_from_parts(a, rows, mean, cache.rank_dist, cache.row_means,
                            cache.grand_mean)
    xx = math.sqrt(_rdcov2_from_parts(a, rows, mean, a, rows, mean))
    yy = cache.self_rdcov
    if xx < ZERO_TOL or yy < ZERO_TOL:
        return 0.0
    return min(max(math.sqrt(xy) / math.sqrt(xx * yy), 0.0), 1.0)


def rdcorr(ranks_x, cache):
    """RdCov(X, Y) / sqrt(RdCov(X, X) RdCov(Y, Y)), zero for degenerate sides."""
    a = rank_distances(ranks_x)
    if a.shape[0] != cache.n:
        raise DimensionError(f"sample sizes differ: {a.shape[0]} vs {cache.n}")
    return _corr_from_dist(a, cache)


def _screen_columns(x, cols, cache, grid):
    out = np.empty(len(cols))
    for t, j in enumerate(cols):
        col = x[:, j]
        if col[0] == col[-1] and np.all(col == col[0]):
            out[t] = 0.0
            continue
        r = rank_1d(col, grid).ranks[:, 0]
        out[t] = _corr_from_dist(np.abs(r[:, None] - r[None, :]), cache)
    return out


def screen_all(features, ranks_y, cache, threads=1):
    """Importance score of every column of ``features`` against the cached side.

    Constant columns score 0. ``threads > 1`` splits columns across a thread
    pool; each column's arithmetic is identical either way, so results do not
    depend on the thread count. ``ranks_y`` (the ranks the cache was built
    from, or None) is only used to cross-check the sample size.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n, p = x.shape
    if n != cache.n or (ranks_y is not None and _ranks(ranks_y).shape[0] != n):
        raise DimensionError(f"feature matrix has {n} rows, cache has {cache.n}")
    finite = np.isfinite(x).all(axis=0)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise InvalidInputError(f"column {bad + 1} contains non-finite values")
    grid = lattice_1d(n)
    if threads is None or threads <= 0:
        threads = os.cpu_count() or 1
    if threads == 1 or p < 2:
        return _screen_columns(x, range(p), cache, grid)
    chunks = [c for c in np.array_split(np.arange(p), min(threads, p) * 4) if c.size]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _screen_columns(x, c, cache, grid), chunks))
    return np.concatenate(parts)
