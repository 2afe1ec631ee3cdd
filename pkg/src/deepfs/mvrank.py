"""Empirical multivariate ranks via optimal assignment to a QMC grid.

Each sample is matched to exactly one grid point so that the total squared
Euclidean distance is minimal; the matched grid point is the sample's rank.
In one dimension the optimal matching of an increasing grid is simply the
sorted order, which :func:`rank_1d` exploits.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError
from .qmc import QmcGrid, lattice_1d

__all__ = ["RankMap", "solve_assignment", "assign", "rank_1d", "assignment_cost"]


@dataclass(frozen=True)
class RankMap:
    ranks: np.ndarray        # (n, d); ranks[i] == grid.points[permutation[i]]
    permutation: np.ndarray  # (n,) sample index -> grid index, 0-based
    grid: QmcGrid

    @property
    def n(self):
        return self.ranks.shape[0]


def solve_assignment(cost):
    """Minimum-cost perfect matching of a square cost matrix.

    Shortest augmenting path with dual potentials (the Jonker-Volgenant /
    Hungarian family), O(n^3). Rows are inserted one at a time; each
    insertion runs a Dijkstra-like search over reduced costs, vectorised
    across columns.

    Returns ``col_of_row`` such that row ``i`` is matched to column
    ``col_of_row[i]``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n != m:
        raise DimensionError(f"cost matrix must be square, got {cost.shape}")
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost matrix has non-finite entries")

    # Column index n is a virtual column holding the row being inserted.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of_col = np.full(n + 1, -1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(n):
        row_of_col[n] = i
        j0 = n
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[:n]
            cur = cost[i0] - u[i0] - v[:n]
            better = free & (cur < minv[:n])
            minv[:n][better] = cur[better]
            way[:n][better] = j0
            cand = np.where(free, minv[:n], np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            # Update potentials on the alternating tree.
            tree = np.flatnonzero(used)
            u[row_of_col[tree]] += delta
            v[tree] -= delta
            minv[:n][free] -= delta
            j0 = j1
            if row_of_col[j0] == -1:
                break
        while j0 != n:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.intp)
    col_of_row[row_of_col[:n]] = np.arange(n)
    return col_of_row


def assignment_cost(samples, points, permutation):
    diff = np.asarray(samples, dtype=np.float64) - np.asarray(points)[permutation]
    return float(np.sum(diff * diff))


def _as_samples(samples):
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionError(f"samples must be (n, d), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("samples contain non-finite coordinates")
    return x


def assign(samples, grid):
    x = _as_samples(samples)
    pts = grid.points
    if x.shape != pts.shape:
        raise DimensionError(
            f"samples {x.shape} do not match grid points {pts.shape}")
    if x.shape[1] == 1:
        # Monotone matching is optimal for squared cost on a line.
        perm = np.empty(x.shape[0], dtype=np.intp)
        perm[np.argsort(x[:, 0], kind="stable")] = np.argsort(pts[:, 0], kind="stable")
        return RankMap(pts[perm], perm, grid)
    # ||x - c||^2 expanded; row/column constants are kept so costs are true
    # squared distances.
    cost = (np.sum(x * x, axis=1)[:, None] + np.sum(pts * pts, axis=1)[None, :]
            - 2.0 * x @ pts.T)
    perm = solve_assignment(cost)
    return RankMap(pts[perm], perm, grid)


def rank_1d(values, grid=None):
    """Ranks of scalar values on the lattice j/(n+1); ties keep index order."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 1:
        raise InvalidInputError("rank_1d needs at least one value")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("values contain non-finite entries")
    if grid is None:
        grid = lattice_1d(x.size)
    order = np.argsort(x, kind="stable")
    perm = np.empty(x.size, dtype=np.intp)
    perm[order] = np.arange(x.size)
    return RankMap(grid.points[perm], perm, grid)
