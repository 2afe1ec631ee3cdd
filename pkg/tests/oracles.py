"""Slow, obviously-correct reference computations used by the tests.

Nothing here imports deepfs, so the oracles stay independent of the code
under test.
"""

from itertools import combinations, permutations
import math

import numpy as np


def brute_force_assignment(samples, points):
    """Minimum total squared distance over all n! matchings, and one argmin."""
    x = np.asarray(samples, dtype=float).reshape(len(samples), -1)
    c = np.asarray(points, dtype=float).reshape(len(points), -1)
    n = x.shape[0]
    cost = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
    perms = np.array(list(permutations(range(n))), dtype=np.intp).reshape(-1, n)
    totals = cost[np.arange(n), perms].sum(axis=1)
    i = int(np.argmin(totals))
    return float(totals[i]), tuple(int(j) for j in perms[i])


def max_inner_product_assignment(samples, points):
    x = np.asarray(samples, dtype=float)
    c = np.asarray(points, dtype=float)
    n = x.shape[0]
    best, arg = -math.inf, None
    for perm in permutations(range(n)):
        val = sum(float(np.dot(x[i], c[perm[i]])) for i in range(n))
        if val > best:
            best, arg = val, perm
    return arg


def van_der_corput(i, base=2):
    out, denom = 0.0, 1.0
    while i:
        i, digit = divmod(i, base)
        denom *= base
        out += digit / denom
    return out


def naive_rdcov2(rx, ry):
    """S1 + S2 - 2 S3 with explicit loops, including the O(n^3) triple sum."""
    rx = [np.atleast_1d(np.asarray(v, dtype=float)) for v in rx]
    ry = [np.atleast_1d(np.asarray(v, dtype=float)) for v in ry]
    n = len(rx)

    def dist(u, v):
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))

    a = [[dist(rx[k], rx[l]) for l in range(n)] for k in range(n)]
    b = [[dist(ry[k], ry[l]) for l in range(n)] for k in range(n)]
    s1 = sum(a[k][l] * b[k][l] for k in range(n) for l in range(n)) / n ** 2
    s2 = (sum(map(sum, a)) / n ** 2) * (sum(map(sum, b)) / n ** 2)
    s3 = sum(a[k][l] * b[k][m] for k in range(n) for l in range(n) for m in range(n)) / n ** 3
    return s1 + s2 - 2 * s3


def naive_rdcorr(rx, ry):
    xy = max(naive_rdcov2(rx, ry), 0.0)
    xx = math.sqrt(max(naive_rdcov2(rx, rx), 0.0))
    yy = math.sqrt(max(naive_rdcov2(ry, ry), 0.0))
    if xx == 0 or yy == 0:
        return 0.0
    return math.sqrt(xy) / math.sqrt(xx * yy)


def lattice_ranks_by_sorting(values):
    """j/(n+1) for the j-th smallest value, ties by index."""
    n = len(values)
    order = sorted(range(n), key=lambda i: (values[i], i))
    out = [0.0] * n
    for j, i in enumerate(order, start=1):
        out[i] = j / (n + 1)
    return out


def exact_rank_sum_pvalue(a, b):
    """P(W >= w_obs) for the rank sum of ``a`` under all C(N, m) relabelings.

    Ranks come from a direct count (average of positions for ties).
    """
    pooled = list(a) + list(b)
    N, m = len(pooled), len(a)
    ranks = []
    for v in pooled:
        less = sum(1 for u in pooled if u < v)
        equal = sum(1 for u in pooled if u == v)
        ranks.append(less + (equal + 1) / 2)
    w = sum(ranks[:m])
    subsets = list(combinations(range(N), m))
    return sum(1 for s in subsets if sum(ranks[i] for i in s) >= w - 1e-9) / len(subsets)


def naive_forward(layers, x):
    """Per-sample forward through [(W, b, act), ...] using Python loops."""
    acts = {
        "relu": lambda z: max(z, 0.0),
        "tanh": math.tanh,
        "sigmoid": lambda z: 1 / (1 + math.exp(-z)),
        "linear": lambda z: z,
    }
    v = list(x)
    for W, b, act in layers:
        v = [acts[act](sum(W[i][j] * v[j] for j in range(len(v))) + b[i])
             for i in range(len(b))]
    return v


def finite_difference_grad(f, params, step=1e-5):
    out = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            hi = f()
            p[idx] = old - step
            lo = f()
            p[idx] = old
            g[idx] = (hi - lo) / (2 * step)
        out.append(g)
    return out
