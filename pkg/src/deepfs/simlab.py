"""Synthetic designs, selection metric and one-sided rank-sum test.

Replication protocol: ``seed`` fixes everything a design keeps constant
across replications (active set, coefficients, MAFs and, for the SNP and
Cauchy designs, the feature matrix); ``replication`` seeds the rest.
Active indices are 0-based in memory and written 1-based to disk.
"""

from dataclasses import dataclass, field
from itertools import combinations
import math

import numpy as np

from ._io import atomic_open
from .errors import InvalidInputError

__all__ = ["SimSpec", "LabeledDataset", "DESIGNS", "DESIGN_DEFAULTS", "gen_sim1",
           "gen_sim2", "gen_sim4", "genotype_codes", "augment_irrelevant", "generate",
           "rho_metric", "wilcoxon_greater", "sim1_logit", "sim2_response", "write_dataset", "read_truth",
           "run_simulation", "summarize"]

DESIGNS = {
    "snp_classification": "categorical",
    "cauchy_regression": "continuous",
    "two_class_gaussian": "none",
}

# Training settings picked by scripts/grid_search.py on simulation seeds 1-4.
DESIGN_DEFAULTS = {
    "snp_classification": ({"epochs": 100, "latent_dim": 1, "lam": 1.0}, "zscore"),
    "cauchy_regression": ({"epochs": 100, "latent_dim": 1, "lam": 0.1}, "rank"),
    "two_class_gaussian": ({"epochs": 200, "latent_dim": 2, "activation": "tanh"}, "zscore"),
}


@dataclass
class SimSpec:
    design: str
    n: int
    p: int
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise InvalidInputError(f"unknown design {self.design!r}")


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray            # None when absent
    truth: np.ndarray        # 0-based active columns
    supervision: str = "none"
    params: dict = field(default_factory=dict)


def _fixed_and_rep(seed, replication):
    fixed = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    rep = np.random.default_rng(np.random.SeedSequence([int(seed), 1, int(replication)]))
    return fixed, rep


def _check_rho(rho):
    if not 0.0 <= rho < 1.0:
        raise InvalidInputError(f"rho must be in [0, 1), got {rho}")


def _block_gaussian(rng, n, p, rho):
    """Rows of N(0, S): S_ii = 1, S_ij = rho within the first p // 20 columns."""
    z = rng.standard_normal((n, p))
    b = p // 20
    if rho > 0 and b > 1:
        common = rng.standard_normal((n, 1))
        z[:, :b] = math.sqrt(rho) * common + math.sqrt(1.0 - rho) * z[:, :b]
    return z


def sim1_logit(x, J, beta, intercept=-3.0):
    c = [x[:, j] for j in J]
    return (intercept + beta[0] * c[0] + beta[1] * np.sin(c[1]) + beta[2] * np.log(c[2] ** 2 + 1)
            + beta[3] * c[3] ** 2 + beta[4] * (c[4] < 1) + beta[5] * np.maximum(c[5], 1)
            + beta[6] * c[6] * (c[6] < 0) + beta[7] * np.sqrt(np.abs(c[7]))
            + beta[8] * np.cos(c[8]) + beta[9] * np.tanh(c[9]))


def genotype_codes(z, maf):
    """Codes 0/1/2 cut at the (1 - m)^2 and (1 - m^2) empirical column quantiles.

    Quantiles use linear interpolation between order statistics. Returns
    ``(codes, lower_cuts, upper_cuts)``.
    """
    z = np.asarray(z, dtype=np.float64)
    maf = np.broadcast_to(np.asarray(maf, dtype=np.float64), (z.shape[1],))
    c1 = np.array([np.quantile(z[:, j], (1 - maf[j]) ** 2) for j in range(z.shape[1])])
    c2 = np.array([np.quantile(z[:, j], 1 - maf[j] ** 2) for j in range(z.shape[1])])
    return (z > c1).astype(np.float64) + (z >= c2), c1, c2


def gen_sim1(n, p, rho=0.0, seed=0, replication=0, noise_sd=0.1, intercept=-3.0):
    """SNP-like genotypes with a nonlinear dichotomous phenotype.

    y is 0/1 (Bernoulli). Genotype codes 0/1/2 are cut at the empirical
    (1 - m)^2 and (1 - m^2) column quantiles (linear interpolation) and
    jittered by N(0, noise_sd^2). With the default intercept nearly every
    phenotype is 1 because the ten nonlinear terms are mostly positive.
    """
    if p < 20 or n < 2:
        raise InvalidInputError(f"need p >= 20 and n >= 2, got n={n}, p={p}")
    _check_rho(rho)
    fixed, rep = _fixed_and_rep(seed, replication)
    z = _block_gaussian(fixed, n, p, rho)
    maf = fixed.uniform(0.05, 0.5, size=p)
    code, c1, c2 = genotype_codes(z, maf)
    x = code + fixed.normal(0.0, noise_sd, size=(n, p)) if noise_sd > 0 else code
    J = fixed.choice(p, size=10, replace=False)
    beta = fixed.uniform(1.0, 2.0, size=10)
    eta = sim1_logit(x, J, beta, intercept)
    y = (rep.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.int64)
    return LabeledDataset(x, y, J, "categorical",
                          {"maf": maf, "beta": beta, "c1": c1, "c2": c2, "z": z})


def sim2_response(x, J, beta, noise):
    j1, j2, j3, j4, j5, j6 = J
    return (beta[0] * x[:, j1] + beta[1] * x[:, j2] ** 2 + beta[2] * x[:, j3] * x[:, j4]
            + beta[2] * x[:, j5] * x[:, j6] + beta[3] * (x[:, j6] < 0) + noise)


def gen_sim2(n, p, rho=0.0, seed=0, replication=0, beta=None, noise_sd=1.0):
    """Multivariate Cauchy rows (scale rho^|i-j|) and a 6-feature response.

    Rows are AR(1) Gaussian vectors divided by an independent |N(0, 1)|,
    i.e. multivariate t with one degree of freedom. The third coefficient
    multiplies both interaction terms.
    """
    if p < 6 or n < 2:
        raise InvalidInputError(f"need p >= 6 and n >= 2, got n={n}, p={p}")
    _check_rho(rho)
    fixed, rep = _fixed_and_rep(seed, replication)
    e = fixed.standard_normal((n, p))
    z = np.empty_like(e)
    z[:, 0] = e[:, 0]
    s = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        z[:, j] = rho * z[:, j - 1] + s * e[:, j]
    x = z / np.abs(fixed.standard_normal((n, 1)))
    J = fixed.choice(p, size=6, replace=False)
    b = fixed.uniform(1.0, 2.0, size=4)
    if beta is not None:
        b = np.asarray(beta, dtype=np.float64)
    noise = rep.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
    y = sim2_response(x, J, b, noise)
    return LabeledDataset(x, y, J, "continuous", {"beta": b})


def gen_sim4(n_per_class, p, seed=0, replication=0):
    """Two Gaussian classes, N(0, I) and N(mu, I); mu is 1 on 10 fixed columns.

    Labels are 1 and 2; rows are class 1 then class 2.
    """
    if p < 10 or n_per_class < 1:
        raise InvalidInputError(f"need p >= 10 and n_per_class >= 1, got {n_per_class}, {p}")
    fixed, rep = _fixed_and_rep(seed, replication)
    J = fixed.choice(p, size=10, replace=False)
    mu = np.zeros(p)
    mu[J] = 1.0
    x = rep.standard_normal((2 * n_per_class, p))
    x[n_per_class:] += mu
    y = np.repeat([1, 2], n_per_class)
    return LabeledDataset(x, y, J, "none", {"mu": mu})


def augment_irrelevant(X, p_total, seed=0, y=None):
    """Append ``p_total - q`` independent N(0, 1) columns; truth is the original q."""
    X = np.asarray(X, dtype=np.float64)
    n, q = X.shape
    if p_total <= q:
        raise InvalidInputError(f"p_total ({p_total}) must exceed the {q} existing columns")
    rng = np.random.default_rng(seed)
    extra = rng.standard_normal((n, p_total - q))
    return LabeledDataset(np.hstack([X, extra]), y, np.arange(q),
                          "none" if y is None else "categorical")


def generate(spec, replication=0):
    if spec.design == "snp_classification":
        return gen_sim1(spec.n, spec.p, spec.rho, spec.seed, replication)
    if spec.design == "cauchy_regression":
        return gen_sim2(spec.n, spec.p, spec.rho, spec.seed, replication)
    return gen_sim4(spec.n, spec.p, spec.seed, replication)


def rho_metric(selected, truth):
    truth = set(int(t) for t in np.asarray(truth).ravel())
    if not truth:
        raise InvalidInputError("truth set is empty")
    hit = truth.intersection(int(s) for s in np.asarray(selected).ravel())
    return len(hit) / len(truth)


def _midranks(values):
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def wilcoxon_greater(a, b, exact_max=12):
    """One-sided rank-sum p-value for ``a`` stochastically greater than ``b``.

    Exact enumeration of all splits of the (mid)ranks when the pooled size is
    at most ``exact_max``; otherwise the normal approximation with tie
    correction and a 0.5 continuity correction.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    m, k = a.size, b.size
    if m == 0 or k == 0:
        raise InvalidInputError("both samples must be nonempty")
    ranks = _midranks(np.concatenate([a, b]))
    w = ranks[:m].sum()
    N = m + k
    if N <= exact_max:
        # Compare with a tolerance: midranks are multiples of 0.5.
        total = hit = 0
        for idx in combinations(range(N), m):
            total += 1
            hit += ranks[list(idx)].sum() >= w - 1e-9
        return float(hit / total)
    mean = m * (N + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    var = m * k / 12.0 * ((N + 1) - np.sum(counts ** 3 - counts) / (N * (N - 1)))
    if var <= 0:
        return 1.0
    z = (w - mean - 0.5) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def write_dataset(ds, csv_path, truth_path=None):
    """CSV with optional leading ``y`` column, then x1..xp; truth file 1-based."""
    n, p = ds.X.shape
    with atomic_open(csv_path) as fh:
        cols = ([] if ds.y is None else ["y"]) + [f"x{j}" for j in range(1, p + 1)]
        fh.write(",".join(cols) + "\n")
        for i in range(n):
            row = [] if ds.y is None else [_label(ds, ds.y[i])]
            row += [f"{v:.17g}" for v in ds.X[i]]
            fh.write(",".join(row) + "\n")
    if truth_path is not None:
        with atomic_open(truth_path) as fh:
            for j in sorted(int(t) for t in ds.truth):
                fh.write(f"{j + 1}\n")


def _label(ds, v):
    if ds.supervision == "categorical" and "c1" in ds.params:
        return str(int(v) + 1)  # 0/1 phenotype -> classes 1/2
    if ds.supervision == "continuous":
        return f"{float(v):.17g}"
    return str(int(v))


def read_truth(path):
    with open(path, encoding="utf-8") as fh:
        return np.array([int(line) - 1 for line in fh if line.strip()], dtype=np.intp)


def _screen_one(spec, rep, config, k, scale, threads):
    from .pipeline import Dataset, run_deepfs

    ds = generate(spec, rep)
    y = ds.y
    if ds.supervision == "categorical":
        y = ds.y + 1
    data = Dataset(ds.X, None if ds.supervision == "none" else y, ds.supervision)
    report = run_deepfs(data, config, k=k, seed=config.seed + rep, scale=scale,
                        threads=threads)
    return rho_metric(report.top_k, ds.truth), report


def run_simulation(spec, replications, config, k=None, scale=None, threads=1,
                   workers=1):
    """Per-replication selection rates for ``replications`` generate-screen runs.

    Replication r trains with seed ``config.seed + r``. ``workers > 1`` runs
    replications in separate processes; results are ordered by replication.
    ``scale`` defaults to the design's entry in ``DESIGN_DEFAULTS``.
    """
    if scale is None:
        scale = DESIGN_DEFAULTS[spec.design][1]
    if replications < 1:
        raise InvalidInputError("replications must be >= 1")
    reps = range(int(replications))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_screen_one, spec, r, config, k, scale, threads) for r in reps]
            results = [f.result() for f in futs]
    else:
        results = [_screen_one(spec, r, config, k, scale, threads) for r in reps]
    return np.array([r[0] for r in results]), [r[1] for r in results]


def summarize(rates):
    """Mean and standard error (sample sd / sqrt(R); 0 for a single run)."""
    r = np.asarray(rates, dtype=np.float64)
    se = float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0
    return float(r.mean()), se
