"""End-to-end deep feature screening.

Step 1 trains an autoencoder (supervised when a response is given) and
min-max normalises its encoding. Step 2 ranks the encoding on a Sobol grid,
caches its rank distances and scores every original feature by rank distance
correlation with it.
"""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from ._io import atomic_open, write_keyvalue
from .errors import InvalidInputError
from .mvrank import assign
from .neuralnet import TrainConfig, build_network, encode_normalized, train
from .qmc import make_grid
from .rdcorr import build_cache, screen_all

__all__ = ["Dataset", "ScreeningReport", "default_k", "estimate_m", "rank_features",
           "make_report", "run_deepfs", "scale_inputs", "write_report", "RATIO_FLOOR"]

RATIO_FLOOR = 1e-12
SUPERVISION = ("none", "continuous", "categorical")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray = None
    supervision: str = "none"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise InvalidInputError(f"X must be 2-D, got shape {self.X.shape}")
        if self.supervision not in SUPERVISION:
            raise InvalidInputError(f"unknown supervision {self.supervision!r}")
        if self.supervision != "none":
            if self.y is None:
                raise InvalidInputError(f"{self.supervision} supervision requires a response")
            self.y = np.asarray(self.y)
            if self.y.shape != (self.X.shape[0],):
                raise InvalidInputError("response length does not match the number of rows")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass
class ScreeningReport:
    omega: np.ndarray       # (p,) importance scores in column order
    order: np.ndarray       # 0-based column indices, omega descending
    top_k: np.ndarray       # order[:k_used]
    m_hat: int
    k_used: int
    loss_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: dict = field(default_factory=dict)


def default_k(n):
    """Integer part of n / ln(n), at least 1."""
    if n < 3:
        raise InvalidInputError(f"default_k needs n >= 3, got {n}")
    return max(1, int(math.floor(n / math.log(n))))


def rank_features(omega):
    """Column indices by descending score; equal scores keep column order."""
    return np.argsort(-np.asarray(omega, dtype=np.float64), kind="stable")


def estimate_m(omega):
    """Position of the largest ratio between consecutive descending scores.

    With scores sorted as w[1] >= ... >= w[p], returns the 1-based ``i`` in
    1..p-1 maximising ``w[i] / max(w[i+1], 1e-12)``; ties go to the smaller i.
    """
    w = np.asarray(omega, dtype=np.float64).ravel()
    if w.size < 2:
        raise InvalidInputError("estimate_m needs at least two scores")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("scores must be finite and non-negative")
    desc = np.sort(w)[::-1]
    ratios = desc[:-1] / np.maximum(desc[1:], RATIO_FLOOR)
    return int(np.argmax(ratios)) + 1


def make_report(omega, k=None, n=None, loss_trace=None, meta=None):
    omega = np.asarray(omega, dtype=np.float64)
    p = omega.size
    if k is None:
        if n is None:
            raise InvalidInputError("need k or n to choose the number of features")
        k = default_k(n)
    k = int(k)
    if not 1 <= k:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    k = min(k, p)
    order = rank_features(omega)
    return ScreeningReport(
        omega=omega, order=order, top_k=order[:k].copy(), m_hat=estimate_m(omega),
        k_used=k, loss_trace=np.zeros(0) if loss_trace is None else np.asarray(loss_trace),
        meta=dict(meta or {}))


def scale_inputs(X, how="zscore"):
    """Column scaling applied to the autoencoder input only (screening is rank based).

    ``zscore`` standardises each column; ``rank`` maps each column to centred
    ranks in (-0.5, 0.5), which tames heavy tails; ``none`` leaves data as is.
    Constant columns become 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if how == "none":
        return X
    if how == "zscore":
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        return (X - mu) / sd
    if how == "rank":
        n = X.shape[0]
        r = np.argsort(np.argsort(X, axis=0, kind="stable"), axis=0, kind="stable")
        out = (r + 1.0) / (n + 1.0) - 0.5
        out[:, np.all(X == X[0], axis=0)] = 0.0
        return out
    raise InvalidInputError(f"unknown scaling {how!r}")


def _scale_target(y, how):
    y = np.asarray(y, dtype=np.float64)
    if how == "none":
        return y
    return scale_inputs(y[:, None], how)[:, 0]


def run_deepfs(data, config=None, k=None, seed=None, scale="none", grid="sobol",
               threads=1):
    """Train, encode, rank and screen; returns a :class:`ScreeningReport`.

    ``seed`` overrides ``config.seed``. The same scaling is applied to the
    inputs and, for continuous supervision, to the response.
    """
    config = TrainConfig() if config is None else config
    if seed is not None:
        config = TrainConfig(**{**asdict(config), "seed": int(seed)})
    config.validate()
    n, p = data.n, data.p
    if n < 3 or p < 2:
        raise InvalidInputError(f"need n >= 3 and p >= 2, got n={n}, p={p}")
    if not np.all(np.isfinite(data.X)):
        bad = int(np.flatnonzero(~np.isfinite(data.X).all(axis=0))[0])
        raise InvalidInputError(f"column {bad + 1} contains non-finite values")

    init_rng, shuffle_rng, drop_rng = config.streams()
    x_train = scale_inputs(data.X, scale)
    y_train = None
    n_classes = 2
    if data.supervision == "continuous":
        y_train = _scale_target(data.y, scale)
    elif data.supervision == "categorical":
        y_train = np.asarray(data.y)
        n_classes = max(2, int(np.max(y_train)))
    net = build_network(p, config.latent_dim, config.hidden, data.supervision, n_classes,
                        config.activation, rng=init_rng)
    net, trace = train(net, x_train, config, y_train, rng=(shuffle_rng, drop_rng))
    encoding = encode_normalized(net, x_train)

    ranks_y = assign(encoding, make_grid(grid, config.latent_dim, n))
    cache = build_cache(ranks_y)
    omega = screen_all(data.X, ranks_y, cache, threads=threads)
    meta = {"n": n, "p": p, "supervision": data.supervision, "scale": scale,
            "grid": grid, **{f"config.{key}": val for key, val in asdict(config).items()}}
    rep = make_report(omega, k=k, n=n, loss_trace=trace, meta=meta)
    rep.meta["seed"] = config.seed
    return rep


def write_report(report, csv_path, meta_path):
    """Report CSV (1-based feature indices) plus a key=value metadata sidecar."""
    p = report.omega.size
    position = np.empty(p, dtype=np.intp)
    position[report.order] = np.arange(1, p + 1)
    selected = np.zeros(p, dtype=bool)
    selected[report.top_k] = True
    with atomic_open(csv_path) as fh:
        fh.write("feature_index,omega,rank_position,selected\n")
        for j in range(p):
            fh.write(f"{j + 1},{report.omega[j]:.17g},{position[j]},{int(selected[j])}\n")
    items = [("k_used", report.k_used), ("m_hat", report.m_hat)]
    items += [(key, _fmt(val)) for key, val in report.meta.items()]
    items.append(("top_k", ",".join(str(int(j) + 1) for j in report.top_k)))
    write_keyvalue(meta_path, items)


def _fmt(val):
    if isinstance(val, (list, tuple)):
        return ",".join(str(v) for v in val)
    if val is None:
        return ""
    if isinstance(val, float):
        return repr(val)
    return str(val)
