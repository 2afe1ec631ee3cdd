"""Command-line front end.

    deepfs --mode screen --input data.csv --supervision categorical --out results/
    deepfs --mode simulate --sim-design two_class_gaussian --n 200 --p 500 --reps 20 --out sim/

Settings resolve as: built-in defaults < per-design defaults (simulate) <
``--config`` key=value file < command-line flags.

Exit codes: 0 success, 2 input or configuration error, 3 training divergence.
"""

import argparse
import csv
from dataclasses import asdict, dataclass, fields
import os
import sys

import numpy as np

from ._io import atomic_open, read_keyvalue, write_keyvalue
from .errors import DivergenceError, InvalidInputError
from .neuralnet import TrainConfig
from .pipeline import Dataset, run_deepfs, write_report
from .simlab import DESIGN_DEFAULTS, DESIGNS, SimSpec, run_simulation, summarize

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 2, 3

DESIGN_ALIASES = {"sim1": "snp_classification", "sim2": "cauchy_regression",
                  "sim4": "two_class_gaussian"}


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str = "screen"
    input: str = None
    supervision: str = "none"
    latent_dim: int = 5
    top_k: int = None
    lam: float = 1.0
    lr: float = 1e-3
    epochs: int = 200
    batch: int = 64
    seed: int = 0
    reps: int = 1
    sim_design: str = None
    n: int = None
    p: int = None
    rho: float = 0.0
    out: str = "deepfs-out"
    threads: int = None
    scale: str = "none"
    activation: str = "relu"
    workers: int = 1

    def train_config(self):
        return TrainConfig(epochs=self.epochs, lr=self.lr, lam=self.lam,
                           batch_size=self.batch, seed=self.seed,
                           latent_dim=self.latent_dim, activation=self.activation)

    def validate(self):
        if self.mode not in ("screen", "simulate"):
            raise InputError(f"--mode must be screen or simulate, got {self.mode!r}")
        if self.supervision not in ("none", "continuous", "categorical"):
            raise InputError("--supervision must be none, continuous or categorical")
        if self.mode == "screen" and not self.input:
            raise InputError("--input is required in screen mode")
        if self.mode == "simulate":
            if self.sim_design not in DESIGNS:
                raise InputError(f"--sim-design must be one of {sorted(DESIGNS)}")
            if self.n is None or self.p is None:
                raise InputError("--n and --p are required in simulate mode")
            if self.reps < 1:
                raise InputError("--reps must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise InputError("--top-k must be >= 1")
        try:
            self.train_config().validate()
        except InvalidInputError as exc:
            raise InputError(str(exc)) from exc
        return self


# flag name -> RunConfig field
FLAGS = {
    "--mode": "mode", "--input": "input", "--supervision": "supervision",
    "--latent-dim": "latent_dim", "--top-k": "top_k", "--lambda": "lam", "--lr": "lr",
    "--epochs": "epochs", "--batch": "batch", "--seed": "seed", "--reps": "reps",
    "--sim-design": "sim_design", "--n": "n", "--p": "p", "--rho": "rho", "--out": "out",
    "--threads": "threads", "--scale": "scale", "--activation": "activation",
    "--workers": "workers",
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name, raw):
    typ = _TYPES[name]
    try:
        return typ(raw)
    except ValueError:
        raise InputError(f"{name}: cannot parse {raw!r} as {typ.__name__}") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="deepfs", description="Deep feature screening.")
    for flag, name in FLAGS.items():
        ap.add_argument(flag, dest=name, default=None)
    ap.add_argument("--config", default=None, help="key=value file; flags override it")
    return ap


def resolve_config(argv):
    args = build_parser().parse_args(argv)
    given = {name: getattr(args, name) for name in FLAGS.values()
             if getattr(args, name) is not None}
    from_file = {}
    if args.config:
        try:
            raw = read_keyvalue(args.config)
        except (OSError, ValueError) as exc:
            raise InputError(f"config file: {exc}") from exc
        for key, value in raw.items():
            name = FLAGS.get("--" + key.replace("_", "-"), key)
            if name == "lambda":
                name = "lam"
            if name not in _TYPES:
                raise InputError(f"config file: unknown key {key!r}")
            from_file[name] = value
    merged = {**from_file, **given}
    design = merged.get("sim_design")
    if design is not None:
        merged["sim_design"] = DESIGN_ALIASES.get(design, design)
    values = {}
    if merged.get("mode") == "simulate" and merged.get("sim_design") in DESIGN_DEFAULTS:
        cfg, scale = DESIGN_DEFAULTS[merged["sim_design"]]
        values.update(cfg)
        values["scale"] = scale
        values["supervision"] = DESIGNS[merged["sim_design"]]
    for name, raw in merged.items():
        values[name] = _coerce(name, raw)
    return RunConfig(**values).validate()


def read_csv(path, need_y):
    """Parse a numeric CSV with a header row; returns (X, y or None, names)."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        y_col = header.index("y") if "y" in header else None
        if need_y and y_col is None:
            raise InputError(f"{path}: missing required column 'y'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(f"{path}:{lineno}:{col} ({header[col - 1]}): "
                                     f"not a number: {cell!r}") from None
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows)
    if y_col is None:
        return data, None, header
    keep = [j for j in range(len(header)) if j != y_col]
    return data[:, keep], data[:, y_col], [header[j] for j in keep]


def cmd_screen(cfg):
    X, y, _ = read_csv(cfg.input, need_y=cfg.supervision != "none")
    if cfg.supervision == "categorical":
        if np.any(y != np.round(y)) or y.min() < 1:
            raise InputError(f"{cfg.input}: column 'y' must hold integer labels starting at 1")
        y = y.astype(np.int64)
    try:
        data = Dataset(X, y if cfg.supervision != "none" else None, cfg.supervision)
        report = run_deepfs(data, cfg.train_config(), k=cfg.top_k, scale=cfg.scale,
                            threads=cfg.threads or 0)
    except InvalidInputError as exc:
        raise InputError(str(exc)) from exc
    report.meta["input"] = cfg.input
    os.makedirs(cfg.out, exist_ok=True)
    write_report(report, os.path.join(cfg.out, "report.csv"),
                 os.path.join(cfg.out, "report.meta.txt"))
    return report


def cmd_simulate(cfg):
    spec = SimSpec(cfg.sim_design, cfg.n, cfg.p, cfg.rho, cfg.seed)
    try:
        rates, reports = run_simulation(spec, cfg.reps, cfg.train_config(), k=cfg.top_k,
                                        scale=cfg.scale, threads=cfg.threads or 1,
                                        workers=cfg.workers)
    except InvalidInputError as exc:
        raise InputError(str(exc)) from exc
    mean, se = summarize(rates)
    os.makedirs(cfg.out, exist_ok=True)
    with atomic_open(os.path.join(cfg.out, "replications.csv")) as fh:
        fh.write("replication,rho_metric,k_used,m_hat\n")
        for r, (rate, rep) in enumerate(zip(rates, reports), start=1):
            fh.write(f"{r},{rate:.17g},{rep.k_used},{rep.m_hat}\n")
    with atomic_open(os.path.join(cfg.out, "summary.csv")) as fh:
        fh.write("design,n,p,rho,reps,mean,se\n")
        fh.write(f"{spec.design},{spec.n},{spec.p},{spec.rho!r},{cfg.reps},"
                 f"{mean:.17g},{se:.17g}\n")
    write_keyvalue(os.path.join(cfg.out, "simulate.meta.txt"),
                   [(k, "" if v is None else v) for k, v in asdict(cfg).items()
                    if k not in ("threads", "workers", "out")])
    return rates, mean, se


def main(argv=None):
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        if cfg.mode == "screen":
            report = cmd_screen(cfg)
            print(f"screened {report.omega.size} features; k={report.k_used} "
                  f"m_hat={report.m_hat}; wrote {cfg.out}")
        else:
            rates, mean, se = cmd_simulate(cfg)
            print(f"{cfg.sim_design} n={cfg.n} p={cfg.p} reps={cfg.reps}: "
                  f"mean rho_metric={mean:.4f} (se {se:.4f}); wrote {cfg.out}")
    except InputError as exc:
        print(f"deepfs: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DivergenceError as exc:
        print(f"deepfs: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
