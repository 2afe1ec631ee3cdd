"""Small dense autoencoder engine in numpy.

A :class:`DenseNet` has an encoder stack, a decoder stack and an optional
head stack fed by the encoder output. The three training objectives are
the mean squared reconstruction error, and the supervised variants that add
a squared-error (continuous) or softmax cross-entropy (categorical) term on
the head, with the reconstruction term weighted by ``lam``.

Gradients are computed by hand-written backpropagation and parameters are
updated with Adam (or plain gradient descent, for diagnostics).
"""

from dataclasses import dataclass, field, replace
import io
import os

import numpy as np

from .errors import ConfigError, DimensionError, DivergenceError, InvalidLabelError

__all__ = [
    "Layer", "DenseNet", "AdamState", "TrainConfig", "ForwardResult",
    "build_network", "forward", "softmax", "loss", "loss_unsupervised",
    "loss_supervised_continuous", "loss_supervised_categorical", "backward",
    "adam_step", "train", "encode_normalized", "save_text", "load_text",
    "dumps", "loads",
]

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if name == "tanh":
        return np.tanh(z)
    if name == "linear":
        return z
    raise ConfigError(f"unknown activation {name!r}")


def _act_grad(name, z, out):
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "sigmoid":
        return out * (1.0 - out)
    if name == "tanh":
        return 1.0 - out * out
    return np.ones_like(z)


@dataclass
class Layer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "linear"

    @property
    def n_in(self):
        return self.W.shape[1]

    @property
    def n_out(self):
        return self.W.shape[0]


@dataclass
class DenseNet:
    encoder: list
    decoder: list
    head: list = field(default_factory=list)
    head_kind: str = "none"  # none | continuous | categorical

    def __post_init__(self):
        if self.head_kind not in ("none", "continuous", "categorical"):
            raise ConfigError(f"unknown head kind {self.head_kind!r}")
        if (self.head_kind == "none") != (not self.head):
            raise ConfigError("head layers and head_kind disagree")
        for stack in (self.encoder, self.decoder, self.head):
            for a, b in zip(stack, stack[1:]):
                if a.n_out != b.n_in:
                    raise DimensionError(f"layer widths do not chain: {a.n_out} -> {b.n_in}")
        if self.decoder[0].n_in != self.latent_dim:
            raise DimensionError("decoder input must equal the latent size")
        if self.decoder[-1].n_out != self.input_dim:
            raise DimensionError("decoder output must equal the input width")
        if self.head and self.head[0].n_in != self.latent_dim:
            raise DimensionError("head input must equal the latent size")
        if self.head_kind == "continuous" and self.head[-1].n_out != 1:
            raise DimensionError("continuous head must have one output")

    @property
    def input_dim(self):
        return self.encoder[0].n_in

    @property
    def latent_dim(self):
        return self.encoder[-1].n_out

    @property
    def n_classes(self):
        return self.head[-1].n_out if self.head_kind == "categorical" else None

    def stacks(self):
        return (("encoder", self.encoder), ("decoder", self.decoder), ("head", self.head))

    def parameters(self):
        """All weight and bias arrays in a fixed order (W, b per layer)."""
        out = []
        for _, stack in self.stacks():
            for layer in stack:
                out.append(layer.W)
                out.append(layer.b)
        return out

    def copy(self):
        def dup(stack):
            return [Layer(l.W.copy(), l.b.copy(), l.activation) for l in stack]
        return replace(self, encoder=dup(self.encoder), decoder=dup(self.decoder),
                       head=dup(self.head))


def _glorot(rng, n_in, n_out):
    lim = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-lim, lim, size=(n_out, n_in))


def _stack(rng, widths, hidden_act, out_act):
    layers = []
    for i, (a, b) in enumerate(zip(widths, widths[1:])):
        act = out_act if i == len(widths) - 2 else hidden_act
        layers.append(Layer(_glorot(rng, a, b), np.zeros(b), act))
    return layers


def build_network(input_dim, latent_dim, hidden=None, head_kind="none", n_classes=2,
                  activation="relu", encoder_out="linear", rng=None):
    """Encoder input->hidden...->latent, decoder mirrored, optional one-layer head.

    ``hidden`` defaults to a single layer of ``max(64, 4 * latent_dim)`` units.
    Weights are Glorot-uniform, biases zero.
    """
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    if hidden is None:
        hidden = [max(64, 4 * latent_dim)]
    hidden = list(hidden)
    enc = _stack(rng, [input_dim, *hidden, latent_dim], activation, encoder_out)
    dec = _stack(rng, [latent_dim, *hidden[::-1], input_dim], activation, "linear")
    head = []
    if head_kind == "continuous":
        head = _stack(rng, [latent_dim, 1], activation, "linear")
    elif head_kind == "categorical":
        if n_classes < 2:
            raise ConfigError("categorical head needs at least 2 classes")
        head = _stack(rng, [latent_dim, n_classes], activation, "linear")
    return DenseNet(enc, dec, head, head_kind)


@dataclass
class ForwardResult:
    encoding: np.ndarray
    reconstruction: np.ndarray
    head: object  # ndarray or None
    # Per stack: list of (input, pre-activation, output, dropout mask or None).
    trace: dict = field(default_factory=dict, repr=False)


def _run_stack(layers, x, masks=None):
    steps = []
    for i, layer in enumerate(layers):
        z = x @ layer.W.T + layer.b
        out = _act(layer.activation, z)
        mask = None if masks is None else masks[i]
        if mask is not None:
            out = out * mask
        steps.append((x, z, out, mask))
        x = out
    return x, steps


def forward(net, x, masks=None):
    """Encoding, reconstruction and head output (None without a head).

    A 1-D ``x`` is treated as a single sample and 1-D outputs are returned.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != net.input_dim:
        raise DimensionError(f"input width {arr.shape[1]} != network input {net.input_dim}")
    masks = masks or {}
    enc, t_enc = _run_stack(net.encoder, arr, masks.get("encoder"))
    rec, t_dec = _run_stack(net.decoder, enc, masks.get("decoder"))
    head, t_head = (None, [])
    if net.head:
        head, t_head = _run_stack(net.head, enc, masks.get("head"))
    res = ForwardResult(enc, rec, head, {"encoder": t_enc, "decoder": t_dec, "head": t_head})
    if single:
        res.encoding, res.reconstruction = enc[0], rec[0]
        res.head = None if head is None else head[0]
    return res


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _check_labels(y, n_classes, n):
    lab = np.asarray(y)
    if lab.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {lab.shape}")
    if not np.all(lab == np.round(lab)) or lab.min() < 1 or lab.max() > n_classes:
        raise InvalidLabelError(f"labels must be integers in 1..{n_classes}")
    return lab.astype(np.intp) - 1


def _check_target(y, n):
    t = np.asarray(y, dtype=np.float64).reshape(-1)
    if t.shape != (n,):
        raise DimensionError(f"expected {n} responses, got {t.size}")
    return t


def _recon_per_row(x, res):
    d = x - res.reconstruction
    return np.sum(d * d, axis=1)


def loss_unsupervised(net, X):
    x = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return float(np.mean(_recon_per_row(x, forward(net, x))))


def loss_supervised_continuous(net, X, y, lam):
    x = np.atleast_2d(np.asarray(X, dtype=np.float64))
    t = _check_target(y, x.shape[0])
    res = forward(net, x)
    sup = (t - res.head[:, 0]) ** 2
    return float(np.mean(sup + lam * _recon_per_row(x, res)))


def loss_supervised_categorical(net, X, y, lam):
    x = np.atleast_2d(np.asarray(X, dtype=np.float64))
    lab = _check_labels(y, net.n_classes, x.shape[0])
    res = forward(net, x)
    nll = -_log_softmax(res.head)[np.arange(x.shape[0]), lab]
    return float(np.mean(nll + lam * _recon_per_row(x, res)))


def loss(net, X, y=None, lam=1.0):
    if net.head_kind == "none":
        return loss_unsupervised(net, X)
    if net.head_kind == "continuous":
        return loss_supervised_continuous(net, X, y, lam)
    return loss_supervised_categorical(net, X, y, lam)


def _back_stack(layers, steps, grad_out, grads):
    """Backpropagate through one stack; fills ``grads`` per layer, returns d/d input."""
    g = grad_out
    for i in range(len(layers) - 1, -1, -1):
        x_in, z, out, mask = steps[i]
        if mask is not None:
            g = g * mask
            out = _act(layers[i].activation, z)
        dz = g * _act_grad(layers[i].activation, z, out)
        grads[i] = (dz.T @ x_in, dz.sum(axis=0))
        g = dz @ layers[i].W
    return g


def backward(net, X, y=None, lam=1.0, masks=None):
    """Loss and its exact gradient w.r.t. ``net.parameters()`` (same order).

    Without a head the objective is the plain reconstruction loss and ``lam``
    is ignored.
    """
    x = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = x.shape[0]
    res = forward(net, x, masks)
    resid = res.reconstruction - x
    rec_rows = np.sum(resid * resid, axis=1)
    w_rec = 1.0 if net.head_kind == "none" else lam
    total = w_rec * rec_rows

    g_enc = np.zeros_like(res.encoding)
    g_head = [None] * len(net.head)
    if net.head_kind == "continuous":
        t = _check_target(y, n)
        err = res.head[:, 0] - t
        total = total + err * err
        g_enc += _back_stack(net.head, res.trace["head"], (2.0 / n) * err[:, None], g_head)
    elif net.head_kind == "categorical":
        lab = _check_labels(y, net.n_classes, n)
        logp = _log_softmax(res.head)
        total = total - logp[np.arange(n), lab]
        d = np.exp(logp)
        d[np.arange(n), lab] -= 1.0
        g_enc += _back_stack(net.head, res.trace["head"], d / n, g_head)

    g_dec = [None] * len(net.decoder)
    g_enc += _back_stack(net.decoder, res.trace["decoder"], (2.0 * w_rec / n) * resid, g_dec)
    g_encw = [None] * len(net.encoder)
    _back_stack(net.encoder, res.trace["encoder"], g_enc, g_encw)

    grads = []
    for per_layer in (g_encw, g_dec, g_head):
        for gw, gb in per_layer:
            grads.append(gw)
            grads.append(gb)
    return float(np.mean(total)), grads


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                   0, lr, beta1, beta2, eps)


def adam_step(params, grads, state):
    """One bias-corrected Adam update, applied in place. Returns (params, state)."""
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


@dataclass
class TrainConfig:
    epochs: int = 200
    lr: float = 1e-3
    lam: float = 1.0
    batch_size: int = 64       # 0 means full batch
    seed: int = 0
    latent_dim: int = 5
    hidden: tuple = None       # None -> (max(64, 4 * latent_dim),)
    dropout: float = 0.0
    activation: str = "relu"
    optimizer: str = "adam"    # adam | sgd

    def validate(self):
        if int(self.epochs) < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if int(self.latent_dim) < 1:
            raise ConfigError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if int(self.batch_size) < 0:
            raise ConfigError(f"batch_size must be >= 0, got {self.batch_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.hidden is not None and any(int(h) < 1 for h in self.hidden):
            raise ConfigError("hidden widths must be positive")
        return self

    def streams(self):
        """Independent generators for (init, shuffle, dropout) from one seed."""
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(3)]


def _dropout_masks(net, rng, n, prob):
    keep = 1.0 - prob
    masks = {}
    for name, stack in net.stacks():
        # Never drop the outputs of a stack: encoding, reconstruction, logits.
        masks[name] = [None if i == len(stack) - 1 else
                       (rng.random((n, l.n_out)) < keep) / keep
                       for i, l in enumerate(stack)]
    return masks


def train(net, X, config, y=None, rng=None):
    """Minibatch training of ``net`` in place; returns (net, per-epoch loss trace).

    The trace holds the full-data objective evaluated after every epoch.
    ``rng`` is a pair of (shuffle, dropout) generators; by default they are
    derived from ``config.seed``.
    """
    config.validate()
    x = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = x.shape[0]
    if y is not None:
        y = np.asarray(y)
    if rng is None:
        _, shuffle_rng, drop_rng = config.streams()
    else:
        shuffle_rng, drop_rng = rng
    params = net.parameters()
    state = AdamState.for_params(params, lr=config.lr)
    bs = n if config.batch_size in (0, None) or config.batch_size >= n else int(config.batch_size)
    trace = []
    for epoch in range(1, int(config.epochs) + 1):
        order = shuffle_rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            masks = (_dropout_masks(net, drop_rng, idx.size, config.dropout)
                     if config.dropout > 0 else None)
            yb = None if y is None else y[idx]
            val, grads = backward(net, x[idx], yb, config.lam, masks)
            if not np.isfinite(val):
                raise DivergenceError(epoch, val)
            if config.optimizer == "adam":
                adam_step(params, grads, state)
            else:
                for p, g in zip(params, grads):
                    p -= config.lr * g
        epoch_loss = loss(net, x, y, config.lam)
        if not np.isfinite(epoch_loss):
            raise DivergenceError(epoch, epoch_loss)
        trace.append(epoch_loss)
    return net, np.asarray(trace)


def encode_normalized(net, X):
    """Encoder output min-max scaled per dimension over the rows of ``X``.

    A dimension that is constant across rows maps to 0.5.
    """
    enc = forward(net, np.atleast_2d(X)).encoding
    lo = enc.min(axis=0)
    span = enc.max(axis=0) - lo
    out = np.full_like(enc, 0.5)
    ok = span > 0
    out[:, ok] = (enc[:, ok] - lo[ok]) / span[ok]
    return np.clip(out, 0.0, 1.0)


# Checkpoint text format, one token group per line:
#   deepfs-densenet 1
#   head_kind <none|continuous|categorical>
#   stack <name> <n_layers>
#   layer <in> <out> <activation>
#   <out lines of W, in values each>
#   <one line of b, out values>
# Floats use 17 significant digits, which round-trips float64 exactly.

def dumps(net):
    buf = io.StringIO()
    buf.write("deepfs-densenet 1\n")
    buf.write(f"head_kind {net.head_kind}\n")
    for name, stack in net.stacks():
        buf.write(f"stack {name} {len(stack)}\n")
        for l in stack:
            buf.write(f"layer {l.n_in} {l.n_out} {l.activation}\n")
            for row in l.W:
                buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            buf.write(" ".join(f"{v:.17g}" for v in l.b) + "\n")
    return buf.getvalue()


def loads(text):
    lines = iter(text.splitlines())

    def nxt():
        return next(lines).split()

    head = nxt()
    if head != ["deepfs-densenet", "1"]:
        raise ValueError("not a deepfs network checkpoint")
    kind = nxt()
    if kind[0] != "head_kind":
        raise ValueError("missing head_kind line")
    stacks = {}
    for _ in range(3):
        tag, name, count = nxt()
        if tag != "stack":
            raise ValueError(f"expected 'stack', found {tag!r}")
        layers = []
        for _ in range(int(count)):
            _, n_in, n_out, act = nxt()
            n_in, n_out = int(n_in), int(n_out)
            W = np.array([[float(t) for t in nxt()] for _ in range(n_out)]).reshape(n_out, n_in)
            b = np.array([float(t) for t in nxt()]).reshape(n_out)
            layers.append(Layer(W, b, act))
        stacks[name] = layers
    return DenseNet(stacks["encoder"], stacks["decoder"], stacks["head"], kind[1])


def save_text(net, path):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(dumps(net))
    os.replace(tmp, path)


def load_text(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
