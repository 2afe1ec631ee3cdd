import math

import numpy as np
import pytest

from deepfs.errors import ConfigError, DimensionError, DivergenceError, InvalidLabelError
from deepfs.neuralnet import (AdamState, DenseNet, Layer, TrainConfig, adam_step, backward,
                              build_network, dumps, encode_normalized, forward, load_text, loads,
                              loss, loss_supervised_categorical, loss_supervised_continuous,
                              loss_unsupervised, save_text, softmax, train)

from oracles import finite_difference_grad, naive_forward


def identity_net(p):
    eye = np.eye(p)
    return DenseNet([Layer(eye.copy(), np.zeros(p))], [Layer(eye.copy(), np.zeros(p))])


def small_net(kind, act="relu", seed=0, classes=3):
    rng = np.random.default_rng(seed)
    net = build_network(6, 2, hidden=[4], head_kind=kind, n_classes=classes, activation=act,
                        rng=rng)
    for p in net.parameters():
        p[...] = rng.normal(0, 0.1, size=p.shape) if p.ndim == 2 else rng.normal(0, 0.1, p.shape)
    return net


def _data(kind, n=5, seed=1, classes=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 6))
    y = None
    if kind == "continuous":
        y = rng.normal(size=n)
    elif kind == "categorical":
        y = rng.integers(1, classes + 1, size=n)
    return X, y


def test_identity_network_reconstructs():
    x = np.array([[1.5, -2.0, 0.25]])
    res = forward(identity_net(3), x)
    np.testing.assert_array_equal(res.reconstruction, x)
    assert res.head is None


def test_relu_activation():
    net = DenseNet([Layer(np.eye(2), np.zeros(2), "relu")], [Layer(np.eye(2), np.zeros(2))])
    np.testing.assert_array_equal(forward(net, [-1.0, 2.0]).encoding, [0.0, 2.0])


def test_batch_forward_equals_rows_and_naive():
    net = small_net("categorical", act="tanh")
    X, _ = _data("none", n=7)
    res = forward(net, X)
    for i in range(7):
        row = forward(net, X[i])
        np.testing.assert_allclose(row.reconstruction, res.reconstruction[i], rtol=1e-14)
        np.testing.assert_allclose(row.head, res.head[i], rtol=1e-14)
        enc = naive_forward([(l.W, l.b, l.activation) for l in net.encoder], X[i])
        np.testing.assert_allclose(enc, res.encoding[i], rtol=1e-12)


def test_forward_width_mismatch():
    with pytest.raises(DimensionError):
        forward(small_net("none"), np.zeros((2, 5)))


def test_layer_chaining_enforced():
    with pytest.raises(DimensionError):
        DenseNet([Layer(np.zeros((3, 4)), np.zeros(3)), Layer(np.zeros((2, 4)), np.zeros(2))],
                 [Layer(np.zeros((4, 2)), np.zeros(4))])


def test_unsupervised_loss_cases():
    X, _ = _data("none")
    assert loss_unsupervised(identity_net(6), X) == 0.0
    zero = identity_net(6)
    zero.decoder[0].W[...] = 0
    assert loss_unsupervised(zero, X) == pytest.approx(np.sum(X ** 2) / 5, rel=1e-14)


def test_unsupervised_loss_matches_naive():
    net = small_net("none", act="sigmoid")
    rng = np.random.default_rng(9)
    X = rng.normal(size=(5, 6))
    layers = [(l.W, l.b, l.activation) for l in net.encoder + net.decoder]
    naive = sum(sum((a - b) ** 2 for a, b in zip(x, naive_forward(layers, x))) for x in X) / 5
    assert loss_unsupervised(net, X) == pytest.approx(naive, rel=1e-12)


def test_continuous_loss_cases():
    net = small_net("continuous")
    X, y = _data("continuous")
    res = forward(net, X)
    assert loss_supervised_continuous(net, X, y, 0.0) == pytest.approx(
        np.mean((y - res.head[:, 0]) ** 2), rel=1e-14)
    naive = np.mean([(y[i] - res.head[i, 0]) ** 2
                     + 0.3 * np.sum((X[i] - res.reconstruction[i]) ** 2) for i in range(5)])
    assert loss_supervised_continuous(net, X, y, 0.3) == pytest.approx(naive, rel=1e-12)


def test_continuous_loss_perfect_fit_is_zero():
    net = identity_net(2)
    net.head = [Layer(np.array([[1.0, 0.0]]), np.zeros(1))]
    net.head_kind = "continuous"
    X = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert loss_supervised_continuous(net, X, X[:, 0], 2.0) == 0.0


def test_categorical_uniform_logits():
    net = identity_net(2)
    net.head = [Layer(np.zeros((2, 2)), np.zeros(2))]
    net.head_kind = "categorical"
    X = np.array([[0.3, -0.2], [1.0, 4.0]])
    assert loss_supervised_categorical(net, X, [1, 2], 0.0) == pytest.approx(math.log(2), abs=1e-15)


def test_categorical_confident_logits():
    net = identity_net(2)
    net.head = [Layer(np.zeros((2, 2)), np.array([50.0, 0.0]))]
    net.head_kind = "categorical"
    X = np.array([[0.3, -0.2]])
    lam = 0.5
    recon = lam * loss_unsupervised(net, X)
    assert loss_supervised_categorical(net, X, [1], lam) < 1e-20 + recon


def test_categorical_loss_matches_naive_and_labels_checked():
    net = small_net("categorical")
    X, y = _data("categorical")
    res = forward(net, X)
    naive = 0.0
    for i in range(5):
        z = res.head[i]
        naive += -(z[y[i] - 1] - math.log(sum(math.exp(v) for v in z)))
        naive += 0.7 * np.sum((X[i] - res.reconstruction[i]) ** 2)
    assert loss_supervised_categorical(net, X, y, 0.7) == pytest.approx(naive / 5, rel=1e-12)
    with pytest.raises(InvalidLabelError):
        loss_supervised_categorical(net, X, [1, 2, 3, 4, 1], 0.7)
    with pytest.raises(InvalidLabelError):
        loss_supervised_categorical(net, X, [0, 1, 2, 1, 1], 0.7)


def test_softmax_rows():
    rng = np.random.default_rng(0)
    z = rng.normal(scale=30, size=(50, 4))
    s = softmax(z)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(s >= 0)


def _grad_close(analytic, numeric, rel=1e-5, abs_floor=1e-9):
    for a, f in zip(analytic, numeric):
        err = np.abs(a - f)
        ok = (err <= rel * np.maximum(np.abs(a), np.abs(f))) | (err <= abs_floor)
        if not ok.all():
            return False
    return True


@pytest.mark.parametrize("kind", ["none", "continuous", "categorical"])
@pytest.mark.parametrize("act", ["relu", "tanh", "sigmoid"])
def test_backward_matches_finite_differences(kind, act):
    net = small_net(kind, act=act, seed=3)
    X, y = _data(kind, n=6, seed=4)
    lam = 0.8
    val, grads = backward(net, X, y, lam)
    assert val == pytest.approx(loss(net, X, y, lam), rel=1e-14)
    fd = finite_difference_grad(lambda: loss(net, X, y, lam), net.parameters())
    assert _grad_close(grads, fd)


def test_backward_with_dropout_masks_matches_finite_differences():
    net = small_net("continuous", act="tanh", seed=5)
    X, y = _data("continuous", n=6)
    rng = np.random.default_rng(0)
    masks = {"encoder": [(rng.random((6, 4)) < 0.5) / 0.5, None],
             "decoder": [(rng.random((6, 4)) < 0.5) / 0.5, None], "head": [None]}

    def f():
        res = forward(net, X, masks)
        return float(np.mean((y - res.head[:, 0]) ** 2
                             + 0.5 * np.sum((X - res.reconstruction) ** 2, axis=1)))

    _, grads = backward(net, X, y, 0.5, masks)
    assert _grad_close(grads, finite_difference_grad(f, net.parameters()))


def test_identity_decoder_gradient_is_zero():
    net = identity_net(4)
    X, _ = _data("none")
    _, grads = backward(net, X[:, :4])
    assert not grads[2].any() and not grads[3].any()


@pytest.mark.parametrize("kind", ["continuous", "categorical"])
def test_gradient_linear_in_lambda(kind):
    net = small_net(kind)
    X, y = _data(kind)
    _, g0 = backward(net, X, y, 0.0)
    _, g1 = backward(net, X, y, 1.0)
    _, g = backward(net, X, y, 2.5)
    for a, b, c in zip(g0, g1, g):
        np.testing.assert_allclose(c, a + 2.5 * (b - a), rtol=1e-10, atol=1e-14)
    l0, l1, l = (loss(net, X, y, lam) for lam in (0.0, 1.0, 2.5))
    assert l == pytest.approx(l0 + 2.5 * (l1 - l0), rel=1e-12)


def test_adam_zero_gradient():
    p = [np.array([1.0, -2.0])]
    st = AdamState.for_params(p)
    adam_step(p, [np.zeros(2)], st)
    assert p[0].tolist() == [1.0, -2.0] and st.t == 1


def test_adam_first_step_is_sign_times_lr():
    p = [np.array([1.0, -2.0, 0.5])]
    st = AdamState.for_params(p, lr=0.01)
    g = np.array([3.0, -0.2, 1e-3])
    adam_step(p, [g], st)
    step = np.array([1.0, -2.0, 0.5]) - p[0]
    np.testing.assert_allclose(step, 0.01 * np.sign(g) * np.abs(g) / (np.abs(g) + 1e-8),
                               rtol=1e-12)


def test_train_deterministic_and_converges():
    rng = np.random.default_rng(11)
    latent = rng.normal(size=(32, 2))
    X = latent @ rng.normal(size=(2, 8)) + 0.05 * rng.normal(size=(32, 8))
    cfg = TrainConfig(epochs=500, latent_dim=2, batch_size=16, lr=3e-3, seed=4)
    net_a = build_network(8, 2, rng=np.random.default_rng(1))
    start = loss(net_a, X)
    net_a, trace_a = train(net_a, X, cfg)
    assert trace_a.size == 500
    assert trace_a[-1] < 0.2 * start
    net_b, trace_b = train(build_network(8, 2, rng=np.random.default_rng(1)), X, cfg)
    assert trace_a.tobytes() == trace_b.tobytes()
    assert all(a.tobytes() == b.tobytes() for a, b in zip(net_a.parameters(), net_b.parameters()))


def test_full_batch_gradient_descent_trace_non_increasing():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 5))
    net = build_network(5, 2, hidden=[3], activation="linear", rng=np.random.default_rng(0))
    cfg = TrainConfig(epochs=200, lr=1e-3, batch_size=0, optimizer="sgd", latent_dim=2)
    _, trace = train(net, X, cfg)
    assert np.all(np.diff(trace) <= 0)


def test_train_with_dropout_runs_and_is_seeded():
    X, _ = _data("none", n=20)
    cfg = TrainConfig(epochs=5, latent_dim=2, dropout=0.3, seed=1)
    _, a = train(build_network(6, 2, rng=0), X, cfg)
    _, b = train(build_network(6, 2, rng=0), X, cfg)
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("bad", [dict(epochs=0), dict(lr=0.0), dict(lam=-1.0), dict(latent_dim=0),
                                 dict(dropout=1.0), dict(optimizer="rmsprop")])
def test_invalid_config(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad).validate()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported_with_epoch():
    X, _ = _data("none", n=10)
    cfg = TrainConfig(epochs=3, lr=1e200, optimizer="sgd", batch_size=0, latent_dim=2)
    with pytest.raises(DivergenceError) as exc:
        train(build_network(6, 2, rng=0), X * 1e100, cfg)
    assert exc.value.epoch >= 1


def test_encode_normalized():
    net = DenseNet([Layer(np.array([[1.0, 0.0], [0.0, 0.0]]), np.zeros(2))],
                   [Layer(np.zeros((2, 2)), np.zeros(2))])
    X = np.array([[1.0, 9.0], [3.0, 8.0], [5.0, 7.0]])
    out = encode_normalized(net, X)
    np.testing.assert_allclose(out[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(out[:, 1], [0.5, 0.5, 0.5])
    rng = np.random.default_rng(0)
    out = encode_normalized(small_net("none"), rng.normal(size=(30, 6)))
    assert out.min() >= 0 and out.max() <= 1


@pytest.mark.parametrize("kind", ["none", "continuous", "categorical"])
def test_checkpoint_round_trip(kind, tmp_path):
    net = small_net(kind, act="tanh")
    rng = np.random.default_rng(0)
    for p in net.parameters():
        p[...] = rng.normal(size=p.shape) / 3.0
    path = tmp_path / "net.txt"
    save_text(net, path)
    back = load_text(path)
    assert back.head_kind == kind
    for a, b in zip(net.parameters(), back.parameters()):
        assert a.tobytes() == b.tobytes()
    assert [l.activation for l in back.encoder] == [l.activation for l in net.encoder]
    assert dumps(loads(dumps(net))) == dumps(net)
