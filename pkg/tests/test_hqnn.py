import numpy as np
import pytest

from hybridbench.hqnn import (
    HQNNClassifier,
    HQNNRegressor,
    Dataset,
    DatasetError,
    DenseLayer,
    Network,
    QuantumLayer,
    TrainConfig,
    TrainingError,
    build_network,
    evaluate_metrics,
    first_layer_params,
    load_csv_dataset,
    loss_and_grad,
    make_circles,
    make_housing_like,
    repeated_runs,
    split_dataset,
    train,
    train_size_sweep,
)
from hybridbench.hqnn.network import Encoding, loss_value
from hybridbench.optim import finite_diff_grad
from hybridbench.statevector import Gate, apply_gate, expectation_z, init_zero


def test_parameter_counts():
    assert build_network("classification", "classical").num_params == 161
    assert build_network("classification", "hybrid").num_params == 125
    assert first_layer_params(build_network("regression", "hybrid")) == 4
    assert first_layer_params(build_network("regression", "classical")) == 12
    with pytest.raises(ValueError):
        build_network("regression", "quantum")


def test_quantum_layer_trivial_input():
    q = QuantumLayer([Encoding(0, 0), Encoding(1, 2)], readout=(0, 1, 2, 3))
    q.theta[:] = 0
    out, _ = q.forward(np.zeros((1, 2)), grad=False)
    np.testing.assert_allclose(out, 1.0, atol=1e-15)


def test_zero_dense_layer():
    layer = DenseLayer(3, 5, True, "relu")
    layer.weight[:] = 0
    layer.bias[:] = 0
    out, _ = layer.forward(np.ones((2, 3)))
    np.testing.assert_array_equal(out, 0)


@pytest.mark.parametrize("encoding,readout", [
    ([(0, 0), (1, 2)], (0, 1, 2, 3)),
    ([(0, 0), (0, 1), (1, 2), (1, 3)], (0, 1)),
])
def test_quantum_layer_matches_statevector(encoding, readout):
    q = QuantumLayer([Encoding(*e) for e in encoding], readout, rng=np.random.default_rng(3))
    for x in ([1.0, 0.0], [0.3, 0.8]):
        state = init_zero(4)
        for f, qubit in encoding:
            state = apply_gate(state, Gate("RX", qubit, angle=np.pi * x[f]))
        for qubit in range(4):
            state = apply_gate(state, Gate("RY", qubit, angle=q.theta[qubit]))
        for c, t in ((0, 1), (1, 2), (2, 3), (3, 0)):
            state = apply_gate(state, Gate("CNOT", t, c))
        expected = [expectation_z(state, r) for r in readout]
        out, _ = q.forward(np.array([x]), grad=False)
        np.testing.assert_allclose(out[0], expected, atol=1e-12)
        assert np.all(np.abs(out) <= 1)


@pytest.mark.parametrize("task,model,loss", [
    ("classification", "classical", "bce"),
    ("classification", "hybrid", "bce"),
    ("regression", "classical", "mse"),
    ("regression", "hybrid", "mse"),
])
def test_gradient_matches_finite_differences(task, model, loss):
    rng = np.random.default_rng(5)
    for seed in range(3):
        net = build_network(task, model, seed)
        X = rng.uniform(0, 1, (10, 2))
        y = rng.integers(0, 2, 10).astype(float) if task == "classification" else rng.uniform(0, 1, 10)
        theta = net.get_flat()
        _, grad = loss_and_grad(net, X, y, loss)

        def f(t):
            net.set_flat(t)
            return loss_value(net, X, y, loss)

        fd = finite_diff_grad(f, theta, 1e-5)
        net.set_flat(theta)
        assert np.linalg.norm(grad - fd) <= 1e-5 * np.linalg.norm(fd)


def test_zero_loss_zero_gradient():
    net = build_network("regression", "hybrid", 1)
    X = np.random.default_rng(0).uniform(0, 1, (6, 2))
    loss, grad = loss_and_grad(net, X, net.forward(X), "mse")
    assert loss == 0
    np.testing.assert_array_equal(grad, 0)


def test_bce_preactivation_gradient():
    net = build_network("classification", "classical", 2)
    x, y = np.array([[0.2, 0.9]]), np.array([1.0])
    p = net.forward(x)[0]
    _, grad = loss_and_grad(net, x, y, "bce")
    # last entry is the output bias, whose gradient is dL/dz
    assert grad[-1] == pytest.approx(p - y[0], abs=1e-14)


def constant_net(task, value):
    net = build_network(task, "classical")
    net.set_flat(np.zeros(net.num_params))
    net.layers[-1].bias[:] = value
    return net


def test_metrics():
    ds = Dataset(np.zeros((4, 2)), np.array([0.0, 1.0, 1.0, 0.0]))
    assert evaluate_metrics(constant_net("classification", 0.0), ds, "bce") == pytest.approx(np.log(2))
    assert evaluate_metrics(constant_net("classification", 5.0), Dataset(np.zeros((3, 2)), np.ones(3)), "accuracy") == 1.0
    y = np.array([0.1, 0.4, 0.4, 0.9])
    reg = Dataset(np.zeros((4, 2)), y)
    assert evaluate_metrics(constant_net("regression", y.mean()), reg, "mse") == pytest.approx(y.var())
    assert evaluate_metrics(constant_net("regression", y.mean()), reg, "mae") == pytest.approx(np.abs(y - y.mean()).mean())
    with pytest.raises(ValueError):
        evaluate_metrics(constant_net("regression", 0.0), reg, "accuracy")


def test_circles():
    ds = make_circles(1000, seed=0)
    assert ds.y.sum() == 500
    assert ds.X.min() == 0 and ds.X.max() == 1
    raw = make_circles(200, noise=0.0, factor=0.5, seed=1, normalize=False)
    radius = np.linalg.norm(raw.X, axis=1)
    np.testing.assert_allclose(radius[raw.y == 1], 0.5)
    np.testing.assert_allclose(radius[raw.y == 0], 1.0)
    tr, te = split_dataset(ds, 0.3, seed=0)
    assert (len(tr), len(te)) == (300, 700)
    with pytest.raises(ValueError):
        make_circles(100, factor=1.5)


def test_split_keeps_test_set_fixed():
    ds = make_housing_like(100, seed=0)
    _, te_a = split_dataset(ds, 0.8, seed=3, train_size=10)
    tr_b, te_b = split_dataset(ds, 0.8, seed=3)
    np.testing.assert_array_equal(te_a.X, te_b.X)
    assert len(tr_b) == 80
    with pytest.raises(ValueError):
        split_dataset(ds, 0.8, seed=3, train_size=81)


def write(path, text):
    path.write_text(text)
    return path


def test_csv_loader(tmp_path):
    p = write(tmp_path / "toy.csv", "a,b,c,t\n1,10,5,0.1\n2,30,5,0.3\n3,20,5,0.2\n")
    ds = load_csv_dataset(p, ["a", "b", "c"], "t")
    np.testing.assert_allclose(ds.X.min(axis=0), [0, 0, 0])
    np.testing.assert_allclose(ds.X.max(axis=0), [1, 1, 0])  # constant column c maps to zeros
    np.testing.assert_allclose(ds.scalers["target"].inverse(ds.y[:, None])[:, 0], [0.1, 0.3, 0.2])
    z = load_csv_dataset(p, ["a"], "t", normalization="zscore")
    assert z.X.mean() == pytest.approx(0, abs=1e-15)

    with pytest.raises(DatasetError, match="'price'"):
        load_csv_dataset(p, ["a"], "price")
    bad = write(tmp_path / "bad.csv", "a,t\n1,2\nx,3\n")
    with pytest.raises(DatasetError, match="row 2"):
        load_csv_dataset(bad, ["a"], "t")
    with pytest.raises(DatasetError):
        load_csv_dataset(tmp_path / "missing.csv", ["a"], "t")


def test_train_history_and_determinism():
    ds = make_circles(200, seed=1)
    cfg = TrainConfig.classification(epochs=4, batch_size=32, seed=3)
    _, h1 = train(build_network("classification", "hybrid", 3), ds, cfg)
    _, h2 = train(build_network("classification", "hybrid", 3), ds, cfg)
    assert len(h1.train_loss) == len(h1.test_metric) == 4
    assert h1.train_loss == h2.train_loss and h1.test_metric == h2.test_metric


def test_train_loss_drops_early():
    ds = make_circles(1000, seed=0)
    drops = []
    for seed in range(10):
        cfg = TrainConfig.classification(epochs=5, seed=seed)
        _, h = train(build_network("classification", "hybrid", seed), ds, cfg)
        drops.append(h.train_loss[4] - h.train_loss[0])
    assert np.median(drops) < 0


def test_history_csv(tmp_path):
    ds = make_housing_like(60, seed=0)
    _, h = train(build_network("regression", "classical"), ds, TrainConfig.regression(epochs=3))
    h.to_csv(tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "epoch,train_loss,test_metric"


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_aborts():
    ds = make_housing_like(40, seed=0)
    net = build_network("regression", "classical")
    net.layers[-1].bias[:] = np.inf
    with pytest.raises(TrainingError):
        train(net, ds, TrainConfig.regression(epochs=1))


@pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(epochs=0), dict(loss="hinge"), dict(train_fraction=0.5)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


def test_repeated_runs_and_sweep():
    ds = make_housing_like(100, seed=0)
    cfg = TrainConfig.regression(epochs=2, batch_size=16)
    summary = repeated_runs(ds, "regression", "hybrid", cfg, repeats=3, seed=5, extra_metrics=("mse",))
    assert len(summary.per_repeat) == 3
    assert summary.mean == pytest.approx(np.mean(summary.per_repeat))
    assert len(summary.extra["mse"]["per_repeat"]) == 3
    sweep = train_size_sweep(ds, "regression", "classical", cfg, [40, 10, 20], repeats=2)
    assert [s.train_size for s in sweep] == [10, 20, 40]


def test_checkpoint_round_trip(tmp_path):
    net = build_network("classification", "hybrid", 4)
    net.save(tmp_path / "net.json")
    back = Network.load(tmp_path / "net.json")
    X = np.random.default_rng(0).uniform(0, 1, (5, 2))
    np.testing.assert_array_equal(back.forward(X), net.forward(X))


def test_estimators():
    ds = make_circles(200, seed=0, normalize=False)
    clf = HQNNClassifier(epochs=30, random_state=0).fit(ds.X * 10, np.where(ds.y > 0, "in", "out"))
    assert set(clf.predict(ds.X[:20] * 10)) <= {"in", "out"}
    assert clf.score(ds.X * 10, np.where(ds.y > 0, "in", "out")) > 0.8
    proba = clf.predict_proba(ds.X[:5] * 10)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)

    h = make_housing_like(150, seed=0, normalize=False)
    reg = HQNNRegressor(model="classical", epochs=40).fit(h.X, h.y)
    assert reg.predict(h.X).shape == (150,)
    assert reg.score(h.X, h.y) > 0.3
    with pytest.raises(ValueError):
        HQNNClassifier().fit(np.zeros((4, 3)), [0, 1, 0, 1])
