import numpy as np
import pytest

from esad.network import (
    DEFAULT_LAYER_SIZES,
    DenseModel,
    TrainConfig,
    TrainHistory,
    adam_init,
    adam_step,
    backward,
    bce_loss,
    forward,
    init_model,
    train,
)


def tiny_model(seed, sizes=(4, 3, 2, 1)):
    return init_model(seed, sizes, dtype=np.float64)


class TestInit:
    def test_default_architecture_parameter_count(self):
        model = init_model(0)
        assert model.layer_sizes == DEFAULT_LAYER_SIZES
        expected = 416 * 128 + 128 + 128 * 64 + 64 + 64 * 1 + 1
        assert expected == 61697
        assert model.parameter_count == expected

    def test_deterministic_under_seed(self):
        a, b = init_model(123), init_model(123)
        for wa, wb in zip(a.weights, b.weights):
            assert wa.tobytes() == wb.tobytes()

    def test_glorot_bound_first_layer(self):
        model = init_model(7)
        bound = np.sqrt(6.0 / (416 + 128))
        assert bound == pytest.approx(0.1050, abs=1e-4)
        assert np.max(np.abs(model.weights[0])) <= bound
        # the draw actually uses the full range
        assert np.max(np.abs(model.weights[0])) > 0.9 * bound

    def test_biases_zero(self):
        model = init_model(3)
        for b in model.biases:
            assert np.all(b == 0.0)


class TestForward:
    def test_zero_weights_give_half(self):
        model = tiny_model(0)
        for w in model.weights:
            w[:] = 0.0
        assert forward(model, np.zeros(4)) == pytest.approx(0.5)

    def test_deterministic_without_dropout(self):
        model = tiny_model(1)
        x = np.array([0.3, -0.2, 0.9, 0.1])
        assert forward(model, x) == forward(model, x)

    def test_matches_direct_arithmetic_oracle(self):
        model = tiny_model(5)
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = rng.normal(size=4)
            # independent per-neuron evaluation
            a = x
            for li, (w, b) in enumerate(zip(model.weights, model.biases)):
                z = np.array([sum(w[o, i] * a[i] for i in range(w.shape[1])) + b[o]
                              for o in range(w.shape[0])])
                a = np.maximum(z, 0.0) if li < 2 else z
            expected = 1.0 / (1.0 + np.exp(-a[0]))
            assert forward(model, x) == pytest.approx(expected, abs=1e-6)

    def test_batch_matches_single(self):
        model = tiny_model(2)
        rng = np.random.default_rng(1)
        xs = rng.normal(size=(8, 4))
        batch = forward(model, xs)
        singles = np.array([forward(model, x) for x in xs])
        assert np.allclose(batch, singles, atol=1e-12)

    def test_rejects_nonfinite_input(self):
        model = tiny_model(0)
        with pytest.raises(ValueError):
            forward(model, np.array([np.nan, 0, 0, 0]))

    def test_dropout_expectation(self):
        # averaging many masked passes approaches the dropout-off activations
        model = tiny_model(11, sizes=(6, 8, 4, 1))
        x = np.abs(np.random.default_rng(2).normal(size=6)) + 0.5
        rate = 0.2
        rng = np.random.default_rng(3)
        _, clean = forward(model, x, want_cache=True)
        h1_clean = np.maximum(clean["pre_acts"][0][0], 0.0)
        total = np.zeros_like(h1_clean)
        n_trials = 10000
        for _ in range(n_trials):
            _, cache = forward(model, x, dropout_rate=rate, rng=rng, want_cache=True)
            total += cache["acts"][1][0]
        mean_h1 = total / n_trials
        scale = np.maximum(np.abs(h1_clean), 1e-3)
        assert np.max(np.abs(mean_h1 - h1_clean) / scale) < 0.02


class TestBceLoss:
    def test_midpoint(self):
        assert bce_loss([0.5], [1]) == pytest.approx(np.log(2.0))
        assert bce_loss([0.5], [0]) == pytest.approx(np.log(2.0))

    def test_confident_correct(self):
        assert bce_loss([1.0 - 1e-7], [1]) == pytest.approx(1e-7, rel=1e-2)

    def test_confident_wrong(self):
        assert bce_loss([0.9], [0]) == pytest.approx(-np.log(0.1))
        assert bce_loss([0.9], [0]) == pytest.approx(2.302585093, abs=1e-9)

    def test_clamping_prevents_infinities(self):
        assert np.isfinite(bce_loss([0.0, 1.0], [1, 0]))

    def test_batch_mean(self):
        losses = [bce_loss([p], [y]) for p, y in ((0.2, 1), (0.7, 0))]
        assert bce_loss([0.2, 0.7], [1, 0]) == pytest.approx(np.mean(losses))


class TestBackward:
    def test_output_bias_gradient_is_p_minus_y(self):
        model = tiny_model(4)
        x = np.array([0.2, -0.5, 0.8, 0.3])
        prob, cache = forward(model, x, want_cache=True)
        _, grads_b = backward(model, cache, [1.0])
        assert grads_b[-1][0] == pytest.approx(prob - 1.0, abs=1e-12)

    def test_zero_input_kills_first_layer_weight_gradient(self):
        model = tiny_model(6)
        _, cache = forward(model, np.zeros(4), want_cache=True)
        grads_w, _ = backward(model, cache, [0.0])
        assert np.all(grads_w[0] == 0.0)

    def test_cache_model_mismatch_rejected(self):
        model = tiny_model(0)
        other = tiny_model(0, sizes=(5, 3, 2, 1))
        _, cache = forward(other, np.zeros(5), want_cache=True)
        with pytest.raises(ValueError):
            backward(model, cache, [1.0])

    @pytest.mark.parametrize("seed", range(6))
    def test_finite_difference_gradcheck(self, seed):
        rng = np.random.default_rng(seed)
        sizes = (int(rng.integers(2, 5)), int(rng.integers(2, 5)), int(rng.integers(2, 4)), 1)
        model = tiny_model(seed, sizes)
        # small random biases keep pre-activations away from the exact ReLU
        # kink, where finite differences and the subgradient rightly disagree
        for b in model.biases:
            b += rng.normal(0.0, 0.3, b.shape)
        x = rng.normal(size=(3, sizes[0]))
        while True:
            _, cache = forward(model, x, want_cache=True)
            clearance = min(np.abs(z).min() for z in cache["pre_acts"][:-1])
            if clearance > 5e-3:
                break
            x = rng.normal(size=(3, sizes[0]))
        y = rng.integers(0, 2, 3).astype(float)
        _, cache = forward(model, x, want_cache=True)
        grads_w, grads_b = backward(model, cache, y)

        def loss_at():
            return bce_loss(forward(model, x), y)

        h = 1e-4
        for params, grads in ((model.weights, grads_w), (model.biases, grads_b)):
            for p, g in zip(params, grads):
                it = np.nditer(p, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = p[idx]
                    p[idx] = orig + h
                    up = loss_at()
                    p[idx] = orig - h
                    down = loss_at()
                    p[idx] = orig
                    numeric = (up - down) / (2 * h)
                    denom = max(abs(numeric), abs(g[idx]), 1e-6)
                    assert abs(numeric - g[idx]) / denom < 1e-4


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        model = tiny_model(0)
        before = [w.copy() for w in model.weights]
        state = adam_init(model)
        zeros_w = [np.zeros_like(w) for w in model.weights]
        zeros_b = [np.zeros_like(b) for b in model.biases]
        state = adam_step(model, zeros_w, zeros_b, state, lr=0.1)
        assert state.t == 1
        for w, orig in zip(model.weights, before):
            assert np.array_equal(w, orig)

    def test_first_step_is_signed_learning_rate(self):
        model = DenseModel([np.array([[1.0]])], [np.array([0.0])])
        state = adam_init(model)
        g = 0.25
        adam_step(model, [np.array([[g]])], [np.array([0.0])], state, lr=0.001)
        delta = model.weights[0][0, 0] - 1.0
        assert delta == pytest.approx(-0.001 * np.sign(g), rel=1e-3)

    def test_quadratic_descent(self):
        # minimize f(w) = w^2 from w = 1; gradient is 2w
        w = np.array([[1.0]])
        model = DenseModel([w], [np.array([0.0])])
        state = adam_init(model)
        trajectory = [1.0]
        for _ in range(10):
            grad = np.array([[2.0 * model.weights[0][0, 0]]])
            adam_step(model, [grad], [np.array([0.0])], state, lr=0.1)
            trajectory.append(abs(model.weights[0][0, 0]))
        assert all(b < a for a, b in zip(trajectory, trajectory[1:]))
        assert trajectory[-1] < 1.0

    def test_nonfinite_gradient_names_tensor(self):
        model = tiny_model(0)
        state = adam_init(model)
        bad_w = [np.zeros_like(w) for w in model.weights]
        bad_w[1][0, 0] = np.inf
        zeros_b = [np.zeros_like(b) for b in model.biases]
        with pytest.raises(FloatingPointError, match="layer 1"):
            adam_step(model, bad_w, zeros_b, state, lr=0.1)


def gaussian_blobs(n=200, dim=416, separation=6.0, seed=0):
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    half = n // 2
    x = rng.normal(size=(n, dim))
    y = np.array([0] * half + [1] * (n - half), dtype=float)
    x[half:] += separation * direction
    x -= x.mean(axis=0)
    x /= np.maximum(x.std(axis=0), 1e-6)
    return x, y


def logistic_regression_accuracy(x, y, steps=400, lr=0.5):
    # independent separability oracle: plain gradient-descent logistic fit
    w = np.zeros(x.shape[1])
    b = 0.0
    for _ in range(steps):
        z = x @ w + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -30, 30)))
        grad_w = x.T @ (p - y) / y.size
        grad_b = float(np.mean(p - y))
        w -= lr * grad_w
        b -= lr * grad_b
    p = 1.0 / (1.0 + np.exp(-np.clip(x @ w + b, -30, 30)))
    return float(np.mean((p >= 0.5) == (y == 1)))


class TestTrain:
    def test_separable_blobs_reach_high_accuracy(self):
        x, y = gaussian_blobs()
        assert logistic_regression_accuracy(x, y) >= 0.99  # oracle: separable
        cfg = TrainConfig(max_epochs=20, seed=0)
        model, history, _ = train(x[:160], y[:160], x[160:], y[160:], cfg)
        assert len(history) <= 20
        assert history.column("train_acc")[-1] >= 0.99 or max(history.column("train_acc")) >= 0.99

    def test_plateau_restores_best_snapshot_bitwise(self):
        # random labels never generalize, so validation loss plateaus fast
        rng = np.random.default_rng(0)
        x = rng.normal(size=(64, 8)).astype(np.float32)
        y = rng.integers(0, 2, 64).astype(float)
        xv = rng.normal(size=(32, 8)).astype(np.float32)
        yv = rng.integers(0, 2, 32).astype(float)
        cfg = TrainConfig(max_epochs=50, seed=1, early_stopping_patience=5)
        snapshots = {}

        def keep(epoch, model, row):
            snapshots[epoch] = ([w.copy() for w in model.weights],
                                [b.copy() for b in model.biases])

        model, history, best_epoch = train(
            x, y, xv, yv, cfg, layer_sizes=(8, 6, 4, 1), epoch_callback=keep
        )
        assert len(history) < 50  # early stopping triggered
        val_losses = history.column("val_loss")
        assert best_epoch == int(np.argmin(val_losses)) + 1
        best_w, best_b = snapshots[best_epoch]
        for w, ref in zip(model.weights, best_w):
            assert w.tobytes() == ref.tobytes()
        for b, ref in zip(model.biases, best_b):
            assert b.tobytes() == ref.tobytes()

    def test_learning_rate_monotone_and_floored(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(48, 8)).astype(np.float32)
        y = rng.integers(0, 2, 48).astype(float)
        cfg = TrainConfig(max_epochs=40, seed=3, early_stopping_patience=30,
                          plateau_patience=2, min_lr=1e-5)
        _, history, _ = train(x, y, x, y, cfg, layer_sizes=(8, 6, 4, 1))
        lrs = history.column("lr")
        assert all(b <= a for a, b in zip(lrs, lrs[1:]))
        assert all(lr >= 1e-5 for lr in lrs)

    def test_early_stop_bound_on_best_epoch(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(64, 8)).astype(np.float32)
        y = rng.integers(0, 2, 64).astype(float)
        cfg = TrainConfig(max_epochs=50, seed=5)
        _, history, best_epoch = train(x, y, x[:16], y[:16], cfg, layer_sizes=(8, 6, 4, 1))
        assert len(history) <= 50
        val = history.column("val_loss")
        assert val[best_epoch - 1] <= min(val)

    def test_end_to_end_determinism(self):
        x, y = gaussian_blobs(n=80, dim=16, separation=2.0, seed=6)
        cfg = TrainConfig(max_epochs=8, seed=9)
        m1, h1, _ = train(x[:60], y[:60], x[60:], y[60:], cfg, layer_sizes=(16, 8, 4, 1))
        m2, h2, _ = train(x[:60], y[:60], x[60:], y[60:], cfg, layer_sizes=(16, 8, 4, 1))
        assert h1.to_csv() == h2.to_csv()
        for w1, w2 in zip(m1.weights, m2.weights):
            assert w1.tobytes() == w2.tobytes()

    def test_history_csv_roundtrip(self):
        hist = TrainHistory()
        hist.append(epoch=1, train_loss=0.5, train_acc=0.8, val_loss=0.6, val_acc=0.7, lr=1e-3)
        hist.append(epoch=2, train_loss=0.4, train_acc=0.9, val_loss=0.55, val_acc=0.75, lr=1e-3)
        back = TrainHistory.from_csv(hist.to_csv())
        assert back.epochs == hist.epochs

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(dropout_rate=1.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(monitor="vibes")
