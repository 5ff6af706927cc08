"""Tests for the GRU regression head: forward, backward, Adam, training, metrics."""

import json

import numpy as np
import pytest

from schubert.chunks import ChunkEmbeddings
from schubert.errors import DegenerateLabels, FormatError, InvalidInput
from schubert.regressor import (
    AdamState,
    GruParams,
    Metrics,
    TrainConfig,
    adam_step,
    backward,
    evaluate,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history,
)


def zero_params(dim_in: int, hidden: int) -> GruParams:
    return init_params(dim_in, hidden, seed=0).zeros_like()


def constant_params(dim_in: int, hidden: int, value: float) -> GruParams:
    base = zero_params(dim_in, hidden)
    return GruParams(**{name: arr + value for name, arr in base.tensors()})


def random_dataset(rng, count, dim, max_chunks=5, label_fn=None):
    items = []
    for i in range(count):
        vectors = rng.normal(size=(int(rng.integers(1, max_chunks + 1)), dim))
        vectors = vectors.astype(np.float32)
        label = label_fn(vectors) if label_fn else float(rng.normal())
        items.append(ChunkEmbeddings(doc_id=f"d{i:04d}", vectors=vectors, label=label))
    return items


class TestInitParams:
    def test_biases_zero(self):
        params = init_params(16, 8, seed=123)
        assert np.all(params.b_z == 0)
        assert np.all(params.b_r == 0)
        assert np.all(params.b_h == 0)
        assert params.b_out == 0

    def test_deterministic(self):
        a = init_params(16, 8, seed=9)
        b = init_params(16, 8, seed=9)
        for (_, ta), (_, tb) in zip(a.tensors(), b.tensors()):
            np.testing.assert_array_equal(ta, tb)

    def test_different_seeds_differ(self):
        a = init_params(16, 8, seed=1)
        b = init_params(16, 8, seed=2)
        assert not np.array_equal(a.w_z, b.w_z)

    def test_uniform_bounds_at_paper_dims(self):
        params = init_params(768, 512, seed=4)
        bound = np.sqrt(6.0 / (768 + 512))
        for w in (params.w_z, params.w_r, params.w_h):
            assert np.all(np.abs(w) <= bound)
        assert np.all(np.abs(params.w_out) <= np.sqrt(6.0 / (512 + 1)))

    def test_recurrent_std(self):
        params = init_params(8, 256, seed=5)
        expected_std = np.sqrt(2.0 / 512)
        assert np.std(params.u_z) == pytest.approx(expected_std, rel=0.1)

    def test_bad_dims(self):
        with pytest.raises(InvalidInput):
            init_params(0, 8, seed=0)


class TestForward:
    def test_zero_params_predict_zero(self):
        params = zero_params(4, 3)
        rng = np.random.default_rng(0)
        pred, _ = forward(params, rng.normal(size=(5, 4)))
        assert pred == 0.0

    def test_eval_equals_train_without_dropout(self):
        params = init_params(6, 5, seed=3)
        x = np.random.default_rng(1).normal(size=(4, 6))
        eval_pred, _ = forward(params, x, mode="eval")
        train_pred, _ = forward(
            params, x, mode="train", dropout_p=0.0, rng=np.random.default_rng(0)
        )
        assert eval_pred == train_pred

    def test_tiny_instance_matches_high_precision_oracle(self):
        # Independent step-by-step evaluation of the recurrence at 50 digits.
        # With every parameter equal to 0.1 and h0 = 0, all hidden components
        # stay equal, so each gate collapses to one scalar per step.
        import mpmath

        mpmath.mp.dps = 50

        def sigma(v):
            return 1 / (1 + mpmath.exp(-v))

        w = mpmath.mpf("0.1")
        h = mpmath.mpf(0)  # shared value of both hidden components
        for x in ([1, 0], [0, 1]):
            sum_x = mpmath.mpf(sum(x))
            z = sigma(w * (sum_x + 2 * h) + w)
            r = sigma(w * (sum_x + 2 * h) + w)
            h_tilde = mpmath.tanh(w * (sum_x + 2 * r * h) + w)
            h = (1 - z) * h + z * h_tilde
        expected = float(w * 2 * h + w)

        params = constant_params(2, 2, 0.1)
        pred, _ = forward(params, np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert pred == pytest.approx(expected, abs=1e-12)

    def test_empty_input_rejected(self):
        params = init_params(4, 3, seed=0)
        with pytest.raises(InvalidInput):
            forward(params, np.empty((0, 4)))

    def test_dim_mismatch_rejected(self):
        params = init_params(4, 3, seed=0)
        with pytest.raises(InvalidInput):
            forward(params, np.ones((2, 5)))

    def test_hidden_state_bounded(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            params = init_params(5, 6, seed=int(rng.integers(1 << 31)))
            x = 3.0 * rng.normal(size=(int(rng.integers(1, 8)), 5))
            _, cache = forward(params, x)
            assert np.all(np.abs(cache.hs[1:]) < 1.0)

    def test_dropout_expectation(self):
        # Inverted dropout is unbiased: the mean over many masks recovers h_T.
        params = init_params(4, 8, seed=11)
        x = np.random.default_rng(2).normal(size=(3, 4))
        _, ref_cache = forward(params, x)
        h_final = ref_cache.hs[-1]

        rng = np.random.default_rng(1234)
        n = 10_000
        samples = np.empty((n, 8))
        for i in range(n):
            _, cache = forward(params, x, mode="train", dropout_p=0.3, rng=rng)
            samples[i] = cache.drop * cache.hs[-1]
        mean = samples.mean(axis=0)
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(n)
        assert np.all(np.abs(mean - h_final) <= 3.0 * stderr + 1e-12)

    def test_unknown_mode_rejected(self):
        params = init_params(2, 2, seed=0)
        with pytest.raises(InvalidInput):
            forward(params, np.ones((1, 2)), mode="test")


def loss_mae(params, xs, labels):
    preds = [forward(params, x)[0] for x in xs]
    return float(np.mean([abs(y - p) for y, p in zip(labels, preds)]))


def finite_difference_grads(params, xs, labels, step=1e-5):
    """Central differences of the batch-mean MAE, parameter by parameter."""
    grads = params.zeros_like()
    for name, tensor in params.tensors():
        grad = getattr(grads, name)
        it = np.nditer(tensor, flags=["multi_index"], op_flags=["readwrite"])
        for _ in it:
            idx = it.multi_index
            original = tensor[idx]
            tensor[idx] = original + step
            up = loss_mae(params, xs, labels)
            tensor[idx] = original - step
            down = loss_mae(params, xs, labels)
            tensor[idx] = original
            grad[idx] = (up - down) / (2 * step)
    return grads


def assert_grads_close(analytic, numeric, rel_tol=1e-4, abs_floor=1e-9):
    for (name, a), (_, n) in zip(analytic.tensors(), numeric.tensors()):
        a = np.atleast_1d(a)
        n = np.atleast_1d(n)
        denom = np.maximum(np.abs(a), np.abs(n))
        diff = np.abs(a - n)
        ok = (denom < 1e-12) | (diff / np.maximum(denom, 1e-300) < rel_tol) | (diff < abs_floor)
        assert np.all(ok), f"{name}: max rel err {np.max(diff / np.maximum(denom, 1e-300))}"


class TestBackward:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            dim_in = int(rng.integers(1, 9))
            hidden = int(rng.integers(1, 9))
            params = init_params(dim_in, hidden, seed=int(rng.integers(1 << 31)))
            batch = int(rng.integers(1, 4))
            xs = [
                rng.normal(size=(int(rng.integers(1, 5)), dim_in)) for _ in range(batch)
            ]
            labels = list(rng.normal(size=batch))
            caches = [forward(params, x, mode="train", dropout_p=0.0)[1] for x in xs]
            analytic = backward(params, labels, caches)
            numeric = finite_difference_grads(params, xs, labels)
            assert_grads_close(analytic, numeric)

    def test_zero_residual_means_zero_gradients(self):
        params = init_params(3, 4, seed=7)
        x = np.random.default_rng(3).normal(size=(2, 3))
        pred, cache = forward(params, x)
        grads = backward(params, [pred], [cache])
        for _, g in grads.tensors():
            assert np.all(g == 0.0)

    def test_duplicated_batch_leaves_gradients_unchanged(self):
        params = init_params(4, 4, seed=8)
        rng = np.random.default_rng(4)
        xs = [rng.normal(size=(3, 4)), rng.normal(size=(1, 4))]
        labels = [0.5, -1.0]
        caches = [forward(params, x, mode="train", dropout_p=0.0)[1] for x in xs]
        single = backward(params, labels, caches)
        doubled = backward(params, labels * 2, caches * 2)
        for (_, a), (_, b) in zip(single.tensors(), doubled.tensors()):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_empty_batch_rejected(self):
        params = init_params(2, 2, seed=0)
        with pytest.raises(InvalidInput):
            backward(params, [], [])


def reference_adam_scalar(grads, lr=0.001, b1=0.9, b2=0.999, eps=1e-8, theta=0.0):
    """Independent scalar Adam, following the standard update rule."""
    m = v = 0.0
    trajectory = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
        trajectory.append(theta)
    return trajectory


class TestAdam:
    def test_zero_gradient_no_change(self):
        params = init_params(3, 3, seed=1)
        before = params.copy()
        state = AdamState.zeros(params)
        adam_step(params, params.zeros_like(), state, t=1, config=TrainConfig())
        for (_, a), (_, b) in zip(params.tensors(), before.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_first_step_is_signed_learning_rate(self):
        config = TrainConfig(learning_rate=0.01)
        params = init_params(4, 4, seed=2)
        before = params.copy()
        rng = np.random.default_rng(5)
        grads = GruParams(
            **{name: rng.normal(size=arr.shape) + 0.5 for name, arr in params.tensors()}
        )
        state = AdamState.zeros(params)
        adam_step(params, grads, state, t=1, config=config)
        for (name, after), (_, orig) in zip(params.tensors(), before.tensors()):
            g = getattr(grads, name)
            update = after - orig
            expected = -config.learning_rate * np.sign(g)
            tolerance = np.abs(config.learning_rate * config.eps / np.abs(g)) + 1e-15
            assert np.all(np.abs(update - expected) <= tolerance)

    def test_scalar_quadratic_matches_reference(self):
        # Minimize 0.5*(theta - 3)^2 through the b_out parameter only.
        config = TrainConfig(learning_rate=0.1)
        params = zero_params(1, 1)
        state = AdamState.zeros(params)
        thetas = []
        grad_sequence = []
        for t in range(1, 11):
            g = float(params.b_out) - 3.0
            grad_sequence.append(g)
            grads = params.zeros_like()
            grads.b_out += g
            adam_step(params, grads, state, t=t, config=config)
            thetas.append(float(params.b_out))
        expected = reference_adam_scalar(grad_sequence, lr=0.1)
        np.testing.assert_allclose(thetas, expected, atol=1e-12)

    def test_step_counter_must_be_positive(self):
        params = init_params(2, 2, seed=0)
        with pytest.raises(InvalidInput):
            adam_step(params, params.zeros_like(), AdamState.zeros(params), 0, TrainConfig())


class TestTrainConfigDefaults:
    def test_defaults_are_standard_settings(self):
        config = TrainConfig()
        assert config.learning_rate == 0.001
        assert config.epochs == 30
        assert config.batch_size == 12
        assert config.dropout_p == 0.3
        assert config.hidden == 512
        assert (config.beta1, config.beta2, config.eps) == (0.9, 0.999, 1e-8)


class TestTrain:
    def test_zero_epochs_returns_initialization(self):
        rng = np.random.default_rng(6)
        items = random_dataset(rng, 8, dim=6)
        config = TrainConfig(epochs=0, hidden=4, seed=99)
        result = train(items, config)
        expected = init_params(6, 4, seed=99)
        for (_, a), (_, b) in zip(result.params.tensors(), expected.tensors()):
            np.testing.assert_array_equal(a, b)
        assert result.history == []

    def test_same_seed_identical_history_and_params(self):
        rng = np.random.default_rng(7)
        items = random_dataset(rng, 12, dim=5)
        config = TrainConfig(epochs=3, hidden=6, batch_size=4, seed=5)
        first = train(items, config)
        second = train(items, config)
        assert first.history == second.history
        for (_, a), (_, b) in zip(first.params.tensors(), second.params.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_loss_decreases_on_learnable_target(self):
        rng = np.random.default_rng(8)
        items = random_dataset(
            rng, 24, dim=4, label_fn=lambda v: float(v[:, 0].mean())
        )
        config = TrainConfig(
            epochs=40, hidden=8, batch_size=8, dropout_p=0.0, seed=3
        )
        result = train(items, config)
        assert result.history[-1]["train_mae"] < result.history[0]["train_mae"]

    def test_validation_metrics_and_best_params(self):
        rng = np.random.default_rng(9)
        items = random_dataset(rng, 16, dim=4, label_fn=lambda v: float(v[:, 0].mean()))
        val = random_dataset(rng, 6, dim=4, label_fn=lambda v: float(v[:, 0].mean()))
        config = TrainConfig(epochs=5, hidden=4, batch_size=4, dropout_p=0.0, seed=1)
        result = train(items, config, val_items=val)
        assert all(row["val_mae"] is not None for row in result.history)
        best_epoch_mae = min(row["val_mae"] for row in result.history)
        val_y = np.array([item.label for item in val])
        best_preds = np.array([forward(result.best_params, item)[0] for item in val])
        assert float(np.mean(np.abs(val_y - best_preds))) == pytest.approx(best_epoch_mae)

    def test_mixed_dims_rejected(self):
        a = ChunkEmbeddings("a", np.ones((1, 3), dtype=np.float32), label=0.0)
        b = ChunkEmbeddings("b", np.ones((1, 4), dtype=np.float32), label=0.0)
        with pytest.raises(InvalidInput):
            train([a, b], TrainConfig(epochs=1, hidden=2))

    def test_missing_labels_rejected(self):
        a = ChunkEmbeddings("a", np.ones((1, 3), dtype=np.float32), label=None)
        with pytest.raises(InvalidInput):
            train([a], TrainConfig(epochs=1, hidden=2))

    def test_empty_dataset_rejected(self):
        with pytest.raises(InvalidInput):
            train([], TrainConfig())


class TestEvaluate:
    def test_perfect_predictor(self):
        params = init_params(3, 4, seed=12)
        rng = np.random.default_rng(13)
        items = random_dataset(rng, 10, dim=3)
        for item in items:
            item.label = forward(params, item)[0]
        metrics = evaluate(params, items)
        assert metrics.mse == pytest.approx(0.0, abs=1e-24)
        assert metrics.mae == pytest.approx(0.0, abs=1e-12)
        assert metrics.r2 == pytest.approx(1.0, abs=1e-12)
        assert metrics.n == 10

    def test_mean_predictor_r2_zero(self):
        rng = np.random.default_rng(14)
        items = random_dataset(rng, 9, dim=2)
        labels = np.array([item.label for item in items])
        params = zero_params(2, 3)
        params.b_out += labels.mean()
        metrics = evaluate(params, items)
        assert metrics.r2 == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_case(self):
        # y = [0, 1, 2], predictions all 0: SS_res = 5, SS_tot = 2.
        params = zero_params(2, 2)
        items = [
            ChunkEmbeddings(f"d{i}", np.zeros((1, 2), dtype=np.float32), label=float(i))
            for i in range(3)
        ]
        metrics = evaluate(params, items)
        assert metrics.mse == pytest.approx(5.0 / 3.0)
        assert metrics.mae == pytest.approx(1.0)
        assert metrics.r2 == pytest.approx(-1.5)

    def test_degenerate_labels_raise_but_report(self):
        params = init_params(2, 2, seed=0)
        items = [
            ChunkEmbeddings(f"d{i}", np.ones((1, 2), dtype=np.float32) * i, label=2.0)
            for i in range(4)
        ]
        with pytest.raises(DegenerateLabels) as err:
            evaluate(params, items)
        assert err.value.mse >= 0.0
        assert err.value.mae >= 0.0


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        params = init_params(7, 5, seed=17)
        path = tmp_path / "model.schp"
        save_checkpoint(path, params)
        loaded = load_checkpoint(path)
        for (_, a), (_, b) in zip(params.tensors(), loaded.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.schp"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_truncated(self, tmp_path):
        params = init_params(4, 4, seed=18)
        path = tmp_path / "model.schp"
        save_checkpoint(path, params)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(FormatError):
            load_checkpoint(path)


class TestHistoryFile:
    def test_jsonl_format(self, tmp_path):
        rng = np.random.default_rng(20)
        items = random_dataset(rng, 6, dim=3)
        result = train(items, TrainConfig(epochs=2, hidden=3, batch_size=3, seed=2))
        path = tmp_path / "history.jsonl"
        write_history(path, result.history)
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert [row["epoch"] for row in rows] == [1, 2]
        assert set(rows[0]) == {"epoch", "train_mae", "val_mae", "train_mse", "val_mse"}
        assert rows[0]["val_mae"] is None
