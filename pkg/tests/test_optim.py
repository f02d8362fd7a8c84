"""Adam against a scalar reference recurrence, plus training-loop control flow."""

import numpy as np
import pytest

from opunet.data import synth_generate
from opunet.errors import NumericsError
from opunet.metrics import Scores
from opunet.model import OpUNet, OpUNetConfig
from opunet.optim import (
    Adam,
    EpochStats,
    TrainConfig,
    evaluate,
    format_epoch_line,
    prepare,
    train,
)
from opunet.tensor import Tensor

from oracles import adam_scalar_reference


def _scalar_param(value=0.0):
    return Tensor(np.array([value], dtype=np.float64), requires_grad=True)


class TestAdam:
    def test_first_step_closed_form(self):
        # bias correction makes step 1 exactly lr * g / (|g| + eps)
        for g in (0.5, -3.0, 1e-4):
            p = _scalar_param(1.0)
            opt = Adam([("p", p)], lr=0.1)
            p.grad = np.array([g])
            opt.step()
            expected = 1.0 - 0.1 * g / (abs(g) + 1e-8)
            np.testing.assert_allclose(p.data, [expected], rtol=1e-12)

    def test_zero_gradient_is_a_fixed_point(self):
        p = _scalar_param(2.5)
        opt = Adam([("p", p)], lr=0.1)
        p.grad = np.array([0.0])
        opt.step()
        assert p.data[0] == 2.5
        assert opt.t == 1  # the step still counts toward bias correction
        p.grad = np.array([0.0])
        opt.step()
        assert opt.t == 2

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(0)
        grads = rng.standard_normal(10)
        p = _scalar_param(0.3)
        opt = Adam([("p", p)], lr=0.01)
        trajectory = []
        for g in grads:
            p.grad = np.array([g])
            opt.step()
            trajectory.append(p.data[0])
        want = adam_scalar_reference(grads, lr=0.01, theta0=0.3)
        np.testing.assert_allclose(trajectory, want, rtol=1e-12)

    def test_elementwise_independence(self):
        # a vector parameter must update exactly like separate scalars
        rng = np.random.default_rng(1)
        vec = Tensor(rng.standard_normal(4), requires_grad=True, dtype=np.float64)
        start = vec.data.copy()
        opt = Adam([("v", vec)], lr=0.05)
        gseq = rng.standard_normal((6, 4))
        for g in gseq:
            vec.grad = g.copy()
            opt.step()
        for j in range(4):
            want = adam_scalar_reference(gseq[:, j], lr=0.05, theta0=start[j])[-1]
            np.testing.assert_allclose(vec.data[j], want, rtol=1e-12)

    def test_missing_grad_rejected(self):
        p = _scalar_param()
        opt = Adam([("p", p)])
        with pytest.raises(ValueError, match="no gradient"):
            opt.step()

    def test_non_finite_grad_aborts_with_name(self):
        p = _scalar_param()
        opt = Adam([("enc3.w", p)])
        p.grad = np.array([np.nan])
        with pytest.raises(NumericsError, match="enc3.w"):
            opt.step()

    def test_zero_grad_clears(self):
        p = _scalar_param()
        p.grad = np.array([1.0])
        Adam([("p", p)]).zero_grad()
        assert p.grad is None

    def test_bare_list_accepted(self):
        p = _scalar_param()
        opt = Adam([p], lr=0.1)
        p.grad = np.array([1.0])
        opt.step()
        assert p.data[0] != 0.0


class TestTrainConfig:
    @pytest.mark.parametrize("kw", [
        dict(batch_size=0),
        dict(max_epochs=0),
        dict(patience=-1),
        dict(patience=5, max_epochs=4),
        dict(threshold=1.5),
        dict(lr=0.0),
    ])
    def test_invalid_rejected(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)


def _tiny_setup(seed=0, count=6):
    records = synth_generate(seed, count, 32, (1, 3))
    cfg = OpUNetConfig(encoder_widths=(2, 3, 4, 5, 6), input_size=32)
    model = OpUNet(cfg, seed=seed)
    return model, records


class TestTrainLoop:
    def test_prepare_normalizes(self):
        records = synth_generate(0, 2, 32)
        pairs = prepare(records)
        x, y = pairs[0]
        assert x.dtype == np.float32 and y.dtype == np.float32
        assert x.min() >= -1.0 and x.max() <= 1.0
        assert y.shape == (1, 32, 32)
        assert set(np.unique(y)) <= {0.0, 1.0}

    def test_three_epochs_deterministic(self):
        tc = TrainConfig(batch_size=2, max_epochs=3, patience=3, seed=5, lr=1e-3)
        runs = []
        for _ in range(2):
            model, records = _tiny_setup(seed=5)
            result = train(model, records[:4], records[4:], tc)
            runs.append((result, model.state_dict()))
        (ra, sa), (rb, sb) = runs
        assert [h.train_loss for h in ra.history] == [h.train_loss for h in rb.history]
        assert ra.best_epoch == rb.best_epoch
        for name in sa:
            np.testing.assert_array_equal(sa[name], sb[name])

    def test_loss_decreases_on_average(self):
        model, records = _tiny_setup(seed=1)
        tc = TrainConfig(batch_size=4, max_epochs=12, patience=12, seed=1, lr=1e-3)
        result = train(model, records[:4], records[4:], tc)
        losses = [h.train_loss for h in result.history]
        assert losses[-1] < losses[0]

    def test_patience_zero_stops_after_first_stall(self):
        model, records = _tiny_setup(seed=2)
        # lr tiny enough that F1 stays flat, so epoch 2 cannot improve on epoch 1
        tc = TrainConfig(batch_size=4, max_epochs=50, patience=0, seed=2, lr=1e-12)
        result = train(model, records[:4], records[4:], tc)
        assert len(result.history) == 2
        assert result.best_epoch == 1

    def test_best_state_restored(self):
        model, records = _tiny_setup(seed=3)
        tc = TrainConfig(batch_size=4, max_epochs=6, patience=6, seed=3, lr=1e-3)
        result = train(model, records[:4], records[4:], tc)
        scores, _ = evaluate(model, records[4:], tc.threshold, tc.batch_size)
        np.testing.assert_allclose(scores.f1, result.best_f1, rtol=1e-12)
        best = result.history[result.best_epoch - 1].val.f1
        assert best == result.best_f1
        assert all(h.val.f1 <= best for h in result.history)

    def test_empty_split_rejected(self):
        model, records = _tiny_setup()
        with pytest.raises(ValueError, match="non-empty"):
            train(model, [], records, TrainConfig())

    def test_evaluate_matches_manual_loop(self):
        model, records = _tiny_setup(seed=4)
        scores, counts = evaluate(model, records, threshold=0.5, batch_size=2)
        tp = fp = fn = tn = 0
        for x, y in prepare(records):
            pred = model.predict_mask(Tensor(x[None]), 0.5).data[0, 0]
            truth = y[0]
            tp += int(((pred == 1) & (truth == 1)).sum())
            fp += int(((pred == 1) & (truth == 0)).sum())
            fn += int(((pred == 0) & (truth == 1)).sum())
            tn += int(((pred == 0) & (truth == 0)).sum())
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == (tp, fp, fn, tn)


def test_epoch_line_format():
    st = EpochStats(3, 0.123456789, Scores(0.5, 0.25, 0.2, 1 / 3, False))
    line = format_epoch_line(st)
    assert line == "3\t0.123457\t0.5000\t0.2500\t0.2000\t0.3333"
