import csv
import json
import math

import numpy as np
import pytest

from dygmamba.errors import ConfigError, NumericError
from dygmamba.graph_store import DataSplit, chronological_split
from dygmamba.model import ModelConfig, init_model
from dygmamba.synth import synth_dataset
from dygmamba.trainer import EvalReport, evaluate, pooled_metrics, summarize, train


@pytest.fixture(scope="module")
def tiny():
    g = synth_dataset(8, noise_edges=80, horizon=40.0, d_N=4, d_E=4, noise_nodes=4)
    return g, chronological_split(g, unseen_fraction=0.1, seed=0)


def tiny_model(seed=0, **kw):
    cfg = dict(rho=4, p=1, k=2, d=4, d_SSM=2, l_N=1, l_T=1, d_N=4, d_E=4, d_T=4, d_F=3,
               dropout=0.1, seed=seed)
    cfg.update(kw)
    return init_model(ModelConfig(**cfg))


class ConstantScorer:
    def __init__(self, value=0.5):
        self.value = value

    def predict_proba(self, g, us, vs, ts, batch_size=None):
        return np.full(len(us), self.value)


class RandomScorer:
    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def predict_proba(self, g, us, vs, ts, batch_size=None):
        return self.rng.random(len(us))


def test_patience_zero_stops_after_second_epoch(tiny):
    g, split = tiny
    _, hist = train(tiny_model(), g, split, epochs_max=10, patience=0, batch_size=64, lr=0.0)
    assert [r[0] for r in hist.rows] == [1, 2]
    assert hist.best_epoch == 1


def test_training_is_deterministic(tiny, tmp_path):
    g, split = tiny
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        _, hist = train(tiny_model(), g, split, epochs_max=2, patience=5, batch_size=64, lr=1e-3,
                        checkpoint_path=d / "m.ckpt", history_path=d / "h.csv")
        outs.append(((d / "h.csv").read_bytes(), (d / "m.ckpt").read_bytes()))
    assert outs[0] == outs[1]
    rows = list(csv.reader((tmp_path / "a" / "h.csv").read_text().splitlines()))
    assert rows[0] == ["epoch", "train_loss", "val_ap"] and len(rows) == 3


def test_training_never_sees_test_period(tiny):
    g, split = tiny
    _, hist = train(tiny_model(), g, split, epochs_max=1, batch_size=64, lr=1e-3)
    assert hist.max_query_ts <= split.boundary_ts[1]


def test_training_improves_validation(tiny):
    g, split = tiny
    model = tiny_model(dropout=0.0)
    base = evaluate(model, g, DataSplit(split.train, split.val, split.val))
    assert abs(base.ap - 0.5) < 0.1
    _, hist = train(model, g, split, epochs_max=3, patience=5, batch_size=32, lr=1e-3)
    aps = [r[2] for r in hist.rows]
    assert base.ap < aps[0] < aps[1] < aps[2]


def test_non_finite_loss_is_reported(tiny):
    g, split = tiny
    m = tiny_model()
    m.f_LP.layers[0][1].data[:] = np.nan
    with pytest.raises(NumericError, match="epoch 1, batch 0"):
        train(m, g, split, epochs_max=1)


def test_train_argument_checks(tiny):
    g, split = tiny
    with pytest.raises(ConfigError):
        train(tiny_model(), g, split, epochs_max=0)


def test_constant_model_auc_is_half(tiny):
    g, split = tiny
    rep = evaluate(ConstantScorer(), g, split)
    assert rep.auc == 0.5 and rep.num_queries == len(split.test)


def test_inductive_without_unseen_nodes_is_undefined(tiny):
    g, split = tiny
    bare = DataSplit(split.train, split.val, split.test, frozenset(), split.boundary_ts)
    rep = evaluate(ConstantScorer(), g, bare, setting="inductive")
    assert rep.undefined and rep.num_queries == 0 and math.isnan(rep.ap)
    assert json.loads(rep.to_json())["ap"] is None


def test_inductive_filters_to_unseen(tiny):
    g, split = tiny
    rep = evaluate(ConstantScorer(), g, split, setting="inductive")
    expected = int(split.touches_unseen(g, np.arange(split.test.start, split.test.stop)).sum())
    assert rep.num_queries == expected


def test_setting_checks(tiny):
    g, split = tiny
    with pytest.raises(ConfigError):
        evaluate(ConstantScorer(), g, split, setting="inductive", nss="historical")
    with pytest.raises(ConfigError):
        evaluate(ConstantScorer(), g, split, setting="sideways")


def random_ap_moments(n_pos, n_neg, trials=20_000, seed=0):
    # expectation in closed form; spread by Monte Carlo
    N = n_pos + n_neg
    H = sum(1 / r for r in range(1, N + 1))
    mean = (H + (n_pos - 1) / (N - 1) * (N - H)) / N
    rng = np.random.default_rng(seed)
    labels = np.r_[np.ones(n_pos), np.zeros(n_neg)]
    ranks = np.arange(1, N + 1)
    aps = []
    for _ in range(trials // 100):
        perm = rng.permuted(np.tile(labels, (100, 1)), axis=1)
        aps.extend(((np.cumsum(perm, 1) / ranks) * perm).sum(1) / n_pos)
    return mean, float(np.mean(aps)), float(np.std(aps))


def test_random_scores_hit_random_baseline():
    g = synth_dataset(20, noise_edges=300, horizon=60.0, d_N=0, d_E=0)
    rows = range(len(g) - 200, len(g))
    split = DataSplit(range(0, rows.start - 50), range(rows.start - 50, rows.start), rows)
    mean, mc_mean, sd = random_ap_moments(200, 200)
    assert abs(mean - mc_mean) < 3 * sd / math.sqrt(20_000)
    rep = evaluate(RandomScorer(1), g, split)
    assert abs(rep.ap - mean) < 3 * sd


def test_pooled_metrics_shuffle_hides_list_order():
    ap, auc = pooled_metrics(np.full(50, 0.5), np.full(50, 0.5), seed=0)
    assert auc == 0.5 and abs(ap - 0.5) < 0.1


def test_summarize():
    reps = [EvalReport("transductive", "random", ap, 0.5, 10, s) for s, ap in enumerate((0.6, 0.8))]
    reps.append(EvalReport("inductive", "random", math.nan, math.nan, 0, 0, undefined=True))
    (row,) = summarize(reps)
    assert row["ap_mean"] == pytest.approx(0.7) and row["ap_std"] == pytest.approx(math.sqrt(0.02))
