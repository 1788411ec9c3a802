"""Training loop with early stopping, and evaluation across settings and
negative sampling strategies."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError
from .graph_store import DataSplit, TemporalGraph
from .metrics import auc_roc, average_precision
from .model import DyGMambaModel, batch_loss
from .negatives import NssStrategy, sample_negatives
from .numerics.autograd import backward
from .numerics.optim import Adam

SETTINGS = ("transductive", "inductive")


@dataclass
class EvalReport:
    setting: str
    nss: str
    ap: float
    auc: float
    num_queries: int
    seed: int
    undefined: bool = False

    def to_json(self):
        d = asdict(self)
        for k in ("ap", "auc"):
            if d[k] is not None and not math.isfinite(d[k]):
                d[k] = None
        return json.dumps(d, sort_keys=True)


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_ap: float = -math.inf
    max_query_ts: float = -math.inf

    def write_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_ap"])
            for epoch, loss, ap in self.rows:
                w.writerow([epoch, repr(float(loss)), repr(float(ap))])


def _rows_as_queries(g, rows):
    return [(int(g.src[i]), int(g.dst[i]), float(g.ts[i])) for i in rows]


def score_queries(model, g, queries, batch_size=200):
    if not queries:
        return np.zeros(0)
    us, vs, ts = zip(*queries)
    return model.predict_proba(g, list(us), list(vs), list(ts), batch_size=batch_size)


def pooled_metrics(pos_scores, neg_scores, seed):
    """AP and AUC over the pooled set, shuffled so score ties are not
    resolved in favour of whichever class is listed first."""
    scores = np.r_[pos_scores, neg_scores]
    labels = np.r_[np.ones(len(pos_scores)), np.zeros(len(neg_scores))]
    perm = np.random.default_rng(seed).permutation(len(scores))
    return average_precision(scores[perm], labels[perm]), auc_roc(scores[perm], labels[perm])


def _val_ap(model, g, split, seed, batch_size):
    pos = _rows_as_queries(g, split.val)
    neg = sample_negatives(NssStrategy("random", seed), pos, g, split)
    s_pos = score_queries(model, g, pos, batch_size)
    s_neg = score_queries(model, g, neg, batch_size)
    return pooled_metrics(s_pos, s_neg, seed)[0], max(q[2] for q in pos)


def train(model: DyGMambaModel, g: TemporalGraph, split: DataSplit, epochs_max=200, patience=20,
          batch_size=200, lr=1e-4, seed=0, checkpoint_path=None, history_path=None, log=None):
    """Fit ``model`` in place; returns ``(model, history)`` with the best
    validation state loaded.

    Training queries see only the training view of the graph (edges
    touching withheld nodes removed). Stopping happens once the number of
    epochs without strict validation improvement exceeds ``patience``.
    """
    if epochs_max < 1 or patience < 0 or batch_size < 1:
        raise ConfigError("epochs_max and batch_size must be >= 1 and patience >= 0")
    model.check_graph(g)
    train_rows = split.train_rows(g)
    g_train = g.subgraph(train_rows) if len(train_rows) != len(split.train) else g
    positives = _rows_as_queries(g_train, range(len(train_rows)))
    opt = Adam(model.named_parameters(), lr=lr)
    hist = TrainHistory()
    best_state, stale = model.state_dict(), 0
    rng = np.random.default_rng([seed, 2])

    for epoch in range(1, epochs_max + 1):
        model.train()
        losses = []
        for b, s in enumerate(range(0, len(positives), batch_size)):
            pos = positives[s:s + batch_size]
            neg = sample_negatives(NssStrategy("random"), pos, g_train, seed=int(rng.integers(2**63)))
            opt.zero_grad()
            loss = batch_loss(model, g_train, pos, neg)
            if not math.isfinite(loss.item()):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            backward(loss)
            opt.step()
            losses.append(loss.item())
            hist.max_query_ts = max(hist.max_query_ts, pos[-1][2])
        val_ap, vmax = _val_ap(model, g, split, seed, batch_size)
        hist.max_query_ts = max(hist.max_query_ts, vmax)
        train_loss = float(np.mean(losses)) if losses else float("nan")
        hist.rows.append((epoch, train_loss, val_ap))
        if log is not None:
            log(f"epoch {epoch}: train_loss={train_loss:.5f} val_ap={val_ap:.5f}")
        if val_ap > hist.best_val_ap:
            hist.best_val_ap, hist.best_epoch, stale = val_ap, epoch, 0
            best_state = model.state_dict()
            if checkpoint_path is not None:
                model.save(checkpoint_path, extra={"epoch": epoch, "val_ap": val_ap})
        else:
            stale += 1
            if stale > patience:
                break
        if history_path is not None:
            hist.write_csv(history_path)

    if history_path is not None:
        hist.write_csv(history_path)
    model.load_state_dict(best_state)
    model.eval()
    return model, hist


def evaluate(model, g: TemporalGraph, split: DataSplit, setting="transductive", nss="random",
             seed=0, batch_size=200) -> EvalReport:
    """Score test positives and one negative each; ``model`` needs a
    ``predict_proba(g, us, vs, ts)`` method."""
    if setting not in SETTINGS:
        raise ConfigError(f"unknown setting {setting!r}")
    strategy = NssStrategy(nss, seed)
    if setting == "inductive" and nss == "historical":
        raise ConfigError("historical sampling is not used in the inductive setting")
    rows = np.arange(split.test.start, split.test.stop)
    if setting == "inductive":
        rows = rows[split.touches_unseen(g, rows)] if split.unseen_nodes else rows[:0]
    if len(rows) == 0:
        return EvalReport(setting, nss, float("nan"), float("nan"), 0, seed, undefined=True)
    pos = _rows_as_queries(g, rows)
    neg = sample_negatives(strategy, pos, g, split)
    s_pos = score_queries(model, g, pos, batch_size)
    s_neg = score_queries(model, g, neg, batch_size)
    ap, auc = pooled_metrics(s_pos, s_neg, seed)
    return EvalReport(setting, nss, ap, auc, len(pos), seed)


def summarize(reports):
    """Mean and sample std of AP/AUC per (setting, nss) over seeds."""
    groups = {}
    for r in reports:
        if not r.undefined:
            groups.setdefault((r.setting, r.nss), []).append(r)
    out = []
    for (setting, nss), rs in sorted(groups.items()):
        ap = np.array([r.ap for r in rs])
        auc = np.array([r.auc for r in rs])
        ddof = 1 if len(rs) > 1 else 0
        out.append({"setting": setting, "nss": nss, "seeds": [r.seed for r in rs],
                    "ap_mean": float(ap.mean()), "ap_std": float(ap.std(ddof=ddof)),
                    "auc_mean": float(auc.mean()), "auc_std": float(auc.std(ddof=ddof))})
    return out
