"""scikit-learn style wrappers.

``X`` is always an (n, 3) array of ``(src, dst, ts)`` rows. ``fit`` takes
the chronological interaction history; ``predict_proba`` scores query
links against that history (each query sees only interactions strictly
before its timestamp) and returns sklearn's two-column layout.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .edgebank import EdgeBank
from .errors import DegenerateSplitError, ValidationError
from .graph_store import DataSplit, TemporalGraph, _advance_past_ties
from .metrics import average_precision
from .model import ModelConfig, init_model
from .trainer import train


def check_interactions(X, ordered=True):
    """Validate an (n, 3) interaction array; returns ``(src, dst, ts)``.

    Node ids must be non-negative integers and timestamps finite and
    non-negative. With ``ordered`` the rows must also be chronological.
    """
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != 3:
        raise ValidationError(f"expected 3 columns (src, dst, ts), got {X.shape[1]}")
    ids = X[:, :2]
    if np.any(ids < 0) or np.any(ids != np.round(ids)):
        raise ValidationError("node ids must be non-negative integers")
    ts = X[:, 2]
    if np.any(ts < 0):
        raise ValidationError("timestamps must be non-negative")
    if ordered and np.any(np.diff(ts) < 0):
        raise ValidationError("interactions must be in chronological order")
    return ids[:, 0].astype(np.int64), ids[:, 1].astype(np.int64), ts


class _LinkPredictorBase(ClassifierMixin, BaseEstimator):
    def _history(self, X, num_nodes=None, d_N=0, d_E=0):
        src, dst, ts = check_interactions(X)
        self.classes_ = np.array([0, 1])
        return TemporalGraph(src, dst, ts, num_nodes=num_nodes, d_N=d_N, d_E=d_E)

    def _scorer(self):
        raise NotImplementedError

    def predict_proba(self, X):
        check_is_fitted(self, "graph_")
        src, dst, ts = check_interactions(X, ordered=False)
        p = self._scorer().predict_proba(self.graph_, src, dst, ts)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def score(self, X, y, sample_weight=None):
        """Average precision of the link scores for ``X`` against labels ``y``."""
        return average_precision(self.predict_proba(X)[:, 1], y)


class DyGMambaLinkPredictor(_LinkPredictorBase):
    """Trains a DyGMamba model on an interaction stream.

    The last ``val_fraction`` of ``X`` (chronologically) is held out for
    early stopping.
    """

    def __init__(self, rho=32, p=1, k=10, d=50, d_SSM=16, gamma=0.5, l_N=2, l_T=2, d_T=100,
                 d_F=50, d_N=172, d_E=172, dropout=0.1, variant="full", epochs_max=200,
                 patience=20, batch_size=200, lr=1e-4, val_fraction=0.15, random_state=0):
        self.rho = rho
        self.p = p
        self.k = k
        self.d = d
        self.d_SSM = d_SSM
        self.gamma = gamma
        self.l_N = l_N
        self.l_T = l_T
        self.d_T = d_T
        self.d_F = d_F
        self.d_N = d_N
        self.d_E = d_E
        self.dropout = dropout
        self.variant = variant
        self.epochs_max = epochs_max
        self.patience = patience
        self.batch_size = batch_size
        self.lr = lr
        self.val_fraction = val_fraction
        self.random_state = random_state

    def fit(self, X, y=None, num_nodes=None):
        g = self._history(X, num_nodes, self.d_N, self.d_E)
        n = len(g)
        b = _advance_past_ties(g.ts, int(np.floor((1.0 - self.val_fraction) * n + 1e-9)))
        if not 0 < b < n:
            raise DegenerateSplitError(f"cannot hold out a validation span from {n} interactions")
        split = DataSplit(range(0, b), range(b, n), range(n, n), frozenset(),
                          (float(g.ts[b - 1]), float(g.ts[-1])))
        cfg = ModelConfig(rho=self.rho, p=self.p, k=self.k, d=self.d, d_SSM=self.d_SSM,
                          gamma=self.gamma, l_N=self.l_N, l_T=self.l_T, d_N=self.d_N, d_E=self.d_E,
                          d_T=self.d_T, d_F=self.d_F, dropout=self.dropout, variant=self.variant,
                          seed=self.random_state)
        self.model_, self.history_ = train(init_model(cfg), g, split, self.epochs_max, self.patience,
                                           self.batch_size, self.lr, self.random_state)
        self.graph_ = g
        return self

    def _scorer(self):
        return self.model_


class EdgeBankLinkPredictor(_LinkPredictorBase):
    def __init__(self, strategy="infinite", window=None, thresh=1):
        self.strategy = strategy
        self.window = window
        self.thresh = thresh

    def fit(self, X, y=None, num_nodes=None):
        self.graph_ = self._history(X, num_nodes)
        self.bank_ = EdgeBank(self.strategy, self.window, self.thresh)
        return self

    def _scorer(self):
        return self.bank_
