import numpy as np
import pytest

from dygmamba.graph_store import TemporalGraph
from dygmamba.model import ModelConfig

TOY_EVENTS = [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 2.5), (0, 1, 3.0), (2, 3, 4.0), (1, 0, 5.0)]


@pytest.fixture
def toy_graph():
    rng = np.random.default_rng(11)
    src, dst, ts = zip(*TOY_EVENTS)
    return TemporalGraph(src, dst, ts, node_features=rng.normal(size=(4, 3)),
                         edge_features=rng.normal(size=(len(TOY_EVENTS), 2)))


@pytest.fixture
def toy_config():
    return ModelConfig(rho=4, p=2, k=2, d=4, d_SSM=2, l_N=1, l_T=1, d_N=3, d_E=2, d_T=4, d_F=3,
                       dropout=0.0, seed=5)


def random_graph(n_events, n_nodes, seed, d_N=0, d_E=0):
    rng = np.random.default_rng(seed)
    src = rng.integers(n_nodes, size=n_events)
    dst = rng.integers(n_nodes, size=n_events)
    ts = np.sort(rng.integers(0, n_events // 2 + 1, size=n_events)).astype(float)
    return TemporalGraph(src, dst, ts, num_nodes=n_nodes, d_N=d_N, d_E=d_E)
