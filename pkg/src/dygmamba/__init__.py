"""Selective state-space link prediction on continuous-time dynamic graphs."""

from .edgebank import EdgeBank, EdgeMemory, edgebank_reports
from .errors import DyGMambaError
from .estimator import DyGMambaLinkPredictor, EdgeBankLinkPredictor
from .graph_store import DataSplit, TemporalGraph, chronological_split, load_graph
from .metrics import auc_roc, average_precision
from .model import DyGMambaModel, ModelConfig, init_model, load_model
from .negatives import NssStrategy, sample_negatives
from .synth import synth_dataset
from .trainer import EvalReport, TrainHistory, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "EdgeBank", "EdgeMemory", "edgebank_reports", "DyGMambaError", "DyGMambaLinkPredictor",
    "EdgeBankLinkPredictor", "DataSplit", "TemporalGraph", "chronological_split", "load_graph",
    "auc_roc", "average_precision", "DyGMambaModel", "ModelConfig", "init_model", "load_model",
    "NssStrategy", "sample_negatives", "synth_dataset", "EvalReport", "TrainHistory", "evaluate",
    "train",
]
