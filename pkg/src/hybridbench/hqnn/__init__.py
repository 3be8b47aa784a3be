"""Hybrid quantum-classical neural networks."""

from .datasets import (Dataset, DatasetError, Scaler, load_csv_dataset, make_circles,
                       make_housing_like, split_dataset)
from .estimators import HQNNClassifier, HQNNRegressor
from .network import (DenseLayer, Encoding, Network, QuantumLayer, bce_loss, build_network,
                      classical_classifier, classical_regressor, first_layer_params,
                      hybrid_classifier, hybrid_regressor, loss_and_grad, mse_loss)
from .training import (History, RunSummary, TrainConfig, TrainingError, evaluate_metrics,
                       repeated_runs, train, train_size_sweep)

__all__ = [
    "Dataset", "DatasetError", "Scaler", "load_csv_dataset", "make_circles", "make_housing_like",
    "split_dataset", "HQNNClassifier", "HQNNRegressor", "DenseLayer", "Encoding", "Network",
    "QuantumLayer", "bce_loss", "build_network", "classical_classifier", "classical_regressor",
    "first_layer_params", "hybrid_classifier", "hybrid_regressor", "loss_and_grad", "mse_loss",
    "History", "RunSummary", "TrainConfig", "TrainingError", "evaluate_metrics", "repeated_runs",
    "train", "train_size_sweep",
]
