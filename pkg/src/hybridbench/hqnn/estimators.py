"""scikit-learn style wrappers around the reference architectures."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .datasets import Dataset, Scaler
from .network import build_network
from .training import TrainConfig, train


class _HQNNBase(BaseEstimator):
    _task = ""

    def _config(self) -> TrainConfig:
        factory = TrainConfig.classification if self._task == "classification" else TrainConfig.regression
        return factory(learning_rate=self.learning_rate, epochs=self.epochs,
                       batch_size=self.batch_size, seed=self.random_state)

    def _fit_scaled(self, X, y):
        self.scaler_ = Scaler.fit(X, "minmax")
        ds = Dataset(self.scaler_.transform(X), y)
        self.network_ = build_network(self._task, self.model, self.random_state)
        self.network_, self.history_ = train(self.network_, (ds, ds), self._config())
        self.n_features_in_ = X.shape[1]
        return self

    def _check_X(self, X):
        if X.shape[1] != 2:
            raise ValueError(f"the reference architectures take 2 features, got {X.shape[1]}")

    def _raw_output(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.network_.forward(np.clip(self.scaler_.transform(X), 0.0, 1.0))


class HQNNClassifier(ClassifierMixin, _HQNNBase):
    """Binary classifier: ``model`` is ``"hybrid"`` (125 parameters) or ``"classical"`` (161).

    Inputs are min-max scaled on the training data; unseen values are
    clipped to the fitted range.
    """

    _task = "classification"

    def __init__(self, model="hybrid", learning_rate=1e-2, epochs=100, batch_size=32, random_state=0):
        self.model = model
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self._check_X(X)
        check_classification_targets(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise ValueError(f"binary targets required, got {len(self.classes_)} classes")
        return self._fit_scaled(X, encoded.astype(float))

    def predict_proba(self, X):
        p = self._raw_output(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self._raw_output(X) > 0.5).astype(int)]


class HQNNRegressor(RegressorMixin, _HQNNBase):
    """Two-feature regressor; targets are min-max scaled internally and mapped back in ``predict``."""

    _task = "regression"

    def __init__(self, model="hybrid", learning_rate=3e-3, epochs=100, batch_size=32, random_state=0):
        self.model = model
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self._check_X(X)
        self.target_scaler_ = Scaler.fit(y[:, None], "minmax")
        return self._fit_scaled(X, self.target_scaler_.transform(y[:, None])[:, 0])

    def predict(self, X):
        return self.target_scaler_.inverse(self._raw_output(X)[:, None])[:, 0]
