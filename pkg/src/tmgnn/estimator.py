"""Scikit-learn style forecaster wrapping the full temporal model.

TmgnnForecaster.fit consumes a TemporalGraphDataset, splits it
chronologically, standardizes per node on the pre-test span, and trains
the model by rolling the recurrent state over the training anchors in
order, one optimizer update per epoch (or per anchor chunk when
batch_anchors is set). Prediction rolls the frozen model in evaluation
mode over the full series and reports per-anchor forecasts.
"""

import numpy as np
from sklearn.base import BaseEstimator

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .attention import AttentionConfig
from .baselines import baseline_predictions
from .data import SplitSpec, make_windows, split_windows, standardize_dataset
from .errors import ConfigurationError, ContractError, DataError
from .mgn import MgnConfig
from .model import ModelConfig, TmgnnModel, load_checkpoint, save_checkpoint
from .optim import Adam
from .rng import Rng

_TRAIN_STREAM = 1


def _chunks(items, size):
    if size <= 0:
        yield items
        return
    for i in range(0, len(items), size):
        yield items[i: i + size]


class TmgnnForecaster(BaseEstimator):
    """Multiresolution temporal graph forecaster with a fit/predict API."""

    def __init__(self, level_sizes=None, message_dim=24, mp_layers=4,
                 activation="tanh", laplacian="row", clustering_layers=1,
                 heads=1, key_dim=None, value_dim=None, contraction="mean",
                 cell="lstm", hidden_dim=None, head_hidden=None,
                 lags=8, horizon=1, temperature=1.0,
                 epochs=150, learning_rate=1e-3, loss="mse", seed=0,
                 train_fraction=0.8, batch_anchors=0):
        self.level_sizes = level_sizes
        self.message_dim = message_dim
        self.mp_layers = mp_layers
        self.activation = activation
        self.laplacian = laplacian
        self.clustering_layers = clustering_layers
        self.heads = heads
        self.key_dim = key_dim
        self.value_dim = value_dim
        self.contraction = contraction
        self.cell = cell
        self.hidden_dim = hidden_dim
        self.head_hidden = head_hidden
        self.lags = lags
        self.horizon = horizon
        self.temperature = temperature
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.loss = loss
        self.seed = seed
        self.train_fraction = train_fraction
        self.batch_anchors = batch_anchors

    # -- configuration ----------------------------------------------------

    def _model_config(self, dataset):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate < 0:
            raise ConfigurationError(
                f"learning_rate must be non-negative, got {self.learning_rate}"
            )
        if not (1 <= self.heads <= 4):
            raise ConfigurationError(f"heads must lie in [1, 4], got {self.heads}")
        if self.loss not in ("mse", "mae"):
            raise ConfigurationError(f"loss must be 'mse' or 'mae', got {self.loss!r}")
        level_sizes = self.level_sizes
        if level_sizes is None:
            raise ConfigurationError("level_sizes must be set before fitting")
        if level_sizes[0] != dataset.n:
            raise ConfigurationError(
                f"level_sizes[0]={level_sizes[0]} does not match the dataset's "
                f"{dataset.n} nodes"
            )
        return ModelConfig(
            mgn=MgnConfig(
                level_sizes=tuple(level_sizes),
                message_dim=self.message_dim,
                mp_layers=self.mp_layers,
                activation=self.activation,
                laplacian=self.laplacian,
                clustering_layers=self.clustering_layers,
            ),
            attention=AttentionConfig(
                heads=self.heads,
                key_dim=self.key_dim,
                value_dim=self.value_dim,
                contraction=self.contraction,
            ),
            input_dim=self.lags,
            horizon=self.horizon,
            cell=self.cell,
            hidden_dim=self.hidden_dim,
            head_hidden=self.head_hidden,
            temperature=self.temperature,
        )

    # -- fitting -----------------------------------------------------------

    def fit(self, dataset, y=None):
        """Train on the chronologically earliest train_fraction of anchors."""
        samples = make_windows(dataset, self.lags, self.horizon)
        train, test = split_windows(samples, SplitSpec(self.train_fraction))
        config = self._model_config(dataset)

        # Statistics only from rows observable before the first test target.
        fit_rows = test[0].anchor + 1
        ds_std, scaler = standardize_dataset(dataset, fit_rows)
        std_by_anchor = {
            s.anchor: std for s, std in zip(samples, make_windows(ds_std, self.lags, self.horizon))
        }
        train_graphs = [
            (ds_std.graph_at(s.anchor, std_by_anchor[s.anchor].inputs),
             std_by_anchor[s.anchor].target)
            for s in train
        ]

        model = TmgnnModel(config, seed=Rng(self.seed, stream=0))
        optimizer = Adam(
            {k: model.params[k] for k in sorted(model.params)},
            learning_rate=self.learning_rate,
        )
        noise_rng = Rng(self.seed, stream=_TRAIN_STREAM)

        history = []
        diagnostic = None
        snapshot = {k: t.data.copy() for k, t in model.params.items()}
        for epoch in range(self.epochs):
            epoch_total = 0.0
            state = model.initial_state()
            aborted = False
            for chunk in _chunks(train_graphs, self.batch_anchors):
                with Tape() as tape:
                    losses = []
                    for graph, target in chunk:
                        result = model.step(graph, state, mode="train", rng=noise_rng)
                        state = result.state
                        diff = ad.sub(result.prediction, Tensor(target))
                        err = ad.mul(diff, diff) if self.loss == "mse" else ad.absolute(diff)
                        losses.append(ad.reshape(err.mean(), (1,)))
                    chunk_loss = ad.concat(losses).mean()
                    value = float(chunk_loss.data)
                    if not np.isfinite(value):
                        diagnostic = (
                            f"non-finite loss at epoch {epoch + 1}; restored last "
                            f"finite parameters"
                        )
                        aborted = True
                        break
                    tape.backward(chunk_loss)
                optimizer.step()
                optimizer.zero_grad()
                state = state.detach()
                epoch_total += value * len(chunk)
            if aborted:
                for k, t in model.params.items():
                    t.data = snapshot[k].copy()
                break
            snapshot = {k: t.data.copy() for k, t in model.params.items()}
            history.append(epoch_total / len(train_graphs))

        self.model_ = model
        self.scaler_ = scaler
        self.dataset_ = dataset
        self.train_anchors_ = [s.anchor for s in train]
        self.test_anchors_ = [s.anchor for s in test]
        self.loss_history_ = history
        self.training_diagnostic_ = diagnostic
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ContractError("forecaster used before fit")

    # -- prediction ---------------------------------------------------------

    def predict_series(self, dataset=None):
        """Evaluation-mode roll over all anchors of the dataset.

        Returns (anchors, standardized predictions (A, n, horizon),
        selection records [(anchor, level_index, probs)]).
        """
        self._check_fitted()
        dataset = self.dataset_ if dataset is None else dataset
        if dataset.n != self.model_.config.mgn.level_sizes[0]:
            raise DataError(
                f"dataset has {dataset.n} nodes; model expects "
                f"{self.model_.config.mgn.level_sizes[0]}"
            )
        std_cases = self.scaler_.transform(dataset.cases)
        anchors = []
        preds = []
        selections = []
        state = self.model_.initial_state()
        for anchor in range(self.lags - 1, dataset.T - self.horizon):
            inputs = std_cases[anchor - self.lags + 1: anchor + 1].T
            graph = dataset.graph_at(anchor, inputs)
            result = self.model_.step(graph, state, mode="eval")
            state = result.state
            anchors.append(anchor)
            preds.append(result.prediction.data.copy())
            selections.append((anchor, result.selection.level_index, result.selection.probs))
        return anchors, np.stack(preds), selections

    def predict(self, dataset=None):
        """Raw-scale forecasts for the test anchors: (A_test, n, horizon)."""
        anchors, preds, _ = self.predict_series(dataset)
        test = set(self.test_anchors_)
        keep = [i for i, a in enumerate(anchors) if a in test]
        return self._to_raw(preds[keep])

    def _to_raw(self, standardized_preds):
        scale = self.scaler_.scale_[None, :, None]
        mean = self.scaler_.mean_[None, :, None]
        return standardized_preds * scale + mean

    # -- persistence ----------------------------------------------------------

    def save(self, path):
        """Checkpoint the fitted model plus scaler and split protocol."""
        self._check_fitted()
        extra = {
            "scaler": self.scaler_.to_dict(),
            "protocol": {
                "lags": self.lags,
                "horizon": self.horizon,
                "train_fraction": self.train_fraction,
                "seed": self.seed,
                "train_anchors": [int(a) for a in self.train_anchors_],
                "test_anchors": [int(a) for a in self.test_anchors_],
                "loss": self.loss,
                "epochs": self.epochs,
                "learning_rate": self.learning_rate,
                "batch_anchors": self.batch_anchors,
            },
            "loss_history": [float(v) for v in self.loss_history_],
        }
        save_checkpoint(self.model_, path, extra=extra)

    @classmethod
    def load(cls, path):
        """Restore a fitted forecaster (without its training dataset)."""
        from .data import NodeStandardizer

        model, extra = load_checkpoint(path)
        if not extra or "scaler" not in extra or "protocol" not in extra:
            raise DataError(f"{path}: checkpoint lacks forecaster state")
        proto = extra["protocol"]
        cfg = model.config
        est = cls(
            level_sizes=tuple(cfg.mgn.level_sizes),
            message_dim=cfg.mgn.message_dim,
            mp_layers=cfg.mgn.mp_layers,
            activation=cfg.mgn.activation,
            laplacian=cfg.mgn.laplacian,
            clustering_layers=cfg.mgn.clustering_layers,
            heads=cfg.attention.heads,
            key_dim=cfg.attention.key_dim,
            value_dim=cfg.attention.value_dim,
            contraction=cfg.attention.contraction,
            cell=cfg.cell,
            hidden_dim=cfg.hidden_dim,
            head_hidden=cfg.head_hidden,
            lags=proto["lags"],
            horizon=proto["horizon"],
            temperature=cfg.temperature,
            epochs=proto["epochs"],
            learning_rate=proto["learning_rate"],
            loss=proto["loss"],
            seed=proto["seed"],
            train_fraction=proto["train_fraction"],
            batch_anchors=proto["batch_anchors"],
        )
        est.model_ = model
        est.scaler_ = NodeStandardizer.from_dict(extra["scaler"])
        est.dataset_ = None
        est.train_anchors_ = list(proto["train_anchors"])
        est.test_anchors_ = list(proto["test_anchors"])
        est.loss_history_ = list(extra.get("loss_history", []))
        est.training_diagnostic_ = None
        return est


class BaselineForecaster(BaseEstimator):
    """Estimator facade over the statistical baselines."""

    def __init__(self, kind="avg", lags=8, horizon=1, window=7, train_fraction=0.8):
        self.kind = kind
        self.lags = lags
        self.horizon = horizon
        self.window = window
        self.train_fraction = train_fraction

    def fit(self, dataset, y=None):
        samples = make_windows(dataset, self.lags, self.horizon)
        _, test = split_windows(samples, SplitSpec(self.train_fraction))
        self.dataset_ = dataset
        self.test_anchors_ = [s.anchor for s in test]
        return self

    def predict(self, dataset=None):
        if not hasattr(self, "dataset_"):
            raise ContractError("forecaster used before fit")
        dataset = self.dataset_ if dataset is None else dataset
        return baseline_predictions(
            dataset.cases, self.test_anchors_, self.horizon, self.kind, self.window
        )
