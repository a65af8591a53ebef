"""Experiment configuration, evaluation protocols, and multi-seed runs.

Reports are split into a deterministic part (report.json, report.tsv,
checkpoints, selection logs), which is byte-identical across runs with
the same config and seeds, and timing.txt, which carries wall-clock
numbers and is excluded from the determinism contract.
"""

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import baseline_predictions
from .data import SplitSpec, load_canonical, make_windows, split_windows
from .errors import ConfigurationError, ContractError, DataError, ParseError
from .estimator import TmgnnForecaster


@dataclass
class TrainConfig:
    """Everything a training run needs; one flag per field in the CLI."""

    dataset: str = None
    output_dir: str = None
    level_sizes: tuple = None
    message_dim: int = 24
    mp_layers: int = 4
    activation: str = "tanh"
    laplacian: str = "row"
    clustering_layers: int = 1
    heads: int = 1
    key_dim: int = None
    value_dim: int = None
    contraction: str = "mean"
    cell: str = "lstm"
    hidden_dim: int = None
    head_hidden: int = None
    lags: int = 8
    horizon: int = 1
    temperature: float = 1.0
    epochs: int = 150
    learning_rate: float = 1e-3
    loss: str = "mse"
    seed: int = 0
    seeds: tuple = None
    train_fraction: float = 0.8
    batch_anchors: int = 0
    eval_window: int = None
    avg_window: int = 7

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigurationError(
                f"learning rate must be positive, got {self.learning_rate}"
            )
        if not (1 <= self.heads <= 4):
            raise ConfigurationError(f"heads must lie in [1, 4], got {self.heads}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigurationError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )
        if self.level_sizes is not None:
            self.level_sizes = tuple(int(v) for v in self.level_sizes)
        if self.seeds is not None:
            self.seeds = tuple(int(v) for v in self.seeds)

    def to_dict(self):
        doc = dataclasses.asdict(self)
        doc["level_sizes"] = list(self.level_sizes) if self.level_sizes else None
        doc["seeds"] = list(self.seeds) if self.seeds else None
        return doc

    @classmethod
    def from_dict(cls, doc):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def estimator(self, seed=None):
        return TmgnnForecaster(
            level_sizes=self.level_sizes,
            message_dim=self.message_dim,
            mp_layers=self.mp_layers,
            activation=self.activation,
            laplacian=self.laplacian,
            clustering_layers=self.clustering_layers,
            heads=self.heads,
            key_dim=self.key_dim,
            value_dim=self.value_dim,
            contraction=self.contraction,
            cell=self.cell,
            hidden_dim=self.hidden_dim,
            head_hidden=self.head_hidden,
            lags=self.lags,
            horizon=self.horizon,
            temperature=self.temperature,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            loss=self.loss,
            seed=self.seed if seed is None else seed,
            train_fraction=self.train_fraction,
            batch_anchors=self.batch_anchors,
        )


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return TrainConfig.from_dict(doc)


def mse(predictions, targets):
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ContractError(
            f"prediction shape {predictions.shape} != target shape {targets.shape}"
        )
    return float(np.mean((predictions - targets) ** 2))


def mae(predictions, targets):
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ContractError(
            f"prediction shape {predictions.shape} != target shape {targets.shape}"
        )
    return float(np.mean(np.abs(predictions - targets)))


def _test_targets(dataset, anchors, horizon):
    return np.stack(
        [dataset.cases[a + 1: a + horizon + 1].T for a in anchors]
    )


def _rolled_test(forecaster, dataset, eval_window=None):
    """Standardized test-anchor predictions and matching anchors."""
    dataset = forecaster.dataset_ if dataset is None else dataset
    anchors, preds, selections = forecaster.predict_series(dataset)
    test = set(forecaster.test_anchors_)
    keep = [i for i, a in enumerate(anchors) if a in test]
    if not keep:
        raise ContractError("no test anchors to evaluate")
    if eval_window is not None:
        if eval_window < 1:
            raise ConfigurationError(f"eval_window must be >= 1, got {eval_window}")
        keep = keep[-eval_window:]
    kept_anchors = [anchors[i] for i in keep]
    return kept_anchors, preds[keep], selections


def evaluate_mse(forecaster, dataset=None, eval_window=None):
    """Test MSE on standardized targets, optionally over the final window."""
    dataset = forecaster.dataset_ if dataset is None else dataset
    anchors, preds, _ = _rolled_test(forecaster, dataset, eval_window)
    std_cases = forecaster.scaler_.transform(dataset.cases)
    targets = np.stack(
        [std_cases[a + 1: a + forecaster.horizon + 1].T for a in anchors]
    )
    return mse(preds, targets)


def evaluate_mae(forecaster, dataset=None, eval_window=None):
    """Test MAE on raw-scale counts over all horizon days."""
    dataset = forecaster.dataset_ if dataset is None else dataset
    horizon = forecaster.horizon
    if dataset.T - 1 - forecaster.test_anchors_[0] < horizon:
        raise DataError(
            f"horizon {horizon} exceeds the available test span"
        )
    anchors, preds, _ = _rolled_test(forecaster, dataset, eval_window)
    raw_preds = forecaster._to_raw(preds)
    targets = _test_targets(dataset, anchors, horizon)
    return mae(raw_preds, targets)


def evaluate_baseline_mae(dataset, kind, lags=8, horizon=1, train_fraction=0.8, window=7):
    """Raw-scale test MAE of a statistical baseline under the same split."""
    samples = make_windows(dataset, lags, horizon)
    _, test = split_windows(samples, SplitSpec(train_fraction))
    anchors = [s.anchor for s in test]
    preds = baseline_predictions(dataset.cases, anchors, horizon, kind, window)
    targets = _test_targets(dataset, anchors, horizon)
    return mae(preds, targets)


def selection_histogram(selections, levels):
    counts = [0] * levels
    for _, level_index, _ in selections:
        counts[level_index] += 1
    return counts


def write_selection_log(selections, levels, path):
    """Delimited text table: timestep, selected level, soft probabilities."""
    with open(path, "w") as fh:
        header = ["timestep", "selected_level"] + [f"p_level_{i + 1}" for i in range(levels)]
        fh.write("\t".join(header) + "\n")
        for anchor, level_index, probs in selections:
            row = [str(anchor), str(level_index + 1)] + [repr(float(p)) for p in probs]
            fh.write("\t".join(row) + "\n")


@dataclass
class SeedResult:
    seed: int
    mse: float
    mae: float
    final_loss: float
    histogram: list
    diagnostic: str = None


@dataclass
class MetricsReport:
    """Aggregated outcome of one experiment across seeds."""

    config: dict
    seeds: list
    results: list = field(default_factory=list)
    mse_mean: float = None
    mse_std: float = None
    mae_mean: float = None
    mae_std: float = None
    wall_clock_seconds: float = None

    def to_dict(self):
        return {
            "config": self.config,
            "seeds": list(self.seeds),
            "results": [
                {
                    "seed": r.seed,
                    "mse": r.mse,
                    "mae": r.mae,
                    "final_loss": r.final_loss,
                    "selection_histogram": r.histogram,
                    "diagnostic": r.diagnostic,
                }
                for r in self.results
            ],
            "mse_mean": self.mse_mean,
            "mse_std": self.mse_std,
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
        }


def run_experiment(config, seeds=None, dataset=None, progress=None):
    """Train and evaluate one seed per run; aggregate mean and std.

    Writes, under config.output_dir: checkpoint_seed<k>.json,
    selections_seed<k>.tsv, report.json, report.tsv and timing.txt.
    Partial results persist per completed seed.
    """
    if seeds is None:
        seeds = config.seeds if config.seeds else (config.seed,)
    if not seeds:
        raise ConfigurationError("run_experiment needs at least one seed")
    if dataset is None:
        if not config.dataset:
            raise ConfigurationError("config.dataset path is required")
        dataset = load_canonical(config.dataset)
    out_dir = config.output_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    report = MetricsReport(config=config.to_dict(), seeds=list(seeds))
    started = time.monotonic()
    for seed in seeds:
        est = config.estimator(seed=seed)
        est.fit(dataset)
        anchors, preds, selections = est.predict_series(dataset)
        levels = len(est.level_sizes)
        test = set(est.test_anchors_)
        test_selections = [s for s in selections if s[0] in test]
        result = SeedResult(
            seed=seed,
            mse=evaluate_mse(est, dataset, eval_window=config.eval_window),
            mae=evaluate_mae(est, dataset, eval_window=config.eval_window),
            final_loss=est.loss_history_[-1] if est.loss_history_ else float("nan"),
            histogram=selection_histogram(test_selections, levels),
            diagnostic=est.training_diagnostic_,
        )
        report.results.append(result)
        if out_dir:
            est.save(os.path.join(out_dir, f"checkpoint_seed{seed}.json"))
            write_selection_log(
                test_selections, levels, os.path.join(out_dir, f"selections_seed{seed}.tsv")
            )
        if progress:
            progress(result)

    mses = [r.mse for r in report.results]
    maes = [r.mae for r in report.results]
    report.mse_mean = float(np.mean(mses))
    report.mae_mean = float(np.mean(maes))
    if len(report.results) >= 2:
        report.mse_std = float(np.std(mses))
        report.mae_std = float(np.std(maes))
    report.wall_clock_seconds = time.monotonic() - started

    if out_dir:
        write_report(report, out_dir)
    return report


def write_report(report, out_dir):
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(json.dumps(report.to_dict(), indent=1, sort_keys=True))
        fh.write("\n")
    with open(os.path.join(out_dir, "report.tsv"), "w") as fh:
        fh.write("seed\tmse\tmae\tfinal_loss\n")
        for r in report.results:
            fh.write(f"{r.seed}\t{r.mse!r}\t{r.mae!r}\t{r.final_loss!r}\n")
        fh.write(f"mean\t{report.mse_mean!r}\t{report.mae_mean!r}\t\n")
        if report.mse_std is not None:
            fh.write(f"std\t{report.mse_std!r}\t{report.mae_std!r}\t\n")
    with open(os.path.join(out_dir, "timing.txt"), "w") as fh:
        fh.write(f"wall_clock_seconds\t{report.wall_clock_seconds:.3f}\n")


def read_report(out_dir):
    path = os.path.join(out_dir, "report.json")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read report from {out_dir}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
