"""Temporal multiresolution graph forecasting toolkit.

Learns a hierarchy of graph coarsenings per timestep, selects one
resolution via attention, and forecasts per-region epidemic case counts
with a recurrent backbone. The headline API is TmgnnForecaster, a
scikit-learn style estimator over TemporalGraphDataset inputs.
"""

from .attention import AttentionConfig, Selection, multi_head, select_resolution, self_attention
from .autodiff import Tape, Tensor, gumbel_softmax, softmax_rows
from .baselines import baseline_avg, baseline_avg_window, baseline_forecast, baseline_last_day
from .data import (
    NodeStandardizer,
    SplitSpec,
    TemporalGraphDataset,
    WindowedSample,
    import_chickenpox,
    import_mobility,
    load_canonical,
    make_windows,
    save_canonical,
    split_windows,
    standardize_dataset,
)
from .errors import (
    ConfigurationError,
    ContractError,
    DataError,
    DegenerateGraphError,
    ParseError,
    ShapeError,
    TmgnnError,
)
from .estimator import BaselineForecaster, TmgnnForecaster
from .graphs import (
    Graph,
    Partition,
    assignment_matrix,
    coarsen,
    load_graph,
    normalized_laplacian,
    permute_graph,
    quadratic_coarsen,
    save_graph,
)
from .harness import (
    MetricsReport,
    TrainConfig,
    evaluate_baseline_mae,
    evaluate_mae,
    evaluate_mse,
    load_config,
    run_experiment,
)
from .mgn import MgnConfig, ResolutionHierarchy, build_hierarchy, cluster, encode, mgn_regression_loss, pool, readout
from .model import ModelConfig, StepNoise, TmgnnModel, load_checkpoint, save_checkpoint, tmgnn_forward
from .optim import Adam
from .recurrent import RecurrentState, cell_step, gru_cell, initial_state, lstm_cell
from .rng import Rng
from .synthetic import make_mobility_epidemic, make_weekly_epidemic

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AttentionConfig",
    "BaselineForecaster",
    "ConfigurationError",
    "ContractError",
    "DataError",
    "DegenerateGraphError",
    "Graph",
    "MetricsReport",
    "MgnConfig",
    "ModelConfig",
    "NodeStandardizer",
    "ParseError",
    "Partition",
    "RecurrentState",
    "ResolutionHierarchy",
    "Rng",
    "Selection",
    "ShapeError",
    "SplitSpec",
    "StepNoise",
    "Tape",
    "TemporalGraphDataset",
    "Tensor",
    "TmgnnError",
    "TmgnnForecaster",
    "TmgnnModel",
    "TrainConfig",
    "WindowedSample",
    "assignment_matrix",
    "baseline_avg",
    "baseline_avg_window",
    "baseline_forecast",
    "baseline_last_day",
    "build_hierarchy",
    "cell_step",
    "cluster",
    "coarsen",
    "encode",
    "evaluate_baseline_mae",
    "evaluate_mae",
    "evaluate_mse",
    "gru_cell",
    "gumbel_softmax",
    "import_chickenpox",
    "import_mobility",
    "initial_state",
    "load_canonical",
    "load_checkpoint",
    "load_config",
    "load_graph",
    "lstm_cell",
    "make_mobility_epidemic",
    "make_weekly_epidemic",
    "make_windows",
    "mgn_regression_loss",
    "multi_head",
    "normalized_laplacian",
    "permute_graph",
    "pool",
    "quadratic_coarsen",
    "readout",
    "run_experiment",
    "save_canonical",
    "save_checkpoint",
    "save_graph",
    "select_resolution",
    "self_attention",
    "softmax_rows",
    "split_windows",
    "standardize_dataset",
    "tmgnn_forward",
]
