"""Statistical forecasting baselines: historical average, last observed
value, and trailing-window average. All are deterministic functions of
the observed history and repeat one per-region value across the horizon.
"""

import numpy as np

from .errors import ConfigurationError, DataError

BASELINE_KINDS = ("avg", "last_day", "avg_window")


def baseline_avg(history):
    """Per-region mean over the entire observed history."""
    history = _check_history(history)
    return history.mean(axis=0)


def baseline_last_day(history):
    """The most recent observation per region."""
    history = _check_history(history)
    return history[-1].copy()


def baseline_avg_window(history, window=7):
    """Per-region mean over the trailing ``window`` observations."""
    history = _check_history(history)
    if window < 1:
        raise ConfigurationError(f"window must be >= 1, got {window}")
    if history.shape[0] < window:
        raise DataError(
            f"history of length {history.shape[0]} is shorter than window {window}"
        )
    return history[-window:].mean(axis=0)


def _check_history(history):
    history = np.asarray(history, dtype=np.float64)
    if history.ndim == 1:
        history = history[:, None]
    if history.shape[0] == 0:
        raise DataError("baseline needs a non-empty history")
    return history


def baseline_forecast(history, horizon, kind, window=7):
    """(n, horizon) forecast repeating the per-region baseline value."""
    if kind == "avg":
        value = baseline_avg(history)
    elif kind == "last_day":
        value = baseline_last_day(history)
    elif kind == "avg_window":
        value = baseline_avg_window(history, window=window)
    else:
        raise ConfigurationError(
            f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}"
        )
    return np.repeat(value[:, None], horizon, axis=1)


def baseline_predictions(series, anchors, horizon, kind, window=7):
    """Stack of (n, horizon) forecasts, one per anchor timestep.

    The history for anchor t is series[0..t], so predictions only ever
    see values observable before the target window.
    """
    series = np.asarray(series, dtype=np.float64)
    out = []
    for anchor in anchors:
        out.append(baseline_forecast(series[: anchor + 1], horizon, kind, window))
    return np.stack(out) if out else np.zeros((0, series.shape[1], horizon))
