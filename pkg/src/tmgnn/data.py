"""Dataset ingestion, canonical storage, windowing, splitting and scaling.

A TemporalGraphDataset couples a fixed node set with a per-timestep case
matrix and either a static adjacency or a per-timestep mobility
adjacency. Canonical files are deterministic JSON documents so that a
load/save round-trip is byte-identical. Importers accept the published
raw layouts: a county edge list plus a wide weekly count table, and a
long-format daily mobility table plus a long-format daily case table.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError, DataError, ParseError
from .graphs import Graph
from .validation import check_finite, check_fraction

SCHEMA_VERSION = 1
_GRANULARITIES = ("week", "day")


@dataclass
class TemporalGraphDataset:
    """Region graph plus per-node case series.

    cases: (T, n) non-negative counts, one row per timestep.
    adjacency: static (n, n) symmetric weights, or None in mobility mode.
    mobility: (T, n, n) symmetric per-timestep weights, or None.
    Exactly one of adjacency / mobility must be present.
    """

    node_names: list
    granularity: str
    cases: np.ndarray
    adjacency: np.ndarray = None
    mobility: np.ndarray = None
    timestamps: list = None
    standardized: bool = False

    def __post_init__(self):
        if self.granularity not in _GRANULARITIES:
            raise DataError(
                f"granularity must be one of {_GRANULARITIES}, got {self.granularity!r}"
            )
        self.cases = np.asarray(self.cases, dtype=np.float64)
        if self.cases.ndim != 2:
            raise DataError(f"cases must be a (T, n) matrix, got shape {self.cases.shape}")
        if self.cases.shape[0] == 0:
            raise DataError("case series is empty")
        n = len(self.node_names)
        if self.cases.shape[1] != n:
            raise DataError(
                f"cases have {self.cases.shape[1]} columns for {n} nodes"
            )
        check_finite("cases", self.cases)
        if not self.standardized and np.any(self.cases < 0):
            raise DataError("case counts must be non-negative")
        if (self.adjacency is None) == (self.mobility is None):
            raise DataError("exactly one of adjacency or mobility must be set")
        if self.adjacency is not None:
            self.adjacency = np.asarray(self.adjacency, dtype=np.float64)
            if self.adjacency.shape != (n, n):
                raise DataError(
                    f"adjacency has shape {self.adjacency.shape}, expected ({n}, {n})"
                )
            if not np.array_equal(self.adjacency, self.adjacency.T):
                raise DataError("adjacency must be symmetric")
        if self.mobility is not None:
            self.mobility = np.asarray(self.mobility, dtype=np.float64)
            if self.mobility.shape != (self.T, n, n):
                raise DataError(
                    f"mobility has shape {self.mobility.shape}, expected ({self.T}, {n}, {n})"
                )
            for t in range(self.T):
                if not np.array_equal(self.mobility[t], self.mobility[t].T):
                    raise DataError(f"mobility matrix at timestep {t} is not symmetric")
        if self.timestamps is not None and len(self.timestamps) != self.T:
            raise DataError("timestamps length does not match series length")

    @property
    def n(self):
        return len(self.node_names)

    @property
    def T(self):
        return self.cases.shape[0]

    def adjacency_at(self, t):
        if self.mobility is not None:
            return self.mobility[t]
        return self.adjacency

    def graph_at(self, t, features):
        """Graph snapshot for anchor timestep t carrying the given features."""
        return Graph(
            adjacency=self.adjacency_at(t).copy(),
            features=features,
            labels=list(self.node_names),
        )


@dataclass(frozen=True)
class WindowedSample:
    """One forecasting sample: trailing lags as input, next d steps as target."""

    anchor: int
    inputs: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        if self.inputs.shape[0] != self.target.shape[0]:
            raise DataError("inputs and target disagree on node count")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8

    def __post_init__(self):
        check_fraction("train_fraction", self.train_fraction)


def make_windows(dataset, lags, horizon):
    """One sample per anchor t with inputs cases[t-lags+1..t] and targets
    cases[t+1..t+horizon]; inputs never touch the target window."""
    if lags < 1 or horizon < 1:
        raise ConfigurationError("lags and horizon must be >= 1")
    if dataset.T <= lags + horizon - 1:
        raise DataError(
            f"series of length {dataset.T} is too short for {lags} lags and "
            f"horizon {horizon}"
        )
    samples = []
    for anchor in range(lags - 1, dataset.T - horizon):
        inputs = dataset.cases[anchor - lags + 1: anchor + 1].T.copy()
        target = dataset.cases[anchor + 1: anchor + horizon + 1].T.copy()
        samples.append(WindowedSample(anchor=anchor, inputs=inputs, target=target))
    return samples


def split_windows(samples, spec):
    """Chronological split: the earliest train_fraction of anchors train."""
    ordered = sorted(samples, key=lambda s: s.anchor)
    n_train = int(np.floor(len(ordered) * spec.train_fraction))
    if n_train == 0 or n_train == len(ordered):
        raise DataError(
            f"train fraction {spec.train_fraction} leaves an empty split for "
            f"{len(ordered)} samples"
        )
    return ordered[:n_train], ordered[n_train:]


class NodeStandardizer:
    """Per-node z-scoring fitted on the training span of the series.

    Nodes with zero variance pass through unscaled. Also usable as a
    scikit-learn style transformer via fit/transform/inverse_transform.
    """

    def __init__(self):
        self.mean_ = None
        self.scale_ = None

    def fit(self, series, y=None):
        series = np.asarray(series, dtype=np.float64)
        if series.ndim != 2 or series.shape[0] == 0:
            raise ContractError("standardizer needs a non-empty (T, n) matrix")
        self.mean_ = series.mean(axis=0)
        std = series.std(axis=0)
        self.scale_ = np.where(std == 0.0, 1.0, std)
        return self

    def _check_fitted(self):
        if self.mean_ is None:
            raise ContractError("standardizer used before fit")

    def transform(self, series):
        self._check_fitted()
        return (np.asarray(series, dtype=np.float64) - self.mean_) / self.scale_

    def fit_transform(self, series, y=None):
        return self.fit(series).transform(series)

    def inverse_transform(self, series):
        self._check_fitted()
        return np.asarray(series, dtype=np.float64) * self.scale_ + self.mean_

    def to_dict(self):
        self._check_fitted()
        return {
            "mean": [float(v) for v in self.mean_],
            "scale": [float(v) for v in self.scale_],
        }

    @classmethod
    def from_dict(cls, doc):
        out = cls()
        out.mean_ = np.asarray(doc["mean"], dtype=np.float64)
        out.scale_ = np.asarray(doc["scale"], dtype=np.float64)
        return out


def standardize_dataset(dataset, fit_rows=None):
    """Copy of the dataset with z-scored cases, plus the fitted scaler.

    fit_rows bounds the rows used for statistics (exclusive end); pass the
    first test anchor + 1 to keep test targets out of the statistics.
    """
    end = dataset.T if fit_rows is None else int(fit_rows)
    if end < 1:
        raise ContractError("standardization needs at least one row of statistics")
    scaler = NodeStandardizer().fit(dataset.cases[:end])
    std_ds = TemporalGraphDataset(
        node_names=list(dataset.node_names),
        granularity=dataset.granularity,
        cases=scaler.transform(dataset.cases),
        adjacency=None if dataset.adjacency is None else dataset.adjacency.copy(),
        mobility=None if dataset.mobility is None else dataset.mobility.copy(),
        timestamps=list(dataset.timestamps) if dataset.timestamps is not None else None,
        standardized=True,
    )
    return std_ds, scaler


def _matrix_to_edges(matrix):
    edges = []
    n = matrix.shape[0]
    for i in range(n):
        for j in range(i, n):
            w = matrix[i, j]
            if w != 0.0:
                edges.append([i + 1, j + 1, float(w)])
    return edges


def _edges_to_matrix(edges, n, where):
    out = np.zeros((n, n), dtype=np.float64)
    for entry in edges:
        i, j, w = int(entry[0]) - 1, int(entry[1]) - 1, float(entry[2])
        if not (0 <= i < n and 0 <= j < n):
            raise DataError(f"{where}: edge endpoint out of range in {entry}")
        out[i, j] = w
        out[j, i] = w
    return out


def dataset_to_dict(dataset):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "granularity": dataset.granularity,
        "nodes": list(dataset.node_names),
        "cases": [[float(v) for v in row] for row in dataset.cases],
    }
    if dataset.timestamps is not None:
        doc["timestamps"] = list(dataset.timestamps)
    if dataset.adjacency is not None:
        doc["edges"] = _matrix_to_edges(dataset.adjacency)
    else:
        doc["edges_by_timestep"] = [
            _matrix_to_edges(dataset.mobility[t]) for t in range(dataset.T)
        ]
    return doc


def dataset_from_dict(doc, where="dataset document"):
    try:
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DataError(
                f"{where}: unsupported schema_version {doc.get('schema_version')!r}"
            )
        nodes = list(doc["nodes"])
        cases = np.asarray(doc["cases"], dtype=np.float64)
        n = len(nodes)
        adjacency = None
        mobility = None
        if "edges" in doc:
            adjacency = _edges_to_matrix(doc["edges"], n, where)
        elif "edges_by_timestep" in doc:
            per_step = doc["edges_by_timestep"]
            mobility = np.stack(
                [_edges_to_matrix(e, n, where) for e in per_step]
            ) if per_step else np.zeros((0, n, n))
        elif "mobility" in doc:
            mobility = _decode_rle(doc["mobility"], (len(cases), n, n), where)
        else:
            raise DataError(f"{where}: needs edges, edges_by_timestep or mobility")
        return TemporalGraphDataset(
            node_names=nodes,
            granularity=doc["granularity"],
            cases=cases,
            adjacency=adjacency,
            mobility=mobility,
            timestamps=doc.get("timestamps"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _encode_rle(array):
    """Run-length pairs [value, count] over the flattened array."""
    flat = np.asarray(array, dtype=np.float64).ravel()
    runs = []
    if flat.size == 0:
        return runs
    current = flat[0]
    count = 1
    for v in flat[1:]:
        if v == current:
            count += 1
        else:
            runs.append([float(current), count])
            current = v
            count = 1
    runs.append([float(current), count])
    return runs


def _decode_rle(runs, shape, where):
    total = int(np.prod(shape))
    flat = np.empty(total, dtype=np.float64)
    pos = 0
    for value, count in runs:
        count = int(count)
        if pos + count > total:
            raise DataError(f"{where}: run-length data overflows shape {shape}")
        flat[pos: pos + count] = float(value)
        pos += count
    if pos != total:
        raise DataError(f"{where}: run-length data covers {pos} of {total} values")
    return flat.reshape(shape)


def save_canonical(dataset, path, mobility_format="sparse"):
    doc = dataset_to_dict(dataset)
    if mobility_format == "rle" and dataset.mobility is not None:
        del doc["edges_by_timestep"]
        doc["mobility"] = _encode_rle(dataset.mobility)
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=1, sort_keys=True))
        fh.write("\n")


def load_canonical(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return dataset_from_dict(doc, where=str(path))


def _read_csv_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: file is empty")
    return rows


def import_chickenpox(edges_path, series_path):
    """Import the weekly county benchmark layout.

    edges file: header then one undirected 'name_1,name_2' pair per line
    (duplicates and reversed duplicates collapse to one edge).
    series file: header 'Date,<county>,...' then one row of weekly counts
    per date.
    """
    series_rows = _read_csv_rows(series_path)
    header = series_rows[0]
    if len(header) < 2:
        raise ParseError(f"{series_path}: line 1: expected a date column plus counties")
    names = [h.strip() for h in header[1:]]
    if len(set(names)) != len(names):
        raise DataError(f"{series_path}: duplicate county columns")
    timestamps = []
    counts = []
    for lineno, row in enumerate(series_rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"{series_path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        timestamps.append(row[0].strip())
        try:
            counts.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ParseError(f"{series_path}: line {lineno}: {exc}") from exc

    index = {name: i for i, name in enumerate(names)}
    edge_rows = _read_csv_rows(edges_path)
    seen = set()
    adjacency = np.zeros((len(names), len(names)), dtype=np.float64)
    for lineno, row in enumerate(edge_rows[1:], start=2):
        if len(row) < 2:
            raise ParseError(f"{edges_path}: line {lineno}: expected two county names")
        a, b = row[0].strip(), row[1].strip()
        for name in (a, b):
            if name not in index:
                raise DataError(f"{edges_path}: line {lineno}: unknown county {name!r}")
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        adjacency[index[a], index[b]] = 1.0
        adjacency[index[b], index[a]] = 1.0
    return TemporalGraphDataset(
        node_names=names,
        granularity="week",
        cases=np.asarray(counts, dtype=np.float64),
        adjacency=adjacency,
        timestamps=timestamps,
    )


def import_mobility(mobility_path, cases_path, allow_gaps=False):
    """Import long-format daily mobility plus daily case counts.

    mobility file: header then 'date,source,target,count' rows; both
    directions are summed into one symmetric weight, and source==target
    rows become self-loop weights.
    cases file: header then 'date,region,cases' rows.
    Consecutive calendar order is taken from the sorted distinct dates;
    missing days between them raise unless allow_gaps is set.
    """
    case_rows = _read_csv_rows(cases_path)
    regions = set()
    dates = set()
    case_entries = []
    for lineno, row in enumerate(case_rows[1:], start=2):
        if len(row) != 3:
            raise ParseError(f"{cases_path}: line {lineno}: expected date,region,cases")
        date, region, value = row[0].strip(), row[1].strip(), row[2].strip()
        try:
            value = float(value)
        except ValueError as exc:
            raise ParseError(f"{cases_path}: line {lineno}: {exc}") from exc
        regions.add(region)
        dates.add(date)
        case_entries.append((date, region, value))

    mob_rows = _read_csv_rows(mobility_path)
    mob_entries = []
    for lineno, row in enumerate(mob_rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(
                f"{mobility_path}: line {lineno}: expected date,source,target,count"
            )
        date, src, dst, value = (f.strip() for f in row)
        try:
            value = float(value)
        except ValueError as exc:
            raise ParseError(f"{mobility_path}: line {lineno}: {exc}") from exc
        for name in (src, dst):
            if name not in regions:
                raise DataError(
                    f"{mobility_path}: line {lineno}: region {name!r} has no case series"
                )
        if date not in dates:
            raise DataError(
                f"{mobility_path}: line {lineno}: date {date!r} has no case rows"
            )
        mob_entries.append((date, src, dst, value))

    names = sorted(regions)
    order = sorted(dates)
    if not allow_gaps:
        _check_day_gaps(order, cases_path)
    index = {name: i for i, name in enumerate(names)}
    day = {date: t for t, date in enumerate(order)}
    n, T = len(names), len(order)
    cases = np.full((T, n), np.nan)
    for date, region, value in case_entries:
        cases[day[date], index[region]] = value
    if np.any(np.isnan(cases)):
        t, v = map(int, np.argwhere(np.isnan(cases))[0])
        raise DataError(
            f"{cases_path}: missing case count for region {names[v]!r} on {order[t]}"
        )
    raw = np.zeros((T, n, n), dtype=np.float64)
    for date, src, dst, value in mob_entries:
        raw[day[date], index[src], index[dst]] += value
    mobility = np.empty_like(raw)
    for t in range(T):
        m = raw[t]
        sym = m + m.T
        np.fill_diagonal(sym, np.diag(m))
        mobility[t] = sym
    return TemporalGraphDataset(
        node_names=names,
        granularity="day",
        cases=cases,
        mobility=mobility,
        timestamps=order,
    )


def _check_day_gaps(order, where):
    """Reject non-consecutive ISO dates unless the caller allows gaps."""
    import datetime

    parsed = []
    for d in order:
        try:
            parsed.append(datetime.date.fromisoformat(d))
        except ValueError:
            return  # non-ISO timestamps: gap checking is not meaningful
    for a, b in zip(parsed, parsed[1:]):
        if (b - a).days != 1:
            raise DataError(
                f"{where}: day gap between {a} and {b}; pass allow_gaps to accept"
            )
