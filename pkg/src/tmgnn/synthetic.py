"""Seeded synthetic corpora used when the real benchmark files are absent.

Two generators: a weekly county-style epidemic with a fixed 20-node,
61-edge contact graph and seasonal, spatially-correlated counts; and a
daily mobility corpus whose case counts come from a diffusion process
over per-day movement matrices. Both are pure functions of the seed.
"""

import csv

import numpy as np

from .data import TemporalGraphDataset
from .errors import ConfigurationError
from .rng import Rng


def _random_connected_graph(n, n_edges, gen):
    """Uniform spanning-tree skeleton plus random extra edges."""
    max_edges = n * (n - 1) // 2
    if n_edges < n - 1 or n_edges > max_edges:
        raise ConfigurationError(
            f"cannot place {n_edges} edges on {n} nodes (need {n - 1}..{max_edges})"
        )
    adjacency = np.zeros((n, n), dtype=np.float64)
    nodes = list(range(1, n))
    connected = [0]
    while nodes:
        i = connected[gen.integers(0, len(connected))]
        j = nodes.pop(gen.integers(0, len(nodes)))
        adjacency[i, j] = adjacency[j, i] = 1.0
        connected.append(j)
    placed = n - 1
    while placed < n_edges:
        i = gen.integers(0, n)
        j = gen.integers(0, n)
        if i != j and adjacency[i, j] == 0.0:
            adjacency[i, j] = adjacency[j, i] = 1.0
            placed += 1
    return adjacency


def make_weekly_epidemic(seed=0, n_nodes=20, n_edges=61, n_weeks=522):
    """Weekly count corpus shaped like the county benchmark.

    Counts follow per-node seasonal intensities with AR(1) noise smoothed
    over the contact graph, so neighboring nodes correlate and trailing
    lags carry real signal.
    """
    rng = Rng(seed, stream=101)
    adjacency = _random_connected_graph(n_nodes, n_edges, rng)
    names = [f"REGION_{i:02d}" for i in range(n_nodes)]

    base = rng.uniform(40.0, 160.0, (n_nodes,))
    season_amp = rng.uniform(0.25, 0.6, (n_nodes,))
    phase = rng.uniform(0.0, 2.0 * np.pi, (n_nodes,))
    # Neighbor-averaging mixing matrix couples nearby nodes' noise.
    deg = adjacency.sum(axis=1)
    mix = 0.6 * np.eye(n_nodes) + 0.4 * adjacency / deg[:, None]

    weeks = np.arange(n_weeks)
    season = 1.0 + season_amp[None, :] * np.sin(
        2.0 * np.pi * weeks[:, None] / 52.0 + phase[None, :]
    )
    noise = np.zeros((n_weeks, n_nodes))
    eps = rng.uniform(-1.0, 1.0, (n_weeks, n_nodes))
    for t in range(1, n_weeks):
        noise[t] = 0.75 * noise[t - 1] + 0.25 * (mix @ eps[t])
    counts = np.maximum(np.rint(base[None, :] * season * (1.0 + 0.8 * noise)), 0.0)
    timestamps = [f"{2005 + w // 52:04d}-W{w % 52 + 1:02d}" for w in range(n_weeks)]
    return TemporalGraphDataset(
        node_names=names,
        granularity="week",
        cases=counts,
        adjacency=adjacency,
        timestamps=timestamps,
    )


def make_mobility_epidemic(seed=0, n_regions=30, n_days=120):
    """Daily mobility corpus with diffusion-generated case counts.

    Movement follows a gravity-style base matrix with daily noise; cases
    evolve by local growth waves plus diffusion of infections along the
    normalized mobility, giving smooth trends that trailing lags can
    extrapolate.
    """
    rng = Rng(seed, stream=202)
    pop = rng.uniform(1.0, 6.0, (n_regions,))
    coords = rng.uniform(0.0, 1.0, (n_regions, 2))
    dist = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2))
    base_flow = 40.0 * np.outer(pop, pop) * np.exp(-4.0 * dist)
    np.fill_diagonal(base_flow, 120.0 * pop)

    mobility = np.empty((n_days, n_regions, n_regions))
    for t in range(n_days):
        jitter = rng.uniform(0.7, 1.3, (n_regions, n_regions))
        m = np.rint(base_flow * jitter)
        sym = m + m.T
        np.fill_diagonal(sym, np.diag(m))
        mobility[t] = sym

    # Two epidemic waves: growth rate swings positive then negative.
    days = np.arange(n_days)
    growth = 0.09 * np.sin(2.0 * np.pi * days / 60.0) + 0.015
    infections = rng.uniform(2.0, 10.0, (n_regions,))
    cases = np.empty((n_days, n_regions))
    for t in range(n_days):
        flow = mobility[t] / mobility[t].sum(axis=1, keepdims=True)
        spread = flow @ infections
        shock = 1.0 + 0.05 * rng.uniform(-1.0, 1.0, (n_regions,))
        infections = np.maximum(
            (infections + growth[t] * spread) * shock, 0.5
        )
        cases[t] = np.rint(infections)
    timestamps = [_iso_day(t) for t in range(n_days)]
    return TemporalGraphDataset(
        node_names=[f"NUTS_{i:03d}" for i in range(n_regions)],
        granularity="day",
        cases=cases,
        mobility=mobility,
        timestamps=timestamps,
    )


def _iso_day(offset, start="2020-03-01"):
    import datetime

    d = datetime.date.fromisoformat(start) + datetime.timedelta(days=offset)
    return d.isoformat()


def write_raw_weekly_files(dataset, edges_path, series_path):
    """Emit a weekly dataset in the raw benchmark layout (edge list + wide table)."""
    with open(edges_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name_1", "name_2"])
        n = dataset.n
        for i in range(n):
            for j in range(i + 1, n):
                if dataset.adjacency[i, j] != 0.0:
                    writer.writerow([dataset.node_names[i], dataset.node_names[j]])
    with open(series_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Date"] + list(dataset.node_names))
        for t in range(dataset.T):
            stamp = dataset.timestamps[t] if dataset.timestamps else str(t)
            writer.writerow([stamp] + [_fmt_count(v) for v in dataset.cases[t]])


def write_raw_mobility_files(dataset, mobility_path, cases_path):
    """Emit a daily dataset in the long-format mobility + cases layout."""
    with open(mobility_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "source", "target", "count"])
        for t in range(dataset.T):
            stamp = dataset.timestamps[t] if dataset.timestamps else str(t)
            m = dataset.mobility[t]
            for i in range(dataset.n):
                for j in range(i, dataset.n):
                    if m[i, j] != 0.0:
                        # Halve off-diagonal mass so import symmetrization restores it.
                        w = m[i, j] if i == j else m[i, j] / 2.0
                        writer.writerow(
                            [stamp, dataset.node_names[i], dataset.node_names[j], _fmt_count(w)]
                        )
    with open(cases_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "region", "cases"])
        for t in range(dataset.T):
            stamp = dataset.timestamps[t] if dataset.timestamps else str(t)
            for i, name in enumerate(dataset.node_names):
                writer.writerow([stamp, name, _fmt_count(dataset.cases[t, i])])


def _fmt_count(v):
    v = float(v)
    return str(int(v)) if v == int(v) else repr(v)
