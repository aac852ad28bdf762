"""CSV import/export.  Every file has a header row; floats use ``repr`` for exact round trips."""
from __future__ import annotations

import csv

import numpy as np

__all__ = [
    "write_csv",
    "read_csv",
    "write_trace_csv",
    "write_timings_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_grid_csv",
    "read_grid_csv",
    "write_value_csv",
    "write_policy_csv",
    "write_qfactor_csv",
    "write_data_valuation_csv",
]


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def read_csv(path):
    """Return ``(header, rows)`` with rows as lists of strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def write_trace_csv(path, trace):
    write_csv(path, ["iteration", "sup_distance"], ((k + 1, d) for k, d in enumerate(trace)))


def write_timings_csv(path, rows):
    write_csv(path, ["algorithm", "m", "seconds", "iterations"],
              ((r.algorithm, r.m, r.seconds, r.iterations) for r in rows))


def write_matrix_csv(path, P):
    P = getattr(P, "p", P)
    P = np.asarray(P, dtype=float)
    write_csv(path, [f"to_{j}" for j in range(P.shape[1])], P.tolist())


def read_matrix_csv(path):
    _, rows = read_csv(path)
    return np.array([[float(x) for x in row] for row in rows])


def write_grid_csv(path, grid):
    write_csv(path, ["grid"], ([g] for g in np.asarray(grid, dtype=float)))


def read_grid_csv(path):
    _, rows = read_csv(path)
    return np.array([float(row[0]) for row in rows])


def write_value_csv(path, v, coords=None):
    """One row per state: index, optional coordinate columns (``{name: array}``), ``v_star``."""
    v = np.asarray(v, dtype=float)
    coords = coords or {}
    cols = [np.asarray(c) for c in coords.values()]
    write_csv(path, ["state", *coords, "v_star"],
              ([x, *(c[x] for c in cols), v[x]] for x in range(len(v))))


def write_policy_csv(path, sigma):
    write_csv(path, ["state", "action"], ((x, int(a)) for x, a in enumerate(sigma)))


def write_qfactor_csv(path, space, q):
    write_csv(path, ["state", "action", "q_value"],
              ((int(x), int(a), q[i]) for i, (x, a) in enumerate(space.pairs)))


def write_data_valuation_csv(path, model, v):
    nb, ns = model.shape
    V = np.asarray(v, dtype=float).reshape(nb, ns)
    write_csv(path, ["b", "s", "v_star"],
              ((model.b_grid[i], model.s_grid[j], V[i, j]) for i in range(nb) for j in range(ns)))
