"""Seedable Brownian increments and Euler-Maruyama integration.

Each sample path is a pure function of (seed, stream_id): increments come
from a counter-based generator, so batches can be produced by any number of
workers in any order with bit-identical results.
"""

from dataclasses import dataclass

import numpy as np

from ._rng import stream_normals
from .errors import DimensionMismatchError, DivergedPathError

__all__ = [
    "TimeGrid",
    "SamplePath",
    "brownian_increments",
    "brownian_increments_batch",
    "simulate_path",
    "terminal_states",
    "occupation_sums",
]

CHUNK = 1 << 14


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with n_steps steps."""

    T: float
    n_steps: int

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("time horizon must be positive")
        if self.n_steps < 1:
            raise ValueError("need at least one step")

    @property
    def h(self):
        return self.T / self.n_steps

    @property
    def nodes(self):
        return np.linspace(0.0, self.T, self.n_steps + 1)


@dataclass
class SamplePath:
    """One simulated path with its driving increments."""

    grid: TimeGrid
    states: np.ndarray  # (n_steps + 1, d)
    increments: np.ndarray  # (n_steps, m)
    stream_id: int


def brownian_increments(stream_id, grid, m, seed):
    """i.i.d. N(0, h I_m) increments for one stream, shape (n_steps, m)."""
    flat = stream_normals(seed, [stream_id], grid.n_steps * m)[0]
    return np.sqrt(grid.h) * flat.reshape(grid.n_steps, m)


def brownian_increments_batch(stream_ids, grid, m, seed):
    """Increments for many streams at once, shape (n, n_steps, m).

    Row i equals ``brownian_increments(stream_ids[i], ...)`` exactly.
    """
    ids = np.asarray(stream_ids)
    flat = stream_normals(seed, ids, grid.n_steps * m)
    return np.sqrt(grid.h) * flat.reshape(len(ids), grid.n_steps, m)


def _sigma_per_step(diff, grid):
    """Transposed sigma at each left node, reused across chunks."""
    return [diff.sigma_at(t).T for t in grid.nodes[:-1]]


def simulate_path(drift, diff, x0, grid, stream_id, seed):
    """Euler-Maruyama path from x0, with stored states and increments."""
    d, m = diff.dims
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d,) or drift.dim_d != d:
        raise DimensionMismatchError("initial point / drift / sigma dimensions differ")
    dw = brownian_increments(stream_id, grid, m, seed)
    sig_t = _sigma_per_step(diff, grid)
    h = grid.h
    nodes = grid.nodes
    states = np.empty((grid.n_steps + 1, d))
    states[0] = x0
    x = x0[None, :]
    for k in range(grid.n_steps):
        b = drift.evaluate(nodes[k], x)
        x = x + b * h + dw[k][None, :] @ sig_t[k]
        if not np.all(np.isfinite(x)):
            raise DivergedPathError(k)
        states[k + 1] = x[0]
    return SamplePath(grid=grid, states=states, increments=dw, stream_id=stream_id)


def _batch_chunks(n):
    for start in range(0, n, CHUNK):
        yield start, min(n, start + CHUNK)


def terminal_states(drift, diff, x0, grid, stream_ids, seed):
    """Terminal points X_T for a batch of streams.

    Returns (X_T array of shape (n, d), diverged_step int array; -1 where
    the path stayed finite).
    """
    d, m = diff.dims
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d,) or drift.dim_d != d:
        raise DimensionMismatchError("initial point / drift / sigma dimensions differ")
    ids = np.asarray(stream_ids)
    n = len(ids)
    out = np.empty((n, d))
    diverged = np.full(n, -1, dtype=np.int64)
    sig_t = _sigma_per_step(diff, grid)
    h = grid.h
    nodes = grid.nodes
    for lo, hi in _batch_chunks(n):
        dw = brownian_increments_batch(ids[lo:hi], grid, m, seed)
        x = np.tile(x0, (hi - lo, 1))
        alive_step = diverged[lo:hi]
        for k in range(grid.n_steps):
            b = drift.evaluate(nodes[k], x)
            x = x + b * h + dw[:, k, :] @ sig_t[k]
            bad = ~np.all(np.isfinite(x), axis=1)
            newly = bad & (alive_step < 0)
            if np.any(newly):
                alive_step[newly] = k
        out[lo:hi] = x
    return out, diverged


def occupation_sums(drift, diff, x0, grid, stream_ids, seed, fs):
    """Per-path Riemann sums h * sum_k f(t_k, X_k) for each f in fs.

    Left-point rule on the same grid as the integrator.  Returns
    (sums of shape (n, len(fs)), diverged_step array).
    """
    d, m = diff.dims
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d,) or drift.dim_d != d:
        raise DimensionMismatchError("initial point / drift / sigma dimensions differ")
    ids = np.asarray(stream_ids)
    n = len(ids)
    sums = np.zeros((n, len(fs)))
    diverged = np.full(n, -1, dtype=np.int64)
    sig_t = _sigma_per_step(diff, grid)
    h = grid.h
    nodes = grid.nodes
    for lo, hi in _batch_chunks(n):
        dw = brownian_increments_batch(ids[lo:hi], grid, m, seed)
        x = np.tile(x0, (hi - lo, 1))
        alive_step = diverged[lo:hi]
        acc = sums[lo:hi]
        for k in range(grid.n_steps):
            for j, f in enumerate(fs):
                acc[:, j] += h * f(nodes[k], x)
            b = drift.evaluate(nodes[k], x)
            x = x + b * h + dw[:, k, :] @ sig_t[k]
            bad = ~np.all(np.isfinite(x), axis=1)
            newly = bad & (alive_step < 0)
            if np.any(newly):
                alive_step[newly] = k
    return sums, diverged
