"""Couplings by change of measure on top of a simulated base path.

The partner process is never integrated: it is defined by the exact linear
bridge, partner = base + offset(t), which makes the coupling identity hold
to floating-point accuracy at every grid node.  The Girsanov weight is
accumulated in log space with left-point Ito sums against the stored
Brownian increments.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError
from .paths import (
    SamplePath,
    _batch_chunks,
    _sigma_per_step,
    brownian_increments_batch,
    simulate_path,
)

__all__ = [
    "CouplingKind",
    "CoupledSample",
    "harnack_coupling",
    "shift_coupling",
    "weight",
    "coupled_terminals",
]


class CouplingKind(Enum):
    HARNACK = "harnack"
    SHIFT = "shift"


@dataclass
class CoupledSample:
    """One coupled pair: base path, algebraic partner, and its weight."""

    base: SamplePath
    partner: np.ndarray  # (n_steps + 1, d)
    phi: np.ndarray  # (n_steps + 1, d), drift correction at each node
    log_weight: float
    kind: CouplingKind
    x: np.ndarray
    y: np.ndarray
    phi_sq_integral: float  # discretized integral of |sigma*(sigma sigma*)^{-1} phi|^2


def _bridge(kind, x, y, T, nodes):
    """Partner offsets at the grid nodes and the constant drift correction."""
    if kind is CouplingKind.HARNACK:
        v = (x - y) / T
        offsets = ((nodes - T) / T)[:, None] * (x - y)[None, :]
    else:
        v = y / T
        offsets = (nodes / T)[:, None] * y[None, :]
    return offsets, v


def _weights_per_step(diff, grid):
    return [diff.weight_at(t) for t in grid.nodes[:-1]]


def _coupling(kind, drift, diff, x, y, grid, stream_id, seed):
    d = diff.d
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (d,) or y.shape != (d,):
        raise DimensionMismatchError("coupling endpoints must have dimension d")
    base = simulate_path(drift, diff, x, grid, stream_id, seed)
    nodes = grid.nodes
    offsets, v = _bridge(kind, x, y, grid.T, nodes)
    partner = base.states + offsets

    phi = np.empty_like(base.states)
    for k, t in enumerate(nodes):
        phi[k] = (
            drift.evaluate(t, base.states[k][None, :])[0]
            - drift.evaluate(t, partner[k][None, :])[0]
            + v
        )

    wmats = _weights_per_step(diff, grid)
    h = grid.h
    log_w = 0.0
    phi_sq = 0.0
    for k in range(grid.n_steps):
        theta = wmats[k] @ phi[k]
        sq = float(theta @ theta)
        log_w -= float(theta @ base.increments[k]) + 0.5 * sq * h
        phi_sq += sq * h
    return CoupledSample(
        base=base,
        partner=partner,
        phi=phi,
        log_weight=log_w,
        kind=kind,
        x=x,
        y=y,
        phi_sq_integral=phi_sq,
    )


def harnack_coupling(drift, diff, x, y, grid, stream_id, seed):
    """Coupling with Y_s = X_s + (s - T)(x - y)/T, so X_T = Y_T."""
    return _coupling(CouplingKind.HARNACK, drift, diff, x, y, grid, stream_id, seed)


def shift_coupling(drift, diff, x, y, grid, stream_id, seed):
    """Coupling with Y_s = X_s + (s/T) y, so Y_T = X_T + y."""
    return _coupling(CouplingKind.SHIFT, drift, diff, x, y, grid, stream_id, seed)


def weight(sample):
    """exp(log weight); +inf on overflow (flagged downstream, never silent)."""
    with np.errstate(over="ignore"):
        return float(np.exp(sample.log_weight))


def coupled_terminals(kind, drift, diff, x, y, grid, stream_ids, seed):
    """Batch coupling: terminal base states, log-weights and phi integrals.

    Returns a dict with arrays ``x_T`` (n, d), ``log_weight`` (n,),
    ``phi_sq_integral`` (n,) and ``diverged_step`` (n,), all ordered by
    stream id position.
    """
    d, m = diff.dims
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (d,) or y.shape != (d,) or drift.dim_d != d:
        raise DimensionMismatchError("coupling endpoints must have dimension d")
    ids = np.asarray(stream_ids)
    n = len(ids)
    nodes = grid.nodes
    offsets, v = _bridge(kind, x, y, grid.T, nodes)
    sig_t = _sigma_per_step(diff, grid)
    wmat_t = [w.T for w in _weights_per_step(diff, grid)]
    h = grid.h

    x_T = np.empty((n, d))
    log_w = np.zeros(n)
    phi_sq = np.zeros(n)
    diverged = np.full(n, -1, dtype=np.int64)
    for lo, hi in _batch_chunks(n):
        dw = brownian_increments_batch(ids[lo:hi], grid, m, seed)
        xs = np.tile(x, (hi - lo, 1))
        lw = log_w[lo:hi]
        ps = phi_sq[lo:hi]
        alive_step = diverged[lo:hi]
        for k in range(grid.n_steps):
            b_base = drift.evaluate(nodes[k], xs)
            b_partner = drift.evaluate(nodes[k], xs + offsets[k])
            phi = b_base - b_partner + v
            theta = phi @ wmat_t[k]
            sq = np.einsum("ij,ij->i", theta, theta)
            lw -= np.einsum("ij,ij->i", theta, dw[:, k, :]) + 0.5 * sq * h
            ps += sq * h
            xs = xs + b_base * h + dw[:, k, :] @ sig_t[k]
            bad = ~np.all(np.isfinite(xs), axis=1)
            newly = bad & (alive_step < 0)
            if np.any(newly):
                alive_step[newly] = k
        x_T[lo:hi] = xs
    return {
        "x_T": x_T,
        "log_weight": log_w,
        "phi_sq_integral": phi_sq,
        "diverged_step": diverged,
    }
