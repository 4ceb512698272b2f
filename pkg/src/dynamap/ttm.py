"""Transfer-tensor decomposition and time-nonlocal extrapolation.

A series of cumulative maps E(t_n, t_0) is decomposed into tensors

    T(t_n) = E(t_n, t_0) - sum_{m=1}^{n-1} T(t_{n-m}) E(t_m, t_0),

so T(t_1) is the single-step map and later tensors carry the temporal
correlations. Resumming the recursion reproduces the input maps exactly,
and truncating the tensors beyond a memory cutoff turns the relation

    rho(t_n) = sum_k T(t_{n-k}) rho(t_k)

into a long-time propagation scheme that only needs short-time data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffExceedsData, DimensionMismatch
from .maps import DynamicalMapSeries, devectorize, vectorize

__all__ = ["TransferTensorSeries", "decompose", "extrapolate", "tensor_norm_profile"]


@dataclass(frozen=True)
class TransferTensorSeries:
    """Tensors T(t_n), n = 1..N, on the grid of the source map series."""

    dt: float
    tensors: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)

    def __post_init__(self):
        tensors = np.asarray(self.tensors, dtype=complex).copy()
        tensors.flags.writeable = False
        object.__setattr__(self, "tensors", tensors)
        norms = np.asarray(self.norms, dtype=float).copy()
        norms.flags.writeable = False
        object.__setattr__(self, "norms", norms)

    @classmethod
    def from_tensors(cls, dt: float, tensors: np.ndarray) -> "TransferTensorSeries":
        tensors = np.asarray(tensors, dtype=complex)
        norms = np.array([np.linalg.norm(t) for t in tensors])
        return cls(dt=dt, tensors=tensors, norms=norms)

    def __len__(self) -> int:
        return self.tensors.shape[0]

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.tensors.shape[1])))

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, len(self) + 1)


def decompose(series: DynamicalMapSeries) -> TransferTensorSeries:
    """Forward recursion for the transfer tensors of a map series."""
    if len(series) == 0:
        raise DimensionMismatch("empty map series")
    maps = series.maps
    n_steps = len(series)
    tensors = np.empty_like(maps)
    tensors[0] = maps[0]
    for n in range(1, n_steps):
        acc = maps[n].copy()
        for m in range(1, n + 1):
            # subtract T(t_{n+1-m}) E(t_m, t_0); recursion index shifted to 0-based
            acc -= tensors[n - m] @ maps[m - 1]
        tensors[n] = acc
    return TransferTensorSeries.from_tensors(dt=series.dt, tensors=tensors)


def extrapolate(
    tensors: TransferTensorSeries,
    initial: np.ndarray,
    cutoff_steps: int,
    total_steps: int,
) -> np.ndarray:
    """Propagate an initial state with tensors truncated beyond the cutoff.

    Tensors with index above ``cutoff_steps`` are treated as zero; only the
    last ``cutoff_steps`` states are kept in memory. Returns the states at
    steps 0..total_steps as an (total_steps + 1, D, D) array.
    """
    k = int(cutoff_steps)
    if k < 1:
        raise CutoffExceedsData("cutoff_steps must be at least 1")
    if k > len(tensors):
        raise CutoffExceedsData(
            f"cutoff of {k} steps exceeds the {len(tensors)} available tensors"
        )
    dim = tensors.dim
    active = tensors.tensors[:k]

    states = np.empty((total_steps + 1, dim, dim), dtype=complex)
    states[0] = np.asarray(initial, dtype=complex)
    # history[j] = vec(rho(t_{n-1-j})), most recent first, at most k entries
    history = np.zeros((k, dim * dim), dtype=complex)
    history[0] = vectorize(initial)
    filled = 1
    for n in range(1, total_steps + 1):
        terms = min(filled, k)
        vec = np.einsum("kab,kb->a", active[:terms], history[:terms])
        states[n] = devectorize(vec)
        history[1:] = history[:-1]
        history[0] = vec
        filled = min(filled + 1, k)
    return states


def tensor_norm_profile(tensors: TransferTensorSeries) -> tuple[np.ndarray, np.ndarray]:
    """(time, Frobenius norm) pairs for decay diagnostics."""
    return tensors.times, tensors.norms.copy()
