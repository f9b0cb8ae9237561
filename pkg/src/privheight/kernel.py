"""Gaussian (RBF) kernel evaluation.

Convention: k(a, b) = exp(-gamma_g * ||a - b||^2).  The width gamma_g
multiplies the squared distance directly (no 1/(2 sigma^2) rescaling),
so grid-search values are interpretable as-is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelParams:
    gamma_g: float

    def __post_init__(self) -> None:
        if not (self.gamma_g > 0) or not np.isfinite(self.gamma_g):
            raise KernelError(f"gamma_g must be a positive finite scalar, got {self.gamma_g}")


def kernel_value(a, b, params: KernelParams) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise KernelError(f"dimension mismatch: {a.size} vs {b.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise KernelError("non-finite input components")
    d = a - b
    return float(np.exp(-params.gamma_g * (d @ d)))


def kernel_matrix(rows, cols, params: KernelParams) -> np.ndarray:
    """Entry (i, j) = kernel_value(rows[i], cols[j]); symmetric PSD when rows is cols."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    cols = np.atleast_2d(np.asarray(cols, dtype=float))
    if rows.shape[1] != cols.shape[1]:
        raise KernelError(f"dimension mismatch: {rows.shape[1]} vs {cols.shape[1]}")
    if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(cols))):
        raise KernelError("non-finite input components")
    sq = (
        np.sum(rows**2, axis=1)[:, None]
        + np.sum(cols**2, axis=1)[None, :]
        - 2.0 * rows @ cols.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-params.gamma_g * sq)
