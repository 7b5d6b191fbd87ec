"""Rank-based copula entropy estimation.

The estimator has two steps: map each column to its normalized ranks (the
empirical copula sample), then estimate the differential entropy of that
sample with the Kozachenko-Leonenko k-nearest-neighbor estimator under the
Chebyshev norm. Mutual information is the negated copula entropy.

Every result is a pure function of its inputs. Sums over samples use
``math.fsum`` so the output does not depend on row order.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma
from scipy.stats import rankdata

from .errors import DataQualityError, InsufficientSamplesError

__all__ = [
    "KnnConfig",
    "as_sample_matrix",
    "rank_transform",
    "knn_entropy",
    "copula_entropy",
    "mutual_information",
]


@dataclass(frozen=True)
class KnnConfig:
    """Neighbor count and zero-distance clamp for the kNN entropy estimator."""

    k: int = 3
    distance_floor: float = 1e-12

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not (self.distance_floor > 0 and math.isfinite(self.distance_floor)):
            raise ValueError(f"distance_floor must be positive and finite, got {self.distance_floor!r}")


def as_sample_matrix(x):
    """Return ``x`` as a finite float64 ``(T, d)`` array.

    A 1-D input is treated as a single column.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataQualityError(f"expected a 1-D or 2-D sample array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataQualityError(f"sample matrix must be non-empty, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataQualityError(
            f"non-finite value {arr[row, col]!r} at row {row}, column {col}"
        )
    return arr


def rank_transform(x):
    """Empirical copula sample: per-column average ranks divided by ``T``.

    Tied values share the mean of their ordinal positions, so a column
    without ties maps onto exactly ``{1/T, 2/T, ..., 1}``.

    >>> rank_transform([3.2, 1.1, 5.0]).ravel().tolist()
    [0.6666666666666666, 0.3333333333333333, 1.0]
    """
    arr = as_sample_matrix(x)
    return rankdata(arr, method="average", axis=0) / arr.shape[0]


def knn_entropy(u, cfg=KnnConfig()):
    """Kozachenko-Leonenko differential entropy in nats.

    ``H = psi(T) - psi(k) + (d / T) * sum_t log(2 * eps_t)`` where ``eps_t``
    is the Chebyshev distance from sample ``t`` to its k-th nearest
    neighbor, self excluded, floored at ``cfg.distance_floor``.

    Parameters
    ----------
    u : array_like, shape (T,) or (T, d)
    cfg : KnnConfig

    Returns
    -------
    float
    """
    u = as_sample_matrix(u)
    n, d = u.shape
    k = int(cfg.k)
    if n <= k:
        raise InsufficientSamplesError(f"need more than k={k} samples, got {n}")

    # Column k of the (k+1)-neighbor query skips the self match; with
    # duplicate rows the zero distances are interchangeable.
    dist, _ = cKDTree(u).query(u, k=k + 1, p=np.inf)
    eps = np.maximum(dist[:, k], cfg.distance_floor)
    log_sum = math.fsum(np.log(2.0 * eps).tolist())
    return float(digamma(n) - digamma(k) + d * log_sum / n)


def copula_entropy(x, cfg=KnnConfig()):
    """Copula entropy of the columns of ``x`` in nats (non-positive in theory).

    A single column has a uniform copula, so the result is exactly 0.0
    without estimation.
    """
    arr = as_sample_matrix(x)
    if arr.shape[0] <= cfg.k:
        raise InsufficientSamplesError(f"need more than k={cfg.k} samples, got {arr.shape[0]}")
    if arr.shape[1] == 1:
        return 0.0
    return knn_entropy(rank_transform(arr), cfg)


def mutual_information(x, cfg=KnnConfig()):
    """Mutual information among the columns of ``x``, the negated copula entropy."""
    return -copula_entropy(x, cfg)
