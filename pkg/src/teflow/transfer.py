"""Transfer entropy through copula entropy.

With an order-1 target history the transfer entropy from ``x`` to ``y`` at
lag ``l`` is

    TE = -Hc(y[t+l], y[t], x[t]) + Hc(y[t+l], y[t]) + Hc(y[t], x[t]) - Hc(y[t])

which is the conditional mutual information I(y[t+l]; x[t] | y[t]) with all
marginal entropies cancelled. The last term is identically zero because a
single variable has a uniform copula. Each term is a separate copula-entropy
estimate on the same ``T - l`` embedded rows.
"""

import math
from dataclasses import dataclass

import numpy as np

from .entropy import KnnConfig, copula_entropy
from .errors import DataQualityError, DegenerateSeriesError, InsufficientSamplesError

__all__ = ["LagEmbedding", "TeEstimate", "lag_embed", "transfer_entropy", "te_terms"]


@dataclass(frozen=True)
class LagEmbedding:
    """Rows ``(y[t+lag], y[t], x[t])`` for ``t = 0 .. T-lag-1``."""

    triples: np.ndarray
    lag: int

    @property
    def target_future(self):
        return self.triples[:, 0]

    @property
    def target_present(self):
        return self.triples[:, 1]

    @property
    def source_present(self):
        return self.triples[:, 2]


@dataclass(frozen=True)
class TeEstimate:
    value: float
    lag: int
    effective_samples: int


def _as_series(a, name):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise DataQualityError(f"{name} must be a 1-D series, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        raise DataQualityError(f"{name} has non-finite value at index {int(np.argmax(bad))}")
    return arr


def lag_embed(x, y, lag, min_rows=1):
    """Build the lag embedding of source ``x`` and target ``y``.

    ``min_rows`` is the smallest acceptable number of embedded rows; the
    estimator needs ``k + 1``.

    >>> lag_embed([1, 2, 3, 4], [10, 20, 30, 40], 3).triples.tolist()
    [[40.0, 10.0, 1.0]]
    """
    x = _as_series(x, "source")
    y = _as_series(y, "target")
    if x.shape != y.shape:
        raise DataQualityError(f"source and target lengths differ: {x.size} != {y.size}")
    if isinstance(lag, bool) or int(lag) != lag or lag < 1:
        raise DataQualityError(f"lag must be a positive integer, got {lag!r}")
    lag = int(lag)
    n = x.size - lag
    if n < max(1, min_rows):
        raise InsufficientSamplesError(
            f"lag {lag} leaves {max(n, 0)} rows from {x.size} samples, need {max(1, min_rows)}"
        )
    triples = np.column_stack([y[lag:], y[:n], x[:n]])
    return LagEmbedding(triples=triples, lag=lag)


def _check_spread(emb):
    # Ranks of a constant column carry no information; reject instead of
    # returning an estimate driven purely by ties.
    if np.ptp(emb.source_present) == 0:
        raise DegenerateSeriesError("source")
    if np.ptp(emb.target_future) == 0 or np.ptp(emb.target_present) == 0:
        raise DegenerateSeriesError("target")


def te_terms(x, y, lag, cfg=KnnConfig()):
    """The four copula-entropy terms of the decomposition, in formula order.

    Returns a tuple ``(hc_joint, hc_target_pair, hc_history_pair, hc_present)``
    and the embedding they were computed on.
    """
    emb = lag_embed(x, y, lag, min_rows=cfg.k + 1)
    _check_spread(emb)
    t = emb.triples
    terms = (
        copula_entropy(t, cfg),
        copula_entropy(t[:, [0, 1]], cfg),
        copula_entropy(t[:, [1, 2]], cfg),
        copula_entropy(t[:, [1]], cfg),
    )
    return terms, emb


def transfer_entropy(x, y, lag=1, cfg=KnnConfig()):
    """Transfer entropy from ``x`` to ``y`` at ``lag`` samples, in nats.

    Raises
    ------
    DegenerateSeriesError
        If the source or target is constant over the embedding span.
    InsufficientSamplesError
        If fewer than ``k + 1`` rows remain after lagging.
    """
    (joint, target_pair, history_pair, present), emb = te_terms(x, y, lag, cfg)
    value = -joint + target_pair + history_pair - present
    if not math.isfinite(value):
        raise DataQualityError(f"non-finite transfer entropy at lag {lag}")
    return TeEstimate(value=value, lag=emb.lag, effective_samples=emb.triples.shape[0])
