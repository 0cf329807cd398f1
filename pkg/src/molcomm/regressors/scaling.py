from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class MinMaxScaler:
    """Affine map of each feature onto [0, 1] using training-set extremes.

    Constant columns map to 0.
    """

    low: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, X) -> MinMaxScaler:
        X = np.asarray(X, dtype=float)
        low = X.min(axis=0)
        span = X.max(axis=0) - low
        span = np.where(span > 0, span, 1.0)
        return cls(low, span)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.low) / self.span

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "span": self.span.tolist()}

    @classmethod
    def from_dict(cls, d) -> MinMaxScaler:
        return cls(np.array(d["low"], dtype=float), np.array(d["span"], dtype=float))
