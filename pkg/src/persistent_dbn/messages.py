"""Changepoint-indexed message vectors and an elementary-operation counter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDA = "lambda"
PI = "pi"


class OpCounter:
    """Counts elementary arithmetic operations; a portable stand-in for wall time."""

    def __init__(self) -> None:
        self.count = 0

    def add(self, n) -> None:
        self.count += int(n)

    def __repr__(self) -> str:
        return f"OpCounter({self.count})"


def logsumexp(x, axis=None):
    """``log(sum(exp(x)))`` along ``axis``; all ``-inf`` input gives ``-inf``.

    A lean stand-in for ``scipy.special.logsumexp`` on the hot message paths,
    where scipy's argument handling dominates the cost of small vectors.
    """
    x = np.asarray(x, dtype=float)
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore", under="ignore"):
        out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def count(counter: OpCounter | None, n) -> None:
    if counter is not None:
        counter.add(n)


@dataclass(frozen=True, eq=False)
class MessageVector:
    """Non-negative vector over changepoints ``0..M`` with a log-scale factor.

    The represented vector is ``values * exp(log_scale)``. ``values`` is kept
    in a comfortable floating range so long horizons do not underflow.
    """

    values: np.ndarray
    kind: str = LAMBDA
    log_scale: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.isnan(v)):
            raise ValueError("message entries must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_log(cls, log_values, kind: str = LAMBDA) -> "MessageVector":
        """Build from log-entries; pi messages are normalized to sum to one."""
        lv = np.asarray(log_values, dtype=float)
        if kind == PI:
            scale = logsumexp(lv)
        else:
            scale = np.max(lv)
        if not np.isfinite(scale):
            return cls(np.zeros_like(lv), kind=kind, log_scale=-np.inf)
        with np.errstate(under="ignore"):
            return cls(np.exp(lv - scale), kind=kind, log_scale=float(scale))

    @property
    def log_values(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.values) + self.log_scale

    def to_array(self) -> np.ndarray:
        """Unscaled entries (may underflow for long horizons)."""
        if self.log_scale == -np.inf:
            return np.zeros_like(self.values)
        return self.values * np.exp(self.log_scale)

    def normalized(self) -> np.ndarray:
        total = self.values.sum()
        if total == 0:
            return np.zeros_like(self.values)
        return self.values / total
