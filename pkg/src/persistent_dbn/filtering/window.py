"""Filtering by exact smoothing over a sliding window of recent slices."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from ..inference.engine import smooth
from ..messages import OpCounter
from ..model.evidence import EvidenceSet
from ..model.network import PrototypeNetwork
from ..model.transform import changepoint_transform
from ..posterior import ZeroEvidenceProbability
from .bk import FilterRun

PIN_THRESHOLD = 1.0 - 1e-9


class _Transforms:
    """Changepoint models per window length, rebuilt only when CPDs vary by slice."""

    def __init__(self, net: PrototypeNetwork):
        self.net = net
        self.cache = {}

    def get(self, start: int, length: int):
        key = length if not self.net.nonstationary else (start, length)
        if key not in self.cache:
            self.cache[key] = changepoint_transform(self.net, length, start=start)
        return self.cache[key]


def _pin_evidence(net, pinned: dict, ev_window: EvidenceSet, start: int) -> EvidenceSet:
    extra = {}
    for k, tau in pinned.items():
        local = max(tau, start) - start + 1
        own = ev_window.for_node(k)
        if any(int(v) == 0 for s, v in own.items() if s >= local):
            continue  # pinning would contradict a later observation
        if (k, local) not in ev_window.values:
            extra[(k, local)] = 1
    return ev_window.with_values(extra) if extra else ev_window


def fixed_window_filter(net: PrototypeNetwork, ev: EvidenceSet, horizon: int, window: int, pin: bool = False):
    """``P(X^t | evidence in slices max(1, t-W+1)..t)`` for every ``t``.

    Each window starts from the model's own slice-1 prior. With ``pin`` on, a
    persistent node whose windowed posterior of being on exceeds
    ``1 - 1e-9`` is remembered and clamped on in all later windows.
    """
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    transforms = _Transforms(net)
    out = {k: np.zeros(horizon) for k in net.node_ids}
    ops = np.zeros(horizon, dtype=np.int64)
    pinned: dict[str, int] = {}
    persistent = set(net.persistent_ids)
    for t in range(1, horizon + 1):
        start = max(1, t - window + 1)
        length = t - start + 1
        model = transforms.get(start, length)
        local_ev = ev.window(start, t)
        if pin and pinned:
            local_ev = _pin_evidence(net, pinned, local_ev, start)
        c = OpCounter()
        post = smooth(model, local_ev, counter=c)
        if isinstance(post, ZeroEvidenceProbability):
            return post
        ops[t - 1] = c.count
        for k in net.node_ids:
            out[k][t - 1] = post.marginals[k][-1]
        if pin:
            for k in persistent - set(pinned):
                hits = np.nonzero(post.marginals[k] > PIN_THRESHOLD)[0]
                if hits.size:
                    pinned[k] = start + int(hits[0])
    return FilterRun(out, ops, dict(pinned))


def exact_filtering(net: PrototypeNetwork, ev: EvidenceSet, horizon: int):
    """Exact ``P(X^t | O^{1:t})`` by smoothing the full prefix at each ``t``."""
    return fixed_window_filter(net, ev, horizon, window=horizon)


def rms_error(approx, exact, t: int | None = None) -> float:
    """Root of the summed squared differences over nodes (not divided by N).

    Accepts arrays of per-node marginals, or ``{node: value}`` / ``{node:
    per-slice array}`` mappings; with ``t`` given, slice ``t`` is compared.

    Raises:
        ShapeMismatch: the two tables cover different nodes or shapes.
    """
    if isinstance(approx, FilterRun):
        approx = approx.marginals
    if isinstance(exact, FilterRun):
        exact = exact.marginals
    if isinstance(approx, dict) or isinstance(exact, dict):
        if not (isinstance(approx, dict) and isinstance(exact, dict)) or set(approx) != set(exact):
            raise ShapeMismatch("approximate and exact tables cover different nodes")
        keys = sorted(approx)
        a = np.array([np.asarray(approx[k], dtype=float) for k in keys])
        e = np.array([np.asarray(exact[k], dtype=float) for k in keys])
    else:
        a = np.asarray(approx, dtype=float)
        e = np.asarray(exact, dtype=float)
    if a.shape != e.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {e.shape} differ")
    if t is not None and a.ndim == 2:
        a, e = a[:, t - 1], e[:, t - 1]
    return float(np.sqrt(np.sum((a - e) ** 2, axis=0))) if a.ndim == 1 else np.sqrt(np.sum((a - e) ** 2, axis=0))


def error_rows(run_id, method: str, window, approx, exact, wall_nanos=None):
    """Per-slice error rows plus one ``t = "mean"`` row."""
    errors = np.atleast_1d(rms_error(approx, exact))
    if wall_nanos is None:
        wall_nanos = np.zeros(len(errors), dtype=np.int64)
    rows = [
        {"run_id": run_id, "t": t + 1, "W": window, "method": method,
         "rms_error": float(e), "wall_nanos": int(w)}
        for t, (e, w) in enumerate(zip(errors, wall_nanos))
    ]
    rows.append({"run_id": run_id, "t": "mean", "W": window, "method": method,
                 "rms_error": float(errors.mean()), "wall_nanos": int(np.sum(wall_nanos))})
    return rows
