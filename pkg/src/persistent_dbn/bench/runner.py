"""Benchmark sweeps: seeded models, sampled evidence, timed queries, CSV rows."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetExceeded, InvalidSpec, MemoryBudgetExceeded, PersistentDBNError
from ..filtering import bk_filter, exact_filtering, fixed_window_filter, rms_error
from ..inference.engine import smooth
from ..messages import OpCounter
from ..model.transform import changepoint_transform
from ..oracle import DEFAULT_ENUM_BUDGET, DEFAULT_VE_BUDGET, enumerate_changepoint_posteriors, ve_exact_unrolled
from ..posterior import ZeroEvidenceProbability
from .generators import ACCURACY, POLYTREE, SPEED, TREE, forward_sample, gen_random_prototype

ALGORITHMS = ("pct", "ppt", "ve", "enum", "bk", "window")
EVIDENCE_LAYOUT = "uniform-node-slice"

COLUMNS = [
    "kind", "n", "m", "max_in_degree", "evidence_mode", "evidence_fraction", "evidence_layout",
    "evidence_count", "repetition", "seed", "algorithm", "window", "status",
    "wall_nanos", "op_count", "rms_error",
]
STEP_COLUMNS = ["run_id", "t", "W", "method", "rms_error", "wall_nanos"]


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep over ``n_values x m_values x algorithms x repetitions``."""

    kind: str = TREE
    n_values: tuple = (15,)
    m_values: tuple = (20,)
    evidence_fraction: float = 0.10
    repetitions: int = 1
    seed: int = 0
    algorithms: tuple = ("pct",)
    windows: tuple = (1, 2, 4, 8, 16)
    max_in_degree: int = 2
    mode: str = SPEED
    pin: bool = False
    ve_budget: int | None = DEFAULT_VE_BUDGET
    enum_budget: int = DEFAULT_ENUM_BUDGET
    deterministic: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("n_values", "m_values", "algorithms", "windows"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def validate(self) -> None:
        """Raises InvalidSpec on an unusable sweep."""
        if self.kind not in (TREE, POLYTREE):
            raise InvalidSpec(f"unknown generator kind {self.kind!r}")
        if self.mode not in (SPEED, ACCURACY):
            raise InvalidSpec(f"unknown evidence mode {self.mode!r}")
        if not self.n_values or not self.m_values or not self.algorithms:
            raise InvalidSpec("sweep lists must be non-empty")
        if min(self.n_values) < 1 or min(self.m_values) < 1:
            raise InvalidSpec("N and M must be positive")
        if self.repetitions < 1:
            raise InvalidSpec("need at least one repetition")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise InvalidSpec(f"unknown algorithms {sorted(unknown)}")
        if "window" in self.algorithms and (not self.windows or min(self.windows) < 1):
            raise InvalidSpec("window sizes must be positive")
        if not 0.0 <= self.evidence_fraction <= 1.0:
            raise InvalidSpec("evidence fraction must lie in [0, 1]")


def run_seeds(seed: int, n: int, m: int, rep: int) -> tuple[int, int]:
    """Model and sampling seeds; the model depends on ``(seed, n, rep)`` only."""
    model_seed = int(np.random.SeedSequence([seed, n, rep]).generate_state(1)[0])
    sample_seed = int(np.random.SeedSequence([seed, n, m, rep, 1]).generate_state(1)[0])
    return model_seed, sample_seed


def fmt(x) -> str:
    """17 significant digits for floats; plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _timed(fn):
    t0 = time.perf_counter_ns()
    try:
        out = fn()
        status = "zero_evidence" if isinstance(out, ZeroEvidenceProbability) else "ok"
    except MemoryBudgetExceeded:
        out, status = None, "budget_exceeded"
    except BudgetExceeded:
        out, status = None, "budget_exceeded"
    except PersistentDBNError as e:
        out, status = None, f"error:{type(e).__name__}"
    return out, status, time.perf_counter_ns() - t0


def run_benchmark(spec: ExperimentSpec, out=None, steps_out=None) -> list[dict]:
    """Run the sweep and write one CSV row per (N, M, algorithm[, W], rep).

    ``out`` and ``steps_out`` may be paths or text streams; the per-slice
    error rows of accuracy mode go to ``steps_out``. Per-row failures are
    recorded in the ``status`` column. Returns the rows.
    """
    spec.validate()
    rows, step_rows = [], []
    for n in spec.n_values:
        for m in spec.m_values:
            for rep in range(spec.repetitions):
                r, s = _one_run(spec, n, m, rep)
                rows.extend(r)
                step_rows.extend(s)
    if spec.deterministic:
        for r in rows + step_rows:
            r["wall_nanos"] = 0
    if out is not None:
        write_csv(rows, COLUMNS, out)
    if steps_out is not None:
        write_csv(step_rows, STEP_COLUMNS, steps_out)
    return rows


def _one_run(spec: ExperimentSpec, n: int, m: int, rep: int):
    model_seed, sample_seed = run_seeds(spec.seed, n, m, rep)
    net = gen_random_prototype(n, spec.kind, seed=model_seed, max_in_degree=spec.max_in_degree)
    sample = forward_sample(net, m, seed=sample_seed, mode=spec.mode, fraction=spec.evidence_fraction)
    ev = sample.evidence
    base = {
        "kind": spec.kind, "n": n, "m": m, "max_in_degree": spec.max_in_degree,
        "evidence_mode": spec.mode, "evidence_fraction": spec.evidence_fraction,
        "evidence_layout": EVIDENCE_LAYOUT, "evidence_count": len(ev),
        "repetition": rep, "seed": spec.seed,
    }
    exact = None
    if spec.mode == ACCURACY and any(a in ("bk", "window") for a in spec.algorithms):
        exact = exact_filtering(net, ev, m)
    rows, steps = [], []
    run_id = f"{spec.kind}-n{n}-m{m}-r{rep}"

    def emit(algorithm, window, status, wall, ops, err=""):
        rows.append({**base, "algorithm": algorithm, "window": window, "status": status,
                     "wall_nanos": wall, "op_count": ops, "rms_error": err})

    def filter_rows(method, window, run, wall):
        if exact is None or not hasattr(run, "marginals"):
            return ""
        per_t = np.atleast_1d(rms_error(run, exact))
        for t, e in enumerate(per_t, start=1):
            steps.append({"run_id": run_id, "t": t, "W": window, "method": method,
                          "rms_error": float(e), "wall_nanos": 0})
        steps.append({"run_id": run_id, "t": "mean", "W": window, "method": method,
                      "rms_error": float(per_t.mean()), "wall_nanos": wall})
        return float(per_t.mean())

    for alg in spec.algorithms:
        counter = OpCounter()
        if alg in ("pct", "ppt"):
            out, status, wall = _timed(lambda: smooth(changepoint_transform(net, m), ev, counter=counter))
            emit(alg, "", status, wall, counter.count)
        elif alg == "ve":
            root = net.topological_order()[0]
            out, status, wall = _timed(lambda: ve_exact_unrolled(
                net, m, ev, query=[root], budget=spec.ve_budget, counter=counter))
            emit(alg, "", status, wall, counter.count)
        elif alg == "enum":
            out, status, wall = _timed(lambda: enumerate_changepoint_posteriors(
                changepoint_transform(net, m), ev, budget=spec.enum_budget, counter=counter))
            emit(alg, "", status, wall, counter.count)
        elif alg == "bk":
            out, status, wall = _timed(lambda: bk_filter(net, ev, m))
            ops = int(out.step_ops.sum()) if status == "ok" else 0
            emit(alg, "", status, wall, ops, filter_rows("bk", "", out, wall) if status == "ok" else "")
        elif alg == "window":
            for w in spec.windows:
                out, status, wall = _timed(lambda: fixed_window_filter(net, ev, m, w, pin=spec.pin))
                ops = int(out.step_ops.sum()) if status == "ok" else 0
                err = filter_rows("window", w, out, wall) if status == "ok" else ""
                emit(alg, w, status, wall, ops, err)
    return rows, steps


def write_csv(rows, columns, out) -> None:
    """UTF-8, comma-separated, header row, floats at 17 significant digits."""
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, columns, fh)
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c, "")) for c in columns])


def rows_to_text(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    write_csv(rows, columns, buf)
    return buf.getvalue()
