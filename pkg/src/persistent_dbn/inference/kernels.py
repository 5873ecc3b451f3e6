"""O(M) message recurrences for persistent families.

All arithmetic is done on log-entries so that survival products over long
horizons never underflow. Trajectory semantics of a child with one hidden
parent whose changepoint is ``L``: at slice ``t`` the parent is off while
``t <= L`` and on afterwards, so the child survives slice ``t`` with
``1 - fire_off[t]`` or ``1 - fire_on[t]`` and fires at slice ``j + 1`` with
the probability matching the parent's state at that slice. Every function
accepts a leading batch axis on the probability arrays; the polytree kernels
use it to run one recurrence per configuration of the remaining parents.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import InDegreeTooLarge, UnknownObservationValue
from ..messages import LAMBDA, PI, MessageVector, OpCounter, count, logsumexp

DEFAULT_MAX_IN_DEGREE = 6


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _log1m(x):
    with np.errstate(divide="ignore"):
        return np.log1p(-np.asarray(x, dtype=float))


def log_survival_table(fire) -> np.ndarray:
    """``[0, log(1-f_1), log((1-f_1)(1-f_2)), ...]`` along the last axis."""
    fire = np.asarray(fire, dtype=float)
    out = np.zeros(fire.shape[:-1] + (fire.shape[-1] + 1,))
    out[..., 1:] = np.cumsum(_log1m(fire), axis=-1)
    return out


def forward_log_recurrence(c, d) -> np.ndarray:
    """Solve ``y[0] = c[0]``, ``y[j] = logaddexp(d[j] + y[j-1], c[j])``.

    Uses the closed form ``y_j = D_j + logsumexp_{i<=j}(c_i - D_i)`` with
    ``D`` the prefix sums of ``d`` when those are finite; a zero coefficient
    (``d = -inf``) falls back to the explicit loop.
    """
    c = np.asarray(c, dtype=float)
    d = np.array(np.broadcast_to(d, c.shape), dtype=float)
    d[..., 0] = 0.0
    if np.all(np.isfinite(d)):
        big_d = np.cumsum(d, axis=-1)
        return big_d + np.logaddexp.accumulate(c - big_d, axis=-1)
    y = np.empty_like(c)
    y[..., 0] = c[..., 0]
    for j in range(1, c.shape[-1]):
        y[..., j] = np.logaddexp(d[..., j] + y[..., j - 1], c[..., j])
    return y


def backward_log_recurrence(c, d) -> np.ndarray:
    """Solve ``x[n] = c[n]``, ``x[L] = logaddexp(c[L], d[L] + x[L+1])``."""
    c = np.asarray(c, dtype=float)
    d = np.array(np.broadcast_to(d, c.shape), dtype=float)
    d[..., -1] = 0.0
    if np.all(np.isfinite(d)):
        big_e = np.zeros_like(d)
        big_e[..., 1:] = np.cumsum(d[..., :-1], axis=-1)
        acc = np.logaddexp.accumulate((c + big_e)[..., ::-1], axis=-1)[..., ::-1]
        return acc - big_e
    x = np.empty_like(c)
    x[..., -1] = c[..., -1]
    for L in range(c.shape[-1] - 2, -1, -1):
        x[..., L] = np.logaddexp(c[..., L], d[..., L] + x[..., L + 1])
    return x


# ---------------------------------------------------------------------------
# single-parent recurrences (log domain, batched)


def chain_lambda_summands(fire_off, fire_on, log_lam, counter: OpCounter | None = None):
    """The three parts of the message from a child to its parent.

    Returns log-arrays over the parent changepoint ``L``:

    * ``below``: child fires while the parent is still off (``j < L``),
    * ``after``: child fires after the parent did (``L <= j < M``),
    * ``never``: child never fires (``j = M``).
    """
    fire_off = np.asarray(fire_off, dtype=float)
    fire_on = np.asarray(fire_on, dtype=float)
    log_lam = np.asarray(log_lam, dtype=float)
    log_a = log_survival_table(fire_off)

    terms = log_a[..., :-1] + _log(fire_off) + log_lam[..., :-1]
    below = np.full(log_a.shape, -np.inf)
    below[..., 1:] = np.logaddexp.accumulate(terms, axis=-1)

    c = np.full(log_a.shape, -np.inf)
    c[..., :-1] = _log(fire_on) + log_lam[..., :-1]
    d = np.zeros(log_a.shape)
    d[..., :-1] = _log1m(fire_on)
    after = log_a + backward_log_recurrence(c, d)

    tail = np.zeros(log_a.shape)
    tail[..., :-1] = np.cumsum(_log1m(fire_on)[..., ::-1], axis=-1)[..., ::-1]
    never = log_a + tail + log_lam[..., -1:]
    count(counter, 14 * log_a.size)
    return below, after, never


def chain_pi_summands(fire_off, fire_on, log_pi, counter: OpCounter | None = None):
    """The three parts of the message from a parent to its child.

    Returns log-arrays over the child changepoint ``j``:

    * ``before``: child fires while the parent is still off,
    * ``after``: child fires after the parent (zero at ``j = M``),
    * ``never``: child never fires (non-zero only at ``j = M``).
    """
    fire_off = np.asarray(fire_off, dtype=float)
    fire_on = np.asarray(fire_on, dtype=float)
    log_pi = np.asarray(log_pi, dtype=float)
    log_a = log_survival_table(fire_off)

    suffix = np.logaddexp.accumulate(log_pi[..., ::-1], axis=-1)[..., ::-1]
    before = np.full(log_a.shape, -np.inf)
    before[..., :-1] = log_a[..., :-1] + _log(fire_off) + suffix[..., 1:]

    d = np.zeros(log_a.shape)
    d[..., 1:] = _log1m(fire_on)
    q = forward_log_recurrence(log_pi + log_a, d)
    after = np.full(log_a.shape, -np.inf)
    after[..., :-1] = _log(fire_on) + q[..., :-1]
    never = np.full(log_a.shape, -np.inf)
    never[..., -1] = q[..., -1]
    count(counter, 12 * log_a.size)
    return before, after, never


def _combine(parts):
    a, b, c = parts
    return np.logaddexp(np.logaddexp(a, b), c)


def chain_lambda_log(fire_off, fire_on, log_lam, counter=None) -> np.ndarray:
    return _combine(chain_lambda_summands(fire_off, fire_on, log_lam, counter))


def chain_pi_log(fire_off, fire_on, log_pi, counter=None) -> np.ndarray:
    return _combine(chain_pi_summands(fire_off, fire_on, log_pi, counter))


def root_prior_log(fire, counter=None) -> np.ndarray:
    """Changepoint prior of a parentless node (implicit ``X^0 = 0``)."""
    fire = np.asarray(fire, dtype=float)
    log_a = log_survival_table(fire)
    out = log_a.copy()
    out[..., :-1] += _log(fire)
    count(counter, 3 * out.size)
    return out


def lambda_chain_message(fire_off, fire_on, child_lambda: MessageVector, counter=None) -> MessageVector:
    """Message from a single-parent child to its parent, for every parent changepoint.

    Args:
        fire_off: per-slice firing probability of the child while its parent is off.
        fire_on: per-slice firing probability once the parent is on.
        child_lambda: the child's combined lambda potential (evidence times
            messages from its own children).
    """
    return MessageVector.from_log(chain_lambda_log(fire_off, fire_on, child_lambda.log_values, counter), LAMBDA)


def pi_chain_message(fire_off, fire_on, parent_pi: MessageVector, counter=None) -> MessageVector:
    """Distribution of a single-parent child's changepoint given evidence above it."""
    return MessageVector.from_log(chain_pi_log(fire_off, fire_on, parent_pi.log_values, counter), PI)


def root_prior(fire, counter=None) -> MessageVector:
    return MessageVector.from_log(root_prior_log(fire, counter), PI)


def combine_node_lambda(evidence: MessageVector, child_messages=(), counter=None) -> MessageVector:
    """Entrywise product of a node's own-evidence vector and its children's messages."""
    total = evidence.log_values
    for msg in child_messages:
        total = total + msg.log_values
    count(counter, len(evidence) * max(1, len(child_messages)))
    return MessageVector.from_log(total, LAMBDA)


def pi_to_child_message(parent_pi: MessageVector, sibling_messages=(), counter=None) -> MessageVector:
    """Parent's pi potential times the lambda messages of the child's siblings."""
    total = parent_pi.log_values
    for msg in sibling_messages:
        total = total + msg.log_values
    count(counter, len(parent_pi) * max(1, len(sibling_messages)))
    return MessageVector.from_log(total, PI)


# ---------------------------------------------------------------------------
# observed leaves


def leaf_likelihood_log(observed, emission, counter=None) -> np.ndarray:
    """Log ``P(leaf observations | parent changepoint = i)`` for ``i = 0..M``.

    Args:
        observed: length-``M`` sequence of alphabet indices, ``None`` for an
            unobserved slice.
        emission: array ``(2, K)``; row 0 is the distribution given parent off.
    """
    emission = np.asarray(emission, dtype=float)
    m = len(observed)
    on = np.ones(m)
    off = np.ones(m)
    for t, o in enumerate(observed):
        if o is not None:
            on[t] = emission[1, o]
            off[t] = emission[0, o]
    log_on, log_off = _log(on), _log(off)
    out = np.empty(m + 1)
    count(counter, 3 * (m + 1))
    if np.all(on > 0):
        # ratio recursion: moving the changepoint one slice later swaps one "on" factor for "off"
        out[0] = log_on.sum()
        out[1:] = out[0] + np.cumsum(log_off - log_on)
        return out
    prefix_off = np.concatenate([[0.0], np.cumsum(log_off)])
    suffix_on = np.concatenate([np.cumsum(log_on[::-1])[::-1], [0.0]])
    return prefix_off + suffix_on


def leaf_likelihood_vector(observed, emission, alphabet=None, counter=None) -> MessageVector:
    """Likelihood vector of an observed leaf over its parent's changepoint.

    ``observed`` holds symbols (mapped through ``alphabet``) or indices when
    ``alphabet`` is omitted; ``None`` marks an unobserved slice.
    """
    if alphabet is not None:
        index = {str(a): i for i, a in enumerate(alphabet)}
        mapped = []
        for o in observed:
            if o is None:
                mapped.append(None)
            elif str(o) not in index:
                raise UnknownObservationValue("<leaf>", o)
            else:
                mapped.append(index[str(o)])
        observed = mapped
    return MessageVector.from_log(leaf_likelihood_log(observed, emission, counter), LAMBDA)


# ---------------------------------------------------------------------------
# multi-parent families


def _config_grid(n_vars: int, size: int) -> np.ndarray:
    if n_vars == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.product(range(size), repeat=n_vars)), dtype=int)


def _config_rates(fire, configs, positions, horizon):
    """Per-configuration table index at every slice.

    ``configs[b, r]`` is the changepoint of the r-th enumerated parent and
    ``positions[r]`` the bit it occupies in the CPD key.
    """
    t = np.arange(1, horizon + 1)
    idx = np.zeros((configs.shape[0], horizon), dtype=int)
    for r, pos in enumerate(positions):
        idx |= (configs[:, r : r + 1] < t).astype(int) << pos
    return idx


def _bit(d: int, r: int) -> int:
    return d - 1 - r


def family_lambda_log(fire, target: int, log_lam, other_log_pis, counter=None,
                      max_in_degree=DEFAULT_MAX_IN_DEGREE, node="?") -> np.ndarray:
    """Message from a child to its ``target``-th parent, other parents summed by enumeration."""
    fire = np.asarray(fire, dtype=float)
    horizon, width = fire.shape
    d = int(round(np.log2(width)))
    if d > max_in_degree:
        raise InDegreeTooLarge(node, d, max_in_degree)
    others = [r for r in range(d) if r != target]
    configs = _config_grid(len(others), horizon + 1)
    idx = _config_rates(fire, configs, [_bit(d, r) for r in others], horizon)
    slices = np.arange(horizon)[None, :]
    off = fire[slices, idx]
    on = fire[slices, idx | (1 << _bit(d, target))]
    parts = chain_lambda_log(off, on, log_lam, counter)
    weights = np.zeros(configs.shape[0])
    for k, pis in enumerate(other_log_pis):
        weights = weights + np.asarray(pis)[configs[:, k]]
    count(counter, parts.size * 2)
    return logsumexp(parts + weights[:, None], axis=0)


def family_pi_log(fire, parent_log_pis, counter=None,
                  max_in_degree=DEFAULT_MAX_IN_DEGREE, node="?") -> np.ndarray:
    """Changepoint distribution of a child given its parents' pi messages."""
    fire = np.asarray(fire, dtype=float)
    horizon, width = fire.shape
    d = int(round(np.log2(width)))
    if d > max_in_degree:
        raise InDegreeTooLarge(node, d, max_in_degree)
    if d == 0:
        return root_prior_log(fire[:, 0], counter)
    configs = _config_grid(d - 1, horizon + 1)
    idx = _config_rates(fire, configs, [_bit(d, r) for r in range(1, d)], horizon)
    slices = np.arange(horizon)[None, :]
    off = fire[slices, idx]
    on = fire[slices, idx | (1 << _bit(d, 0))]
    parts = chain_pi_log(off, on, parent_log_pis[0], counter)
    weights = np.zeros(configs.shape[0])
    for k, pis in enumerate(parent_log_pis[1:]):
        weights = weights + np.asarray(pis)[configs[:, k]]
    count(counter, parts.size * 2)
    return logsumexp(parts + weights[:, None], axis=0)


def polytree_lambda_message(fire, target: int, child_lambda: MessageVector, other_pis,
                            counter=None, max_in_degree=DEFAULT_MAX_IN_DEGREE) -> MessageVector:
    """Message from a multi-parent child to parent number ``target``.

    Args:
        fire: ``(M, 2**d)`` firing probabilities keyed by parent bit-string.
        target: index of the receiving parent in the child's parent order.
        child_lambda: the child's combined lambda potential.
        other_pis: pi messages from the remaining parents, in parent order.
    """
    return MessageVector.from_log(
        family_lambda_log(fire, target, child_lambda.log_values, [p.log_values for p in other_pis],
                          counter, max_in_degree),
        LAMBDA,
    )


def polytree_pi_message(fire, parent_pis, counter=None, max_in_degree=DEFAULT_MAX_IN_DEGREE) -> MessageVector:
    """Pi potential of a multi-parent child; the recurrence runs over the first parent."""
    return MessageVector.from_log(
        family_pi_log(fire, [p.log_values for p in parent_pis], counter, max_in_degree),
        PI,
    )
