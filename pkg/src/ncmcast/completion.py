"""Expected completion time of batched coded transmission over an erasure trace.

State space: (remaining degrees of freedom, channel slot index), slot
index cyclic over the trace.  Each feedback round transmits a batch of N
coded packets over N consecutive slots, costs N*t_p + t_w, and advances
the slot pointer by N plus an acknowledgment shift.  The per-round batch
size comes from a policy: non-adaptive (send exactly the deficit) or
adaptive (cover the deficit in expectation using a sizing trace).

The expected-cost equations are linear and block-triangular in the
remaining-DoF level; within a level each state couples to exactly one
other state, so levels solve exactly by resolving the cycles of that
successor map and back-substituting.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ErasureTrace


class InfeasibleModelError(RuntimeError):
    """The trace cannot deliver the required degrees of freedom."""


class InfeasibleWindowError(InfeasibleModelError):
    """No batch within the size cap covers the deficit from this slot."""

    def __init__(self, start_slot: int, remaining: int):
        super().__init__(
            f"no batch of at most {64 * remaining} packets starting at slot "
            f"{start_slot} covers {remaining} degrees of freedom in expectation"
        )
        self.start_slot = start_slot
        self.remaining = remaining


@dataclass(frozen=True)
class ModelParams:
    """Timing and sizing constants of the transmission model."""

    dof: int
    t_p: float
    t_w: float
    ack_slot_advance: int = 1

    def __post_init__(self):
        if self.dof < 1:
            raise ValueError("dof must be >= 1")
        if self.t_p <= 0:
            raise ValueError("t_p must be > 0")
        if self.t_w < 0:
            raise ValueError("t_w must be >= 0")
        if self.ack_slot_advance < 0:
            raise ValueError("ack_slot_advance must be >= 0")


def _pe_array(trace) -> np.ndarray:
    if isinstance(trace, ErasureTrace):
        return trace.pe
    pe = np.asarray(trace, dtype=float)
    if pe.ndim != 1 or pe.size < 1:
        raise ValueError("erasure trace must be a nonempty 1-D vector")
    return pe


# -- batch outcome distribution ---------------------------------------------


def batch_distribution(pe_trace, start_slot: int, remaining: int,
                       batch: int) -> np.ndarray:
    """Distribution of DoF still missing after a batch of transmissions.

    Entry l is the probability that l of `remaining` degrees of freedom
    are still missing after `batch` packets sent on consecutive cyclic
    slots from `start_slot`.  This folds the per-slot transfer step
    (success moves down one level, level 0 absorbing) across the batch,
    i.e. it is the starting row of the batch-fold transition product.
    """
    pe = _pe_array(pe_trace)
    if remaining < 1:
        raise ValueError("remaining must be >= 1")
    if batch < 1:
        raise ValueError("batch must be >= 1")
    tau = pe.size
    v = np.zeros(remaining + 1)
    v[remaining] = 1.0
    for k in range(batch):
        e = pe[(start_slot + k) % tau]
        s = 1.0 - e
        nxt = v * e
        nxt[0] += v[0] * s
        nxt[:-1] += v[1:] * s
        v = nxt
    return v


def batch_distribution_via_success_counts(pe_trace, start_slot: int,
                                          remaining: int,
                                          batch: int) -> np.ndarray:
    """Same distribution through the success-count (Poisson binomial) route.

    Kept as an independent computation for cross-checking the transition
    fold above.
    """
    pe = _pe_array(pe_trace)
    if remaining < 1:
        raise ValueError("remaining must be >= 1")
    if batch < 1:
        raise ValueError("batch must be >= 1")
    tau = pe.size
    counts = np.zeros(batch + 1)
    counts[0] = 1.0
    for k in range(batch):
        e = pe[(start_slot + k) % tau]
        s = 1.0 - e
        nxt = counts * e
        nxt[1:] += counts[:-1] * s
        counts = nxt
    dist = np.zeros(remaining + 1)
    left = np.maximum(remaining - np.arange(batch + 1), 0)
    np.add.at(dist, left, counts)
    return dist


def _batch_distributions_bulk(pe: np.ndarray, remaining: int,
                              batches: np.ndarray) -> np.ndarray:
    """Per-start-slot batch outcome distributions, one row per slot.

    Row j equals batch_distribution(pe, j, remaining, batches[j]); the
    fold runs over all start slots simultaneously, stepping packet k of
    every still-active batch at once.
    """
    tau = pe.size
    v = np.zeros((tau, remaining + 1))
    v[:, remaining] = 1.0
    slots = np.arange(tau)
    for k in range(int(batches.max())):
        active = batches > k
        idx = slots[active]
        e = pe[(idx + k) % tau][:, None]
        s = 1.0 - e
        sub = v[active]
        nxt = sub * e
        nxt[:, 0] += sub[:, 0] * s[:, 0]
        nxt[:, :-1] += sub[:, 1:] * s
        v[active] = nxt
    return v


# -- batch sizing policies ----------------------------------------------------


def anc_batch_size(pe_trace, start_slot: int, remaining: int) -> int:
    """Smallest batch whose expected delivered packets cover the deficit.

    Returns the least N with sum_{k<N} (1 - pe((start_slot+k) mod tau))
    >= remaining, capped at 64*remaining.
    """
    pe = _pe_array(pe_trace)
    if remaining < 1:
        raise ValueError("remaining must be >= 1")
    tau = pe.size
    cap = 64 * remaining
    idx = (start_slot + np.arange(cap)) % tau
    cums = np.cumsum(1.0 - pe[idx])
    pos = int(np.searchsorted(cums, float(remaining), side="left"))
    if pos >= cap:
        raise InfeasibleWindowError(start_slot % tau, remaining)
    return pos + 1


def nc_batch_size(remaining: int) -> int:
    """Non-adaptive benchmark batch: exactly the missing DoF count."""
    if remaining < 1:
        raise ValueError("remaining must be >= 1")
    return remaining


class NonAdaptivePolicy:
    """Channel-oblivious sizing: each round sends the deficit, uncompensated."""

    name = "nc"

    def batch_size(self, remaining: int, slot: int) -> int:
        return nc_batch_size(remaining)


class AdaptivePolicy:
    """Sizing from an erasure trace so expected receptions cover the deficit.

    The sizing trace defaults to the receiver's own channel; passing a
    shared (virtual) trace instead reproduces a sender that plans its
    batches for the whole multicast group.
    """

    name = "anc"

    def __init__(self, sizing_trace):
        self.sizing_pe = _pe_array(sizing_trace)
        self._cache: dict[tuple[int, int], int] = {}

    def batch_size(self, remaining: int, slot: int) -> int:
        slot = slot % self.sizing_pe.size
        key = (remaining, slot)
        n = self._cache.get(key)
        if n is None:
            n = anc_batch_size(self.sizing_pe, slot, remaining)
            self._cache[key] = n
        return n


# -- expected-cost solver -----------------------------------------------------


def _solve_level(b: np.ndarray, c: np.ndarray, successor: np.ndarray) -> np.ndarray:
    """Solve T[j] = b[j] + c[j] * T[successor[j]] exactly.

    Each equation has a single coupling, so the successor map is a
    functional graph: resolve each cycle in closed form, then
    back-substitute along the trees hanging off it.  Raises when a cycle
    has unit stay probability everywhere (the batch windows on it are
    fully erased).
    """
    tau = b.size
    UNSEEN, ON_PATH, DONE = 0, 1, 2
    state = np.zeros(tau, dtype=np.int8)
    T = np.zeros(tau)
    for start in range(tau):
        if state[start] != UNSEEN:
            continue
        path = []
        j = start
        while state[j] == UNSEEN:
            state[j] = ON_PATH
            path.append(j)
            j = int(successor[j])
        if state[j] == ON_PATH:
            k = path.index(j)
            cycle = path[k:]
            acc = 0.0
            coef = 1.0
            for node in cycle:
                acc += coef * b[node]
                coef *= c[node]
            if coef >= 1.0:
                raise InfeasibleModelError(
                    "batch windows along a slot cycle are fully erased; "
                    "completion is unreachable"
                )
            T[j] = acc / (1.0 - coef)
            state[j] = DONE
            for node in reversed(cycle[1:]):
                T[node] = b[node] + c[node] * T[successor[node]]
                state[node] = DONE
            tail = path[:k]
        else:
            tail = path
        for node in reversed(tail):
            T[node] = b[node] + c[node] * T[successor[node]]
            state[node] = DONE
    return T


def _expected_cost(pe: np.ndarray, params: ModelParams, policy,
                   round_cost) -> np.ndarray:
    """Expected accumulated round_cost(N) until absorption, per state.

    Returns an array of shape (dof+1, tau); row 0 is the absorbed level.
    round_cost maps a vector of batch sizes to per-round costs.
    """
    tau = pe.size
    dof = params.dof
    ack = params.ack_slot_advance
    T = np.zeros((dof + 1, tau))
    slots = np.arange(tau)
    for r in range(1, dof + 1):
        batches = np.array(
            [policy.batch_size(r, j) for j in range(tau)], dtype=np.int64
        )
        dists = _batch_distributions_bulk(pe, r, batches)
        successor = (slots + batches + ack) % tau
        b = np.asarray(round_cost(batches), dtype=float)
        if r > 1:
            b = b + np.einsum("jl,lj->j", dists[:, 1:r], T[1:r, successor])
        c = dists[:, r]
        level = _solve_level(b, c, successor)
        resid = np.abs(level - (b + c * level[successor]))
        if np.any(resid > 1e-9 * (1.0 + np.abs(level))):
            raise ArithmeticError("expected-cost solve residual out of tolerance")
        T[r] = level
    return T


class CompletionModel:
    """Analytic expected completion times over one erasure trace."""

    def __init__(self, pe_trace, params: ModelParams, policy):
        self.pe = _pe_array(pe_trace)
        self.params = params
        self.policy = policy
        self._times: np.ndarray | None = None

    def solve(self) -> np.ndarray:
        """Expected completion seconds for every (remaining, slot) state."""
        if self._times is None:
            p = self.params
            self._times = _expected_cost(
                self.pe, p, self.policy, lambda n: n * p.t_p + p.t_w
            )
        return self._times

    @property
    def times(self) -> np.ndarray:
        return self.solve()

    def expected_time(self, remaining: int | None = None,
                      start_slot: int = 0) -> float:
        r = self.params.dof if remaining is None else remaining
        return float(self.solve()[r, start_slot % self.pe.size])

    def average_packets(self, start_slot: int = 0) -> float:
        """Expected transmitted coded packets: delay at zero ack wait / t_p."""
        p = replace(self.params, t_w=0.0)
        times = _expected_cost(
            self.pe, p, self.policy, lambda n: n * p.t_p + p.t_w
        )
        return float(times[p.dof, start_slot % self.pe.size] / p.t_p)

    def expected_rounds(self, remaining: int | None = None,
                        start_slot: int = 0) -> float:
        """Expected number of feedback rounds until completion."""
        rounds = _expected_cost(
            self.pe, self.params, self.policy, lambda n: np.ones_like(n, dtype=float)
        )
        r = self.params.dof if remaining is None else remaining
        return float(rounds[r, start_slot % self.pe.size])


def solve(model: CompletionModel) -> np.ndarray:
    return model.solve()


def average_packets(model: CompletionModel, start_slot: int = 0) -> float:
    return model.average_packets(start_slot)


def throughput(delivered_dof: int, completion_time: float) -> float:
    """Delivered packets per second for one solved point."""
    if completion_time <= 0:
        raise ValueError("completion_time must be > 0")
    return delivered_dof / completion_time
