"""Virtual reference channels standing in for a whole multicast group.

Two constructions: the per-slot worst erasure across all receivers
(max-erasure), and the verbatim trace of the receiver with the largest
expected completion time (max-completion-time).  A transmission plan
sized on the virtual trace is what the sender applies to every receiver
in the group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ErasureTrace
from .completion import (
    AdaptivePolicy,
    CompletionModel,
    InfeasibleModelError,
    ModelParams,
    anc_batch_size,
)

MAXPE = "maxpe"
MAXCT = "maxct"


@dataclass
class MulticastGroup:
    """Erasure traces of the receivers sharing one multicast session."""

    receivers: list[ErasureTrace]
    labels: list[int] | None = None

    def __post_init__(self):
        if len(self.receivers) < 1:
            raise ValueError("group must contain at least one receiver")
        lengths = {len(r) for r in self.receivers}
        if len(lengths) != 1:
            raise ValueError("all receiver traces must share one length")
        ebn0 = {r.eb_n0_db for r in self.receivers}
        if len(ebn0) != 1:
            raise ValueError("all receiver traces must share one Eb/N0")
        bits = {r.bits_per_packet for r in self.receivers}
        if len(bits) != 1:
            raise ValueError("all receiver traces must share one packet size")
        if self.labels is None:
            self.labels = list(range(1, len(self.receivers) + 1))
        elif len(self.labels) != len(self.receivers):
            raise ValueError("labels must match receivers one-to-one")

    def __len__(self):
        return len(self.receivers)

    @property
    def trace_length(self) -> int:
        return len(self.receivers[0])


@dataclass
class VirtualChannel:
    """A single reference trace representing the whole group."""

    pe: ErasureTrace
    scheme: str
    reference_receiver: int | None = None


def build_maxpe(group: MulticastGroup) -> VirtualChannel:
    """Virtual channel of per-slot maximum erasure across the group."""
    stacked = np.vstack([r.pe for r in group.receivers])
    first = group.receivers[0]
    pe = ErasureTrace(
        stacked.max(axis=0),
        eb_n0_db=first.eb_n0_db,
        bits_per_packet=first.bits_per_packet,
    )
    return VirtualChannel(pe=pe, scheme=MAXPE, reference_receiver=None)


def build_maxct(group: MulticastGroup, params: ModelParams,
                start_slot: int = 0) -> VirtualChannel:
    """Virtual channel equal to the slowest receiver's own trace.

    Ranks receivers by adaptive expected completion time from
    `start_slot`; ties break toward the smallest label.  Infeasible
    receivers propagate with their label attached.
    """
    best_label = None
    best_time = -np.inf
    best_trace = None
    order = np.argsort(group.labels)
    for k in order:
        trace = group.receivers[k]
        label = group.labels[k]
        try:
            model = CompletionModel(trace, params, AdaptivePolicy(trace))
            t = model.expected_time(start_slot=start_slot)
        except InfeasibleModelError as exc:
            raise InfeasibleModelError(f"receiver {label}: {exc}") from exc
        if t > best_time:
            best_time = t
            best_label = label
            best_trace = trace
    pe = ErasureTrace(
        best_trace.pe.copy(),
        eb_n0_db=best_trace.eb_n0_db,
        bits_per_packet=best_trace.bits_per_packet,
        receiver_id=best_trace.receiver_id,
    )
    return VirtualChannel(pe=pe, scheme=MAXCT, reference_receiver=best_label)


@dataclass
class MulticastPlan:
    """Batch sizes the sender uses for every receiver, sized on a virtual trace.

    batch_sizes[r-1, j] is the batch for r outstanding degrees of freedom
    when the next transmission slot is j.  expected_time is the adaptive
    expected completion time of the virtual receiver itself.
    """

    scheme: str
    reference_receiver: int | None
    batch_sizes: np.ndarray
    expected_time: float
    start_slot: int

    def batch_size(self, remaining: int, slot: int) -> int:
        return int(self.batch_sizes[remaining - 1, slot % self.batch_sizes.shape[1]])


def multicast_plan(virtual: VirtualChannel, params: ModelParams,
                   start_slot: int = 0) -> MulticastPlan:
    """Full sizing table plus the virtual receiver's expected completion time."""
    pe = virtual.pe
    tau = len(pe)
    table = np.empty((params.dof, tau), dtype=np.int64)
    for r in range(1, params.dof + 1):
        for j in range(tau):
            table[r - 1, j] = anc_batch_size(pe, j, r)
    model = CompletionModel(pe, params, AdaptivePolicy(pe))
    return MulticastPlan(
        scheme=virtual.scheme,
        reference_receiver=virtual.reference_receiver,
        batch_sizes=table,
        expected_time=model.expected_time(start_slot=start_slot),
        start_slot=start_slot,
    )
