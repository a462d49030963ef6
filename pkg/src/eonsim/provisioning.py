"""The four provisioning strategies and the pending-retry queue.

Strategy semantics on an RSA failure:

  NDNC  block.
  DA    delay 2a/3a while budget remains; 3b uses the deferral window below;
        never compresses.
  CA    compress 2a/2b once and retry immediately; never delays.
  DACA  delay 2a/3a/3b while budget remains; at budget exhaustion 2a retries
        compressed, 3a/3b retry once more plainly; 2b compresses immediately
        (it is non-delayable); type 1 blocks.

The 3b deferral window: when arrival + delay budget lands strictly inside
(peak_start, deferral_end) of the day it falls in, the request sleeps until
that day's deferral_end with its budget zeroed, then gets exactly one attempt.

Delay bookkeeping is event-driven: a pending entry is retried whenever
capacity has been released since its last failed attempt (feasibility is
monotone in free capacity, so unchanged capacity means an unchanged answer)
and unconditionally when its budget deadline arrives. Retries run in FIFO
order of original arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .traffic import Request

STRATEGIES = ("NDNC", "DA", "CA", "DACA")

DELAYABLE = {"2a", "3a", "3b"}
COMPRESSIBLE = {"2a", "2b"}


class OutcomeKind(Enum):
    PROVISIONED = "provisioned"
    DELAYED = "delayed"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    request: Request
    lightpath: object | None = None
    compressed: bool = False


@dataclass
class PendingEntry:
    request: Request
    enqueued_at: float
    deadline: float                  # enqueued_at + delay budget
    deferred_until: float | None = None
    last_epoch: int = -1             # release epoch of the last failed attempt


class PendingQueue:
    """FIFO (by arrival) queue of delayed requests."""

    def __init__(self):
        self._entries: list[PendingEntry] = []

    def push(self, entry: PendingEntry) -> None:
        self._entries.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def remove(self, entry: PendingEntry) -> None:
        self._entries.remove(entry)

    def earliest_wakeups(self) -> list[float]:
        """Times at which entries must be retried regardless of capacity."""
        return [e.deferred_until if e.deferred_until is not None else e.deadline for e in self._entries]


def deferral_target(schedule, arrival_t: float, delay_budget: float) -> float | None:
    """3b window rule: deferral end of the day where arrival + budget lands."""
    landing = arrival_t + delay_budget
    day_start = math.floor(landing / schedule.day_ticks) * schedule.day_ticks
    tod = landing - day_start
    if schedule.peak_start < tod < schedule.deferral_end:
        return day_start + schedule.deferral_end
    return None


def _note_delay_tick(request: Request, entry: PendingEntry, t: float) -> None:
    # mirrors the per-tick "budget -= 1" bookkeeping; the deadline governs
    request.delay_budget_ticks = max(0.0, entry.deadline - t - 1.0)


def handle(strategy: str, request: Request, t: float, ctx) -> Outcome:
    """Resolve one incoming request: provision, enqueue a delay, or block."""
    lp = ctx.try_provision(request, t)
    if lp is not None:
        return Outcome(OutcomeKind.PROVISIONED, request, lp)

    q = request.type_id
    if strategy == "NDNC":
        return Outcome(OutcomeKind.BLOCKED, request)

    if strategy == "CA":
        if q in COMPRESSIBLE:
            return _compress_and_retry(request, t, ctx)
        return Outcome(OutcomeKind.BLOCKED, request)

    # DA and DACA share the delay machinery.
    if q == "3b":
        target = deferral_target(ctx.schedule, t, request.delay_budget_ticks)
        if target is not None and target > t:
            request.delay_budget_ticks = 0.0
            entry = PendingEntry(request, t, deadline=target, deferred_until=target)
            ctx.pending.push(entry)
            ctx.schedule_retry_at(target)
            return Outcome(OutcomeKind.DELAYED, request)
    if q in DELAYABLE and request.delay_budget_ticks > 0:
        entry = PendingEntry(request, t, deadline=t + request.delay_budget_ticks)
        _note_delay_tick(request, entry, t)
        ctx.pending.push(entry)
        ctx.schedule_retry_at(entry.deadline)
        return Outcome(OutcomeKind.DELAYED, request)

    return _exhausted(strategy, request, t, ctx, already_tried=True)


def _compress_and_retry(request: Request, t: float, ctx) -> Outcome:
    request.rate_gbps = request.compress_factor * request.rate_gbps
    lp = ctx.try_provision(request, t)
    if lp is not None:
        return Outcome(OutcomeKind.PROVISIONED, request, lp, compressed=True)
    return Outcome(OutcomeKind.BLOCKED, request)


def _exhausted(strategy: str, request: Request, t: float, ctx, already_tried: bool) -> Outcome:
    """Terminal branch once no delay budget remains."""
    if not already_tried:
        lp = ctx.try_provision(request, t)
        if lp is not None:
            return Outcome(OutcomeKind.PROVISIONED, request, lp)
    if strategy == "DACA" and request.type_id in COMPRESSIBLE:
        return _compress_and_retry(request, t, ctx)
    if request.type_id in ("3a", "3b"):
        # literal final retry of the plain RSA after budget exhaustion
        lp = ctx.try_provision(request, t)
        if lp is not None:
            return Outcome(OutcomeKind.PROVISIONED, request, lp)
    return Outcome(OutcomeKind.BLOCKED, request)


def retry_pending(strategy: str, t: float, ctx) -> list[Outcome]:
    """One retry sweep over the pending queue, FIFO by arrival."""
    outcomes: list[Outcome] = []
    for entry in list(ctx.pending):
        if entry.deferred_until is not None and t < entry.deferred_until:
            continue
        request = entry.request
        if t >= entry.deadline:
            ctx.pending.remove(entry)
            request.delay_budget_ticks = 0.0
            outcomes.append(_exhausted(strategy, request, t, ctx, already_tried=False))
            continue
        if entry.last_epoch >= ctx.release_epoch:
            continue  # nothing freed since the last failure; same answer
        lp = ctx.try_provision(request, t)
        if lp is not None:
            ctx.pending.remove(entry)
            outcomes.append(Outcome(OutcomeKind.PROVISIONED, request, lp))
        else:
            entry.last_epoch = ctx.release_epoch
            _note_delay_tick(request, entry, t)
    return outcomes
