"""Simulated message fabric with bounded random delay and Bernoulli loss.

Time is logical. Every message draws its delay and loss from a generator
seeded by ``(seed, ordinal)``, so an event depends only on the configuration
and its position in the send sequence.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .errors import ConfigError, DeadlockFault


@dataclass(frozen=True)
class NetConfig:
    mode: str = "sync"
    T_delay: float = 0.0
    loss_p: float = 0.0
    seed: int = 0
    per_recipient: bool = False
    deadlock_timeout: float = 60.0

    def __post_init__(self):
        if self.mode not in ("sync", "async"):
            raise ConfigError(f"network mode must be 'sync' or 'async', got {self.mode!r}")
        if not 0.0 <= self.loss_p <= 1.0:
            raise ConfigError(f"loss probability must lie in [0, 1], got {self.loss_p}")
        if not self.T_delay >= 0.0:
            raise ConfigError("T_delay must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class NetEvent:
    ordinal: int
    sender: int
    iteration: int
    send_time: float
    deliver_time: float
    dropped: bool
    payload: Any = field(default=None, compare=False, repr=False)
    recipient: int | None = None
    epoch: int = 0


def sample_channel(cfg: NetConfig, ordinal: int) -> tuple[float, bool]:
    """Delay and drop flag of message number ``ordinal``."""
    rng = np.random.default_rng([cfg.seed, ordinal])
    delay = float(rng.uniform(0.0, cfg.T_delay)) if cfg.T_delay > 0 else 0.0
    dropped = bool(rng.random() < cfg.loss_p)
    return delay, dropped


@dataclass(frozen=True)
class BarrierRelease:
    time: float
    skipped: int


class Network:
    """Single-writer event queue shared by all agents of a run."""

    def __init__(self, cfg: NetConfig, n_agents: int):
        self.cfg = cfg
        self.n_agents = n_agents
        self._ordinal = 0
        self._queue: list = []
        self._clock = -math.inf
        self.trace: list[NetEvent] = []

    def send(self, sender: int, iteration: int, payload, send_time: float, epoch: int = 0):
        """Emit an announcement; returns the created events (one per recipient
        in per-recipient mode, a single broadcast event otherwise)."""
        if self.cfg.per_recipient:
            recipients = [j for j in range(self.n_agents) if j != sender]
        else:
            recipients = [None]
        events = []
        for r in recipients:
            delay, dropped = sample_channel(self.cfg, self._ordinal)
            ev = NetEvent(self._ordinal, sender, iteration, send_time, send_time + delay, dropped,
                          payload, r, epoch)
            self._ordinal += 1
            self.trace.append(ev)
            if not dropped:
                heapq.heappush(self._queue, (ev.deliver_time, ev.sender, ev.ordinal, ev))
            events.append(ev)
        return events

    def deliver_up_to(self, t: float) -> list[NetEvent]:
        if t < self._clock:
            raise ValueError(f"delivery time went backwards: {t} < {self._clock}")
        self._clock = t
        out = []
        while self._queue and self._queue[0][0] <= t:
            out.append(heapq.heappop(self._queue)[3])
        return out

    def pending(self) -> int:
        return len(self._queue)

    def barrier(self, iteration: int, epoch: int, senders: Iterable[int], now: float,
                activation_period: float | None = None) -> BarrierRelease:
        """Release time of the synchronous round ``iteration``.

        Every sender must have a delivered (not dropped) event for this
        iteration. With ``activation_period`` set, agents only wake on a
        periodic schedule starting at ``now``; activations that find data
        missing are skipped and counted.
        """
        senders = set(senders)
        latest = now
        seen = set()
        for ev in self.trace:
            if ev.epoch != epoch or ev.iteration != iteration or ev.sender not in senders:
                continue
            if ev.dropped:
                continue
            latest = max(latest, ev.deliver_time)
            seen.add(ev.sender)
        lost = self._lost(iteration, epoch, senders)
        if lost or seen != senders:
            raise DeadlockFault(iteration, lost | (senders - seen), self.cfg.deadlock_timeout)
        if activation_period is None or latest <= now:
            return BarrierRelease(latest, 0)
        k = math.ceil((latest - now) / activation_period - 1e-12)
        return BarrierRelease(now + k * activation_period, k - 1)

    def _lost(self, iteration, epoch, senders) -> set:
        return {ev.sender for ev in self.trace
                if ev.epoch == epoch and ev.iteration == iteration and ev.sender in senders and ev.dropped}

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ordinal", "epoch", "sender", "recipient", "iteration", "send_time",
                        "deliver_time", "dropped"])
            for ev in self.trace:
                w.writerow([ev.ordinal, ev.epoch, ev.sender, "" if ev.recipient is None else ev.recipient,
                            ev.iteration, f"{ev.send_time:.9g}", f"{ev.deliver_time:.9g}", int(ev.dropped)])
