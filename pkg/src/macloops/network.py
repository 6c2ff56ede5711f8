"""Contention resolution for the shared sensor link: p-persistent CSMA with
per-attempt persistence probabilities, a retransmission limit, and exogenous
traffic sources.

One sampling interval offers `slots_per_sample` contention mini-slots.  In a
mini-slot every still-pending contender on attempt r transmits independently
with probability p[r]; a lone transmitter wins the channel and delivers its
packet in that mini-slot, two or more all collide and burn an attempt.  A
mini-slot carries at most one delivery, but the round continues after a
success, so several contenders may deliver within one sampling interval.
Pending packets left when the window closes are dropped -- samples are never
queued across sampling instants.

Randomness is keyed per contender id, so runs with different contender sets
share each contender's private draw table (common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigurationError

RESULT_SUCCESS = "success"
RESULT_COLLIDED = "collided"
RESULT_DEFERRED = "deferred"
RESULT_DROPPED = "dropped"


@dataclass(frozen=True)
class CrmConfig:
    """p-persistent CSMA parameters.

    persistence[r-1] is the transmit probability on attempt r; a contender is
    dropped once it has transmitted (and collided) max_attempts times.
    """

    persistence: tuple[float, ...]
    max_attempts: int = 0
    slots_per_sample: int = 0

    def __post_init__(self):
        pers = tuple(float(p) for p in self.persistence)
        if not pers:
            raise ConfigurationError("persistence list must not be empty")
        if any(not (0.0 <= p <= 1.0) for p in pers):
            raise ConfigurationError(f"persistence probabilities must lie in [0,1]: {pers}")
        object.__setattr__(self, "persistence", pers)
        rmax = self.max_attempts if self.max_attempts else len(pers)
        if rmax < 1:
            raise ConfigurationError("max_attempts must be >= 1")
        if rmax != len(pers):
            raise ConfigurationError(
                f"need one persistence probability per attempt: {len(pers)} given, "
                f"max_attempts={rmax}"
            )
        object.__setattr__(self, "max_attempts", int(rmax))
        slots = self.slots_per_sample if self.slots_per_sample else rmax
        if slots < rmax:
            raise ConfigurationError(
                f"slots_per_sample ({slots}) must be >= max_attempts ({rmax})"
            )
        object.__setattr__(self, "slots_per_sample", int(slots))


@dataclass(frozen=True)
class SlotEvent:
    """One contender's action in one mini-slot (for the optional trace dump)."""

    slot: int
    contender: int
    attempt: int
    result: str


@dataclass(frozen=True)
class SlotOutcome:
    """Result of one contention round (one sampling instant)."""

    delta: dict
    attempts_used: dict
    winners: tuple[int, ...]
    events: tuple[SlotEvent, ...]

    def result_of(self, contender: int) -> str:
        return RESULT_SUCCESS if self.delta.get(contender, 0) else RESULT_DROPPED


def _contender_generator(seed, contender: int) -> np.random.Generator:
    """Private draw table for one contender, keyed by its id."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(
            entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + (int(contender),)
        )
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(contender),))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_contention(requests: Iterable[int], crm: CrmConfig, seed) -> SlotOutcome:
    """Run one contention round among the requesting contender ids.

    `seed` is an int or numpy SeedSequence; each contender's transmit draws
    come from a private stream keyed by (seed, contender id), which keeps the
    draws aligned across runs that add or remove contenders.
    """
    contenders = sorted(set(int(c) for c in requests))
    gens = {c: _contender_generator(seed, c) for c in contenders}
    attempt = {c: 1 for c in contenders}
    used = {c: 0 for c in contenders}
    pending = list(contenders)
    delta = {c: 0 for c in contenders}
    winners = []
    events = []
    for slot in range(1, crm.slots_per_sample + 1):
        if not pending:
            break
        transmitters = [
            c for c in pending if gens[c].random() < crm.persistence[attempt[c] - 1]
        ]
        if len(transmitters) == 1:
            c = transmitters[0]
            used[c] += 1
            events.append(SlotEvent(slot, c, attempt[c], RESULT_SUCCESS))
            delta[c] = 1
            winners.append(c)
            pending.remove(c)
        elif len(transmitters) >= 2:
            for c in transmitters:
                used[c] += 1
                events.append(SlotEvent(slot, c, attempt[c], RESULT_COLLIDED))
                attempt[c] += 1
            exhausted = [c for c in transmitters if attempt[c] > crm.max_attempts]
            for c in exhausted:
                events.append(SlotEvent(slot, c, attempt[c] - 1, RESULT_DROPPED))
                pending.remove(c)
        for c in pending:
            if c not in transmitters:
                events.append(SlotEvent(slot, c, attempt[c], RESULT_DEFERRED))
    for c in pending:
        events.append(SlotEvent(crm.slots_per_sample, c, attempt[c], RESULT_DROPPED))
    return SlotOutcome(delta=delta, attempts_used=used, winners=tuple(winners),
                       events=tuple(events))


@dataclass(frozen=True)
class TrafficSource:
    """Exogenous traffic: i.i.d. Bernoulli or a two-state Markov on/off chain."""

    kind: str
    rate: float = 0.0
    p_on: float = 0.0
    p_off: float = 0.0

    def __post_init__(self):
        if self.kind not in ("bernoulli", "markov"):
            raise ConfigurationError(f"unknown traffic source kind {self.kind!r}")
        for name in ("rate", "p_on", "p_off"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ConfigurationError(f"{name} must lie in [0,1], got {p}")

    @classmethod
    def bernoulli(cls, rate: float) -> "TrafficSource":
        return cls(kind="bernoulli", rate=float(rate))

    @classmethod
    def markov_on_off(cls, p_on: float, p_off: float) -> "TrafficSource":
        return cls(kind="markov", p_on=float(p_on), p_off=float(p_off))


def traffic_step(source: TrafficSource, rng: np.random.Generator, prev_active: int = 0) -> int:
    """Advance the source one tick and return its activity indicator.

    Markov sources transition from `prev_active` first, then emit the new
    state; Bernoulli sources ignore the previous state.
    """
    if source.kind == "bernoulli":
        return 1 if rng.random() < source.rate else 0
    if prev_active:
        return 0 if rng.random() < source.p_off else 1
    return 1 if rng.random() < source.p_on else 0
