"""Node availability, bounded staleness, and the exchange of multipliers.

Nodes read each other's multipliers through a mailbox that holds, per ordered
pair (receiver, sender), the last value shared by the sender and the slot it
was shared in. Three availability modes generate the sharing schedule:

  * ``always-on``   every node shares every slot (synchronous limit),
  * ``random``      each node is available with a fixed probability; a pair
                    exchanges when both ends are available,
  * ``piggyback``   a node shares exactly on the slots it transmits.

In the random and piggyback modes a forced exchange fires whenever a pair
would otherwise exceed the staleness bound, so the bound holds by
construction rather than by assumption. Staleness of a pair during slot t is
t minus the slot of its last exchange; exchanges happen at the end of a slot
and carry the sender's post-update values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .scheduler import DualSubgradient, NodeDualState

AVAILABILITY_MODES = ("always-on", "random", "piggyback")


@dataclass(frozen=True)
class AvailabilitySchedule:
    mode: str = "always-on"
    prob: float = 1.0
    staleness_bound: int = 1

    def __post_init__(self):
        if self.mode not in AVAILABILITY_MODES:
            raise ConfigError(
                f"unknown availability mode {self.mode!r}, pick from {AVAILABILITY_MODES}"
            )
        if self.mode == "random" and not 0.0 < self.prob <= 1.0:
            raise ConfigError("random availability needs prob in (0, 1]")
        if self.staleness_bound < 1:
            raise ConfigError("staleness bound must be a positive integer")


class DualMailbox:
    """Stale multiplier copies: ``values[i, j]`` is the latest nu_{j,i} known
    to receiver i, ``slots[i, j]`` the slot sender j shared it in.

    Initial values are zero at slot zero, matching the all-zero multiplier
    initialization that every node knows without communicating.
    """

    def __init__(self, count: int):
        self.count = count
        self.values = np.zeros((count, count))
        self.slots = np.zeros((count, count), dtype=int)

    def snapshot_for(self, node: int) -> np.ndarray:
        """Stale remote multipliers nu_{j, node} as last received (own index
        is zero and unused)."""
        row = self.values[node].copy()
        row[node] = 0.0
        return row

    def staleness(self, t: int) -> np.ndarray:
        """Slot lag of every pair's snapshot during slot t (diagonal is zero:
        a node always has its own multipliers fresh)."""
        lag = t - self.slots
        np.fill_diagonal(lag, 0)
        return lag


@dataclass(eq=False)
class AvailabilityDecision:
    """Who can participate and who shares this slot. ``available[j]`` marks
    node j capable of sending and receiving (drives the subgradient mask);
    ``exchange[i, j]`` marks mailbox (i <- j) refreshes, forced ones
    included."""

    available: np.ndarray
    exchange: np.ndarray


def advance_availability(
    schedule: AvailabilitySchedule,
    t: int,
    rng,
    transmit_flags,
    mailbox: DualMailbox,
) -> AvailabilityDecision:
    """Availability sets for slot t, with forced exchanges injected for any
    pair that would otherwise exceed the staleness bound next slot. ``rng``
    is one generator per node (consumed only in random mode).

    Only the random mode models nodes going down; always-on and piggyback
    nodes stay capable every slot. Piggyback restricts when duals are
    shared (riding on measurement packets), not what a node can compute.
    """
    transmit_flags = np.asarray(transmit_flags, dtype=bool)
    count = mailbox.count
    if schedule.mode == "always-on":
        capable = np.ones(count, dtype=bool)
        pair = np.ones((count, count), dtype=bool)
    elif schedule.mode == "random":
        capable = np.array([rng[i].random() < schedule.prob for i in range(count)])
        pair = capable[:, None] & capable[None, :]
    else:
        capable = np.ones(count, dtype=bool)
        # The sender's packet carries its duals, everyone listens.
        pair = np.broadcast_to(transmit_flags[None, :], (count, count)).copy()

    # Next slot a pair's staleness is (t + 1) - last_slot; force a refresh
    # wherever that would exceed the bound.
    forced = (t + 1 - mailbox.slots) > schedule.staleness_bound
    exchange = pair | forced
    np.fill_diagonal(exchange, False)
    available = capable | forced.any(axis=0)
    return AvailabilityDecision(available=available, exchange=exchange)


def exchange_duals(
    mailbox: DualMailbox,
    decision: AvailabilityDecision,
    duals: Sequence[NodeDualState],
    t: int,
) -> None:
    """Refresh mailbox entries for every exchanging pair with the senders'
    current multipliers, stamped with this slot. Non-exchanging pairs keep
    their old snapshot untouched."""
    for i in range(mailbox.count):
        for j in range(mailbox.count):
            if i == j or not decision.exchange[i, j]:
                continue
            mailbox.values[i, j] = duals[j].nu_own[i]
            mailbox.slots[i, j] = t


def asynchronous_subgradient_mask(
    available: np.ndarray,
    subgradients: Sequence[DualSubgradient],
) -> list[DualSubgradient]:
    """Zero the multiplier component (i, j) of every node's subgradient when
    node j is not sharing this slot; phi and beta pass through untouched."""
    available = np.asarray(available, dtype=bool)
    masked = []
    for grads in subgradients:
        masked.append(
            DualSubgradient(
                phi=grads.phi,
                nu=np.where(available, grads.nu, 0.0),
                beta=grads.beta,
            )
        )
    return masked


def nu_update_mask(available: np.ndarray) -> np.ndarray:
    """Boolean mask over multiplier columns: component j updates iff node j
    is sharing this slot."""
    return np.asarray(available, dtype=bool)
