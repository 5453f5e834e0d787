"""Energy-harvesting arrivals and finite-battery dynamics.

The battery update is b' = clamp(b - spend + harvested, 0, capacity). Spending
more than the current charge is a hard error, never a clamp: under a properly
sized configuration the scheduler provably never requests it, so a violation
means the sizing rule was broken somewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EnergyCausalityError

HARVEST_DISTRIBUTIONS = ("bernoulli", "deterministic", "uniform")

# Spend/charge comparisons get this much float grace; real violations are
# orders of magnitude larger than accumulated rounding at battery scale.
CAUSALITY_ATOL = 1e-12


@dataclass(frozen=True)
class BatteryState:
    charge: float
    capacity: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ConfigError("battery capacity must be positive")
        if not 0.0 <= self.charge <= self.capacity:
            raise ConfigError(
                f"battery charge {self.charge} outside [0, {self.capacity}]"
            )


@dataclass(frozen=True)
class HarvestConfig:
    """Stationary non-negative energy arrivals with the given per-slot mean.

    ``bernoulli`` draws one full unit with probability ``mean`` (requires
    mean <= 1), ``deterministic`` always yields ``mean``, ``uniform`` draws
    from [0, 2 * mean].
    """

    mean: float
    distribution: str = "bernoulli"

    def __post_init__(self):
        if self.mean <= 0:
            raise ConfigError("harvest mean must be positive")
        if self.distribution not in HARVEST_DISTRIBUTIONS:
            raise ConfigError(
                f"unknown harvest distribution {self.distribution!r}, "
                f"pick from {HARVEST_DISTRIBUTIONS}"
            )
        if self.distribution == "bernoulli" and self.mean > 1.0:
            raise ConfigError("bernoulli harvest needs mean <= 1")


def draw_harvest(config: HarvestConfig, rng: np.random.Generator) -> float:
    """Sample one slot's harvested energy (non-negative, long-run mean
    equal to the configured mean)."""
    if config.distribution == "bernoulli":
        return 1.0 if rng.random() < config.mean else 0.0
    if config.distribution == "deterministic":
        return config.mean
    return float(rng.uniform(0.0, 2.0 * config.mean))


def step_battery(
    state: BatteryState,
    spend: float,
    harvested: float,
    node: int = 0,
    slot: int | None = None,
) -> BatteryState:
    """Advance the battery one slot, enforcing per-slot energy causality."""
    if harvested < 0:
        raise ConfigError("harvested energy cannot be negative")
    if spend > state.charge + CAUSALITY_ATOL:
        raise EnergyCausalityError(node=node, spend=spend, charge=state.charge, slot=slot)
    charge = min(max(state.charge - spend + harvested, 0.0), state.capacity)
    return BatteryState(charge=charge, capacity=state.capacity)
