"""Per-node primal-dual random-access policy.

Each node owns one multiplier row: ``nu_own[i]`` prices its own reception
constraint, ``nu_own[j]`` (j != i) prices the interference it causes to node
j's constraint, ``phi`` prices the log-domain reception requirement and
``beta`` the average energy constraint. Remote multipliers enter only through
``nu_stale``, the last values received from the other nodes.

Closed forms, with c = nu_ii * q_i - q_c * sum_{j != i} nu_ji - beta:

    z    = clip(c / 2, 0, 1)                     exact argmin of z (z - c)
    s_ii = clip(phi / nu_ii, s_floor, 1)         (nu_ii = 0 -> 1)
    s_ij = clip(1 - phi / nu_ij, 0, 1 - s_floor) (nu_ij = 0 -> 0)
    y_ij = y_bar_ij if nu_ij > nu_bar_ij else 0

The dual ascent steps with fixed step size and non-negative projection:

    phi   += eps * (log p_i - log s_ii - sum_{j != i} log(1 - s_ij))
    nu_ii += eps * (s_ii - z * q_i - y_ii)
    nu_ij += eps * (q_c * z - s_ij - y_ij)
    beta  += eps * (z - e_i)

``beta`` mirrors battery depletion: beta = eps * (capacity - charge) holds
every slot as long as energy causality holds, which is what makes the battery
sizing rule enforce causality at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import BatteryState
from .errors import ConfigError


def _cap_matrix(value, count: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full((count, count), float(arr))
    if arr.shape != (count, count):
        raise ConfigError(f"{name} must be scalar or {count}x{count}, got {arr.shape}")
    if np.any(arr <= 0):
        raise ConfigError(f"{name} entries must be positive")
    return arr


@dataclass(frozen=True, eq=False)
class SchedulerParams:
    """Fixed parameters of the primal-dual policy for ``count`` nodes."""

    epsilon: float
    nu_bar: np.ndarray
    y_bar: np.ndarray
    p: np.ndarray
    collision_prob: float
    s_floor: float = 1e-6

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("step size epsilon must be positive")
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        count = p.size
        if np.any(p < 0) or np.any(p >= 1):
            raise ConfigError("required reception probabilities must lie in [0, 1)")
        if not 0.0 < self.s_floor <= 0.01:
            raise ConfigError("s_floor must lie in (0, 0.01]")
        if not 0.0 <= self.collision_prob <= 1.0:
            raise ConfigError("collision_prob must lie in [0, 1]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "nu_bar", _cap_matrix(self.nu_bar, count, "nu_bar"))
        object.__setattr__(self, "y_bar", _cap_matrix(self.y_bar, count, "y_bar"))

    @property
    def count(self) -> int:
        return self.p.size


def sizing_violations(params: SchedulerParams, capacities) -> list[str]:
    """Check the two sizing rules that bound the duals and guarantee per-slot
    energy causality. Returns one message per violated rule (empty = sized
    correctly)."""
    problems = []
    eps = params.epsilon
    needed_y = (params.nu_bar + 2.0 * eps) / eps
    if np.any(params.y_bar < needed_y - 1e-12):
        worst = np.unravel_index(np.argmax(needed_y - params.y_bar), params.y_bar.shape)
        problems.append(
            f"auxiliary cap y_bar{list(worst)} = {params.y_bar[worst]:g} below "
            f"(nu_bar + 2*eps)/eps = {needed_y[worst]:g}"
        )
    capacities = np.atleast_1d(np.asarray(capacities, dtype=float))
    if capacities.size != params.count:
        raise ConfigError("one battery capacity per node required")
    needed_b = np.diag(params.nu_bar) / eps + 1.0
    if np.any(capacities < needed_b - 1e-12):
        worst = int(np.argmax(needed_b - capacities))
        problems.append(
            f"battery capacity of node {worst} is {capacities[worst]:g}, "
            f"below nu_bar_ii/eps + 1 = {needed_b[worst]:g}"
        )
    if eps > 2.0:
        problems.append(
            f"step size {eps:g} > 2 can break per-slot causality at fractional charge"
        )
    return problems


@dataclass(eq=False)
class NodeDualState:
    """Dual variables owned by one node plus its stale copies of the remote
    multipliers it needs for the transmit decision."""

    phi: float
    nu_own: np.ndarray
    nu_stale: np.ndarray
    beta: float

    def copy(self) -> "NodeDualState":
        return NodeDualState(
            phi=self.phi,
            nu_own=self.nu_own.copy(),
            nu_stale=self.nu_stale.copy(),
            beta=self.beta,
        )


@dataclass(eq=False)
class NodePrimal:
    z: float
    s_own: float
    s_cross: np.ndarray
    y: np.ndarray


@dataclass(eq=False)
class DualSubgradient:
    phi: float
    nu: np.ndarray
    beta: float


def init_duals(node: int, battery: BatteryState, params: SchedulerParams) -> NodeDualState:
    """Start-of-run duals: everything zero except beta, which mirrors the
    initial battery headroom scaled by the step size."""
    count = params.count
    return NodeDualState(
        phi=0.0,
        nu_own=np.zeros(count),
        nu_stale=np.zeros(count),
        beta=params.epsilon * (battery.capacity - battery.charge),
    )


def compute_z(node: int, duals: NodeDualState, q_i: float, params: SchedulerParams) -> float:
    """Transmit probability: exact minimizer of z (z - c) over [0, 1],
    i.e. clip(c / 2, 0, 1). Remote multipliers enter via the stale copies."""
    interference = float(np.sum(duals.nu_stale)) - float(duals.nu_stale[node])
    c = duals.nu_own[node] * q_i - params.collision_prob * interference - duals.beta
    return min(max(0.5 * c, 0.0), 1.0)


def compute_s(node: int, duals: NodeDualState, params: SchedulerParams) -> tuple[float, np.ndarray]:
    """Auxiliary reception variables. The floor keeps the log terms of the
    phi update finite; the nu = 0 corners take the limits of the closed
    forms (s_own -> 1, s_cross -> 0)."""
    floor = params.s_floor
    nu_ii = duals.nu_own[node]
    if nu_ii == 0.0:
        s_own = 1.0
    else:
        s_own = min(max(duals.phi / nu_ii, floor), 1.0)
    s_cross = np.zeros(params.count)
    for j in range(params.count):
        if j == node:
            continue
        nu_ij = duals.nu_own[j]
        if nu_ij == 0.0:
            continue
        s_cross[j] = min(max(1.0 - duals.phi / nu_ij, 0.0), 1.0 - floor)
    return s_own, s_cross


def compute_y(node: int, duals: NodeDualState, params: SchedulerParams) -> np.ndarray:
    """Auxiliary relaxation variables: zero until a multiplier climbs
    strictly above its cap, then the full upper bound (ties stay at zero)."""
    over = duals.nu_own > params.nu_bar[node]
    return np.where(over, params.y_bar[node], 0.0)


def compute_primal(node: int, duals: NodeDualState, q_i: float, params: SchedulerParams) -> NodePrimal:
    s_own, s_cross = compute_s(node, duals, params)
    return NodePrimal(
        z=compute_z(node, duals, q_i, params),
        s_own=s_own,
        s_cross=s_cross,
        y=compute_y(node, duals, params),
    )


def dual_subgradients(
    node: int,
    primal: NodePrimal,
    q_i: float,
    e_i: float,
    params: SchedulerParams,
) -> DualSubgradient:
    """Stochastic subgradients of the dual function at the current primal
    point, evaluated on this slot's observations."""
    p_i = params.p[node]
    log_terms = math.log(primal.s_own) + sum(
        math.log1p(-primal.s_cross[j]) for j in range(params.count) if j != node
    )
    phi_grad = (math.log(p_i) if p_i > 0.0 else -math.inf) - log_terms
    nu_grad = np.empty(params.count)
    for j in range(params.count):
        if j == node:
            nu_grad[j] = primal.s_own - primal.z * q_i - primal.y[j]
        else:
            nu_grad[j] = params.collision_prob * primal.z - primal.s_cross[j] - primal.y[j]
    beta_grad = primal.z - e_i
    return DualSubgradient(phi=phi_grad, nu=nu_grad, beta=beta_grad)


def apply_dual_step(
    duals: NodeDualState,
    grads: DualSubgradient,
    params: SchedulerParams,
    nu_mask=None,
) -> NodeDualState:
    """Projected ascent step. ``nu_mask`` freezes multiplier components whose
    subgradient is unavailable this slot (asynchronous operation); phi and
    beta always step."""
    eps = params.epsilon
    # grads.phi = -inf (p_i = 0) projects cleanly to 0 here.
    phi = max(duals.phi + eps * grads.phi, 0.0)
    step = eps * grads.nu
    if nu_mask is not None:
        step = np.where(np.asarray(nu_mask, dtype=bool), step, 0.0)
    nu_own = np.maximum(duals.nu_own + step, 0.0)
    beta = max(duals.beta + eps * grads.beta, 0.0)
    return NodeDualState(phi=phi, nu_own=nu_own, nu_stale=duals.nu_stale.copy(), beta=beta)


def update_duals(
    node: int,
    duals: NodeDualState,
    primal: NodePrimal,
    q_i: float,
    e_i: float,
    params: SchedulerParams,
    nu_mask=None,
) -> NodeDualState:
    """One full dual update from this slot's primal point and observations."""
    grads = dual_subgradients(node, primal, q_i, e_i, params)
    return apply_dual_step(duals, grads, params, nu_mask=nu_mask)
