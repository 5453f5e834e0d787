"""Plant dynamics, quadratic performance accounting, and the translation of a
Lyapunov decrease-rate target into a required packet-reception probability.

The reception requirement is the smallest mixing weight ``theta`` for which

    theta * Ac'P Ac + (1 - theta) * Ao'P Ao  <=  rho * P   (PSD order)

holds. The pencil is affine in ``theta``, so its feasible set is an interval
touching ``theta = 1`` whenever the closed loop meets the rate; a scalar
bisection on the smallest eigenvalue replaces a general SDP solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InfeasibleTargetError, InvalidStateError

SYMMETRY_RTOL = 1e-9
DEFAULT_LMI_TOL = 1e-6


def _as_square_matrix(value, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


def _check_symmetric(mat: np.ndarray, name: str) -> np.ndarray:
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.T).max() > SYMMETRY_RTOL * scale:
        raise ConfigError(f"{name} is not symmetric within {SYMMETRY_RTOL} relative")
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True, eq=False)
class PlantModel:
    """Switched linear plant with a quadratic performance certificate.

    ``a_closed`` drives the state on slots whose measurement packet arrived,
    ``a_open`` otherwise. ``lyapunov_weight`` is the positive-definite weight
    of the quadratic certificate, ``noise_cov`` the process-noise covariance,
    and ``decrease_rate`` the required per-slot shrink factor in (0, 1).
    """

    a_open: np.ndarray
    a_closed: np.ndarray
    noise_cov: np.ndarray
    lyapunov_weight: np.ndarray
    decrease_rate: float
    noise_factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a_open = _as_square_matrix(self.a_open, "a_open")
        a_closed = _as_square_matrix(self.a_closed, "a_closed")
        cov = _check_symmetric(_as_square_matrix(self.noise_cov, "noise_cov"), "noise_cov")
        weight = _check_symmetric(
            _as_square_matrix(self.lyapunov_weight, "lyapunov_weight"), "lyapunov_weight"
        )
        n = a_open.shape[0]
        for name, mat in (("a_closed", a_closed), ("noise_cov", cov), ("lyapunov_weight", weight)):
            if mat.shape != (n, n):
                raise ConfigError(f"{name} shape {mat.shape} does not match state dim {n}")
        weight_eigs = np.linalg.eigvalsh(weight)
        if weight_eigs.min() <= 0:
            raise ConfigError("lyapunov_weight must be positive definite")
        cov_eigs, cov_vecs = np.linalg.eigh(cov)
        if cov_eigs.min() < -1e-12 * max(cov_eigs.max(), 1.0):
            raise ConfigError("noise_cov must be positive semidefinite")
        if not 0.0 < self.decrease_rate < 1.0:
            raise ConfigError(f"decrease_rate must lie in (0, 1), got {self.decrease_rate}")
        # Factor L with L L' = noise_cov; eigen-based so singular PSD is fine.
        factor = cov_vecs @ np.diag(np.sqrt(np.clip(cov_eigs, 0.0, None)))
        object.__setattr__(self, "a_open", a_open)
        object.__setattr__(self, "a_closed", a_closed)
        object.__setattr__(self, "noise_cov", cov)
        object.__setattr__(self, "lyapunov_weight", weight)
        object.__setattr__(self, "noise_factor", factor)

    @property
    def dim(self) -> int:
        return self.a_open.shape[0]

    def draw_noise(self, rng: np.random.Generator) -> np.ndarray:
        """Sample one process-noise vector with the configured covariance."""
        return self.noise_factor @ rng.standard_normal(self.dim)


@dataclass(frozen=True, eq=False)
class PlantState:
    x: np.ndarray
    t: int = 0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        object.__setattr__(self, "x", x)
        if self.t < 0:
            raise ConfigError("slot index must be non-negative")


def step_plant(
    model: PlantModel, state: PlantState, received: bool, noise: np.ndarray
) -> PlantState:
    """Advance the plant one slot: closed-loop matrix if the packet arrived,
    open-loop otherwise, plus the injected noise vector."""
    noise = np.atleast_1d(np.asarray(noise, dtype=float))
    if not np.all(np.isfinite(state.x)):
        raise InvalidStateError(f"plant state is non-finite at slot {state.t}")
    if not np.all(np.isfinite(noise)):
        raise InvalidStateError(f"noise vector is non-finite at slot {state.t}")
    matrix = model.a_closed if received else model.a_open
    return PlantState(x=matrix @ state.x + noise, t=state.t + 1)


def lyapunov_value(model: PlantModel, state: PlantState) -> float:
    """Quadratic certificate value x' W x (always >= 0 for PD weight)."""
    x = state.x
    return float(x @ model.lyapunov_weight @ x)


def control_performance_bound(model: PlantModel) -> float:
    """Long-run upper bound on the average certificate value,
    trace(W * noise_cov) / (1 - decrease_rate)."""
    return float(np.trace(model.lyapunov_weight @ model.noise_cov)) / (
        1.0 - model.decrease_rate
    )


def _pencil_min_eig(model: PlantModel, theta: float) -> float:
    """Smallest eigenvalue of rho*W - theta*Ac'WAc - (1-theta)*Ao'WAo."""
    w = model.lyapunov_weight
    closed = model.a_closed.T @ w @ model.a_closed
    open_ = model.a_open.T @ w @ model.a_open
    pencil = model.decrease_rate * w - theta * closed - (1.0 - theta) * open_
    scale = max(np.abs(pencil).max(), 1.0)
    if np.abs(pencil - pencil.T).max() > SYMMETRY_RTOL * scale:
        raise InfeasibleTargetError("reception-probability pencil lost symmetry")
    return float(np.linalg.eigvalsh(0.5 * (pencil + pencil.T)).min())


def required_reception_probability(model: PlantModel, tol: float = DEFAULT_LMI_TOL) -> float:
    """Minimal reception probability that keeps the certificate decreasing at
    the configured rate.

    Scalar plants use the closed form (ao^2 - rho) / (ao^2 - ac^2); matrix
    plants bisect on the mixing weight using the smallest-eigenvalue
    feasibility test. Raises :class:`InfeasibleTargetError` when even
    always-on reception (theta = 1) cannot meet the rate.
    """
    if tol <= 0:
        raise ConfigError("tolerance must be positive")
    if model.dim == 1:
        ao2 = float(model.a_open[0, 0]) ** 2
        ac2 = float(model.a_closed[0, 0]) ** 2
        rho = model.decrease_rate
        if ac2 > rho:
            raise InfeasibleTargetError(
                "closed loop cannot meet decrease rate: "
                f"a_closed^2 = {ac2:.6g} > rate {rho:.6g}"
            )
        if ao2 <= rho:
            return 0.0
        # Here ao2 > rho >= ac2, so the ratio lies in (0, 1].
        return (ao2 - rho) / (ao2 - ac2)

    if _pencil_min_eig(model, 1.0) < -tol * np.abs(model.lyapunov_weight).max():
        raise InfeasibleTargetError(
            "closed loop cannot meet decrease rate: pencil infeasible at theta = 1"
        )
    if _pencil_min_eig(model, 0.0) >= 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _pencil_min_eig(model, mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    # Return the feasible end so the result satisfies the inequality.
    return hi
