"""Finite-difference gradient descent on the worst-mode spectral radius.

The free coordinates are ``Theta = (eps1, eps2, theta_0, ..., theta_{M-1})``.
The last tap is always derived as ``theta_M = -sum(theta_0..theta_{M-1})``,
so every iterate satisfies the zero-sum condition exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import OptimizationError, ParameterError
from .gains import gains_m1
from .graphs import Spectrum
from .modes import ControlParams, convergence_rate


@dataclass(frozen=True)
class OptimizerConfig:
    memory: int
    tau: float
    iterations: int = 2000
    learning_rate: float = 1e-2
    fd_step: float = 1e-6

    def __post_init__(self) -> None:
        if self.memory < 1:
            raise ParameterError(f"memory depth must be >= 1, got {self.memory}")
        if not self.tau > 0:
            raise ParameterError(f"sampling period must be positive, got {self.tau}")
        if self.iterations < 0:
            raise ParameterError(f"iterations must be >= 0, got {self.iterations}")
        if not self.learning_rate > 0:
            raise ParameterError(f"learning rate must be positive, got {self.learning_rate}")
        if not self.fd_step > 0:
            raise ParameterError(f"finite-difference step must be positive, got {self.fd_step}")


class OptimizeResult(NamedTuple):
    theta: NDArray[np.float64]
    """Best iterate seen."""
    rate: float
    final_theta: NDArray[np.float64]
    final_rate: float
    history: NDArray[np.float64]
    """Objective value at every iterate, ``iterations + 1`` entries."""

    def control_params(self, tau: float) -> ControlParams:
        return expand_theta(self.theta, tau)


def expand_theta(theta: ArrayLike, tau: float) -> ControlParams:
    """Full control parameters from a free coordinate vector."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.size < 3:
        raise ParameterError("Theta needs eps1, eps2 and at least one free tap")
    taps = [float(t) for t in theta[2:]]
    taps.append(-math.fsum(taps))
    return ControlParams(tau, float(theta[0]), float(theta[1]), tuple(taps))


def pack_params(p: ControlParams, memory: int | None = None) -> NDArray[np.float64]:
    """Free coordinates of ``p``, zero padded to a deeper memory if asked.

    The last tap of ``p`` is dropped, since it is implied by zero sum.
    """
    memory = p.M if memory is None else memory
    if memory < p.M:
        raise ParameterError(f"cannot shrink memory from {p.M} to {memory}")
    taps = list(p.theta)
    taps += [0.0] * (memory - p.M)
    return np.array([p.eps1, p.eps2, *taps[:memory]], dtype=np.float64)


def warm_start(s: Spectrum, tau: float, memory: int) -> NDArray[np.float64]:
    """Closed-form one-tap optimum embedded in ``memory`` taps."""
    report = gains_m1(s.lambda2, s.lambdaN, tau)
    return pack_params(report.params, memory)


def objective(theta: ArrayLike, s: Spectrum, tau: float, M: int | None = None) -> float:
    """Convergence rate of the parameter set encoded by ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    if M is not None and theta.size != M + 2:
        raise ParameterError(f"Theta for M={M} needs {M + 2} entries, got {theta.size}")
    return convergence_rate(expand_theta(theta, tau), s)


def finite_diff_gradient(
    theta: ArrayLike, s: Spectrum, cfg: OptimizerConfig, base: float | None = None
) -> NDArray[np.float64]:
    """Forward differences ``(F(Theta + delta e_j) - F(Theta)) / delta``.

    Pass ``base = F(Theta)`` when already known to skip one evaluation.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if base is None:
        base = objective(theta, s, cfg.tau, cfg.memory)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        bumped = theta.copy()
        bumped[j] += cfg.fd_step
        grad[j] = (objective(bumped, s, cfg.tau, cfg.memory) - base) / cfg.fd_step
    return grad


def _evaluate(theta: NDArray[np.float64], s: Spectrum, tau: float) -> float | None:
    """Objective value, or ``None`` when ``theta`` or the rate is not finite."""
    if not np.all(np.isfinite(theta)):
        return None
    try:
        value = objective(theta, s, tau)
    except (ParameterError, np.linalg.LinAlgError):
        return None
    return value if math.isfinite(value) else None


def optimize(
    theta0: ArrayLike | None, s: Spectrum, cfg: OptimizerConfig
) -> OptimizeResult:
    """Fixed-step descent ``Theta <- Theta - alpha * grad F`` for ``cfg.iterations`` steps.

    ``theta0=None`` starts from :func:`warm_start`. The best iterate seen is
    returned alongside the final one.

    Raises:
        OptimizationError: the objective or gradient became non-finite.
    """
    s.require_connected()
    theta = warm_start(s, cfg.tau, cfg.memory) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (cfg.memory + 2,):
        raise ParameterError(
            f"Theta for M={cfg.memory} needs {cfg.memory + 2} entries, got shape {theta.shape}"
        )

    if not np.all(np.isfinite(theta)):
        raise OptimizationError("initial Theta is not finite", None, None)
    value = _evaluate(theta, s, cfg.tau)
    if value is None:
        raise OptimizationError("objective is not finite at the initial point", None, None)
    best_theta, best_value = theta.copy(), value
    history = [value]
    grad = finite_diff_gradient(theta, s, cfg, base=value)

    for t in range(1, cfg.iterations + 1):
        if not np.all(np.isfinite(grad)):
            raise OptimizationError(f"non-finite gradient at iteration {t - 1}", theta, value)
        candidate = theta - cfg.learning_rate * grad
        candidate_value = _evaluate(candidate, s, cfg.tau)
        if candidate_value is None:
            raise OptimizationError(f"non-finite objective at iteration {t}", theta, value)
        theta, value = candidate, candidate_value
        history.append(value)
        if value < best_value:
            best_theta, best_value = theta.copy(), value
        grad = finite_diff_gradient(theta, s, cfg, base=value)

    return OptimizeResult(best_theta, best_value, theta, value, np.array(history))
