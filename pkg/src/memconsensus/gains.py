"""Closed-form optimal rates and gains for the memoryless and one-tap protocols.

Both optima depend on the network only through the extreme nonzero
Laplacian eigenvalues ``lambda2`` and ``lambdaN``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .modes import ControlParams


@dataclass(frozen=True)
class GainReport:
    r_star: float
    params: ControlParams
    lambda2: float
    lambdaN: float

    def as_dict(self) -> dict:
        return {
            "r_star": self.r_star,
            "lambda2": self.lambda2,
            "lambdaN": self.lambdaN,
            **self.params.as_dict(),
        }


def _check_endpoints(lambda2: float, lambdaN: float) -> None:
    if not lambda2 > 0:
        raise ParameterError(f"lambda2 must be positive, got {lambda2}")
    if lambdaN < lambda2:
        raise ParameterError(f"need lambda2 <= lambdaN, got {lambda2} > {lambdaN}")


def r0_star(lambda2: float, lambdaN: float) -> float:
    """Optimal memoryless rate ``sqrt(1 - 2 / (lambdaN/lambda2 + 1))``."""
    _check_endpoints(lambda2, lambdaN)
    return math.sqrt(max(0.0, 1.0 - 2.0 / (lambdaN / lambda2 + 1.0)))


def r1_star(lambda2: float, lambdaN: float) -> float:
    """Optimal one-tap rate ``sqrt(1 - 2 / (sqrt(2 lambdaN/lambda2 - 1) + 1))``."""
    _check_endpoints(lambda2, lambdaN)
    return math.sqrt(max(0.0, 1.0 - 2.0 / (math.sqrt(2.0 * lambdaN / lambda2 - 1.0) + 1.0)))


def gains_m1(lambda2: float, lambdaN: float, tau: float) -> GainReport:
    """Gains attaining :func:`r1_star` with one memory tap.

    ``theta = (theta0, -theta0)`` so the taps sum to zero.
    """
    if not tau > 0:
        raise ParameterError(f"sampling period must be positive, got {tau}")
    r = r1_star(lambda2, lambdaN)
    r2, r4 = r * r, r**4
    eps1 = (1.0 - r4) / (tau**2 * lambdaN)
    eps2 = (r4 + r2 + 2.0) / (tau * lambdaN)
    theta0 = r4 / tau
    return GainReport(r, ControlParams.one_tap(tau, eps1, eps2, theta0), lambda2, lambdaN)


def formation_gains(lambda2: float, lambdaN: float, tau: float) -> GainReport:
    """Fastest-formation gains; the shifted formation system has the same optimum."""
    return gains_m1(lambda2, lambdaN, tau)
