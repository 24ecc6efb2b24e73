"""Per-mode closed-loop dynamics of the memory consensus protocol.

Projecting the network onto the Laplacian eigenbasis turns consensus into
``N - 1`` independent linear recursions, one per nonzero eigenvalue. Each
mode is driven by an ``(M+2) x (M+2)`` companion matrix whose spectral
radius sets how fast that mode dies out. The worst mode is the
convergence rate of the whole network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ComputationError, DomainError, ParameterError
from .graphs import Spectrum

ZERO_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ControlParams:
    """Sampling period and gains of the M-tap memory protocol.

    The control input of agent ``i`` is::

        u_i(k) = eps1 * sum_j a_ij (x_j - x_i) + eps2 * sum_j a_ij (v_j - v_i)
                 + sum_{m=0..M} theta[m] * v_i(k - m)
    """

    tau: float
    eps1: float
    eps2: float
    theta: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        theta = tuple(float(t) for t in np.atleast_1d(self.theta))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "eps1", float(self.eps1))
        object.__setattr__(self, "eps2", float(self.eps2))
        if not self.tau > 0:
            raise ParameterError(f"sampling period must be positive, got {self.tau}")
        if not theta:
            raise ParameterError("theta needs at least one tap")
        if not all(math.isfinite(v) for v in (self.eps1, self.eps2, *theta)):
            raise ParameterError("control gains must be finite")

    @property
    def M(self) -> int:
        return len(self.theta) - 1

    @property
    def theta_sum(self) -> float:
        return math.fsum(self.theta)

    @property
    def zero_sum(self) -> bool:
        """Whether the memory taps cancel, a prerequisite for consensus."""
        return abs(self.theta_sum) <= ZERO_SUM_TOL

    @classmethod
    def memoryless(cls, tau: float, eps1: float, eps2: float) -> "ControlParams":
        return cls(tau, eps1, eps2, (0.0,))

    @classmethod
    def one_tap(cls, tau: float, eps1: float, eps2: float, theta0: float) -> "ControlParams":
        return cls(tau, eps1, eps2, (theta0, -theta0))

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "theta": list(self.theta),
            "M": self.M,
        }


@dataclass(frozen=True, eq=False)
class PolyCoeffs:
    """Monic polynomial, coefficients in descending powers of ``z``."""

    coeffs: NDArray[np.float64]

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if c.size == 0 or c[0] == 0 or not np.all(np.isfinite(c)):
            raise DomainError("polynomial needs a finite nonzero leading coefficient")
        c = c / c[0]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return np.polyval(self.coeffs, z)

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, i):
        return self.coeffs[i]


def companion_matrix(p: ControlParams, lam: float) -> NDArray[np.float64]:
    """State-transition matrix of one mode.

    The mode state is ``[x, v(k), v(k-1), ..., v(k-M)]``.
    """
    d = p.M + 2
    phi = np.zeros((d, d))
    phi[0, 0] = 1.0
    phi[0, 1] = p.tau
    phi[1, 0] = -p.tau * p.eps1 * lam
    phi[1, 1] = 1.0 - p.tau * p.eps2 * lam + p.tau * p.theta[0]
    phi[1, 2:] = p.tau * np.asarray(p.theta[1:])
    for row in range(2, d):
        phi[row, row - 1] = 1.0
    return phi


def _char_coeffs(p: ControlParams, lams: NDArray[np.float64]) -> NDArray[np.float64]:
    # d(z) = z^M [(z-1)(z-1+tau eps2 lam) + tau^2 eps1 lam] - (z-1) sum_m tau theta_m z^(M-m)
    lams = np.asarray(lams, dtype=np.float64)
    M = p.M
    out = np.zeros(lams.shape + (M + 3,))
    out[..., 0] = 1.0
    out[..., 1] = p.tau * p.eps2 * lams - 2.0
    out[..., 2] = 1.0 - p.tau * p.eps2 * lams + p.tau**2 * p.eps1 * lams
    memory = np.convolve(p.tau * np.asarray(p.theta), [1.0, -1.0])
    out[..., 1:] -= memory
    return out


def char_poly(p: ControlParams, lam: float) -> PolyCoeffs:
    """Characteristic polynomial ``det(zI - Phi(lam))``, degree ``M + 2``."""
    return PolyCoeffs(_char_coeffs(p, np.float64(lam)))


def _spectral_radii(coeffs: NDArray[np.float64]) -> NDArray[np.float64]:
    # rows of monic coefficients -> max |root| per row, via companion eigenvalues
    coeffs = np.atleast_2d(coeffs)
    deg = coeffs.shape[-1] - 1
    comp = np.zeros(coeffs.shape[:-1] + (deg, deg))
    comp[..., 0, :] = -coeffs[..., 1:] / coeffs[..., :1]
    idx = np.arange(deg - 1)
    comp[..., idx + 1, idx] = 1.0
    try:
        roots = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise ComputationError(f"companion eigensolve failed: {exc}") from exc
    return np.abs(roots).max(axis=-1)


def max_modulus_root(c: PolyCoeffs | ArrayLike) -> float:
    """Largest root modulus of a polynomial.

    Computed as the spectral radius of the polynomial's companion matrix.
    """
    if not isinstance(c, PolyCoeffs):
        c = PolyCoeffs(c)
    if c.degree < 1:
        raise DomainError("a constant polynomial has no roots")
    return float(_spectral_radii(c.coeffs)[0])


def mode_radii(p: ControlParams, lams: Sequence[float] | NDArray[np.float64]) -> NDArray[np.float64]:
    """Spectral radius of ``Phi(lam)`` for each ``lam``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    if lams.size == 0:
        return np.zeros(0)
    return _spectral_radii(_char_coeffs(p, lams))


def convergence_rate(p: ControlParams, s: Spectrum) -> float:
    """Worst-mode spectral radius over ``lambda_2 .. lambda_N``.

    Consensus is reached iff the value is below 1 (and the taps sum to zero,
    which this function does not check).
    """
    s.require_connected()
    return float(mode_radii(p, s.nonzero).max())


def jury_cubic_stable(a0: float, a1: float, a2: float, a3: float) -> bool:
    """Jury test: are all roots of ``a0 z^3 + a1 z^2 + a2 z + a3`` inside |z| < 1?

    The last condition compares ``|a3^2 - a0^2|`` *greater than*
    ``|a1 a3 - a0 a2|``.
    """
    if not a0 > 0:
        raise DomainError(f"leading coefficient must be positive, got {a0}")
    return bool(
        abs(a3) < a0
        and a0 + a1 + a2 + a3 > 0
        and a0 - a1 + a2 - a3 > 0
        and abs(a3 * a3 - a0 * a0) > abs(a1 * a3 - a0 * a2)
    )


def consensus_region_m1(p: ControlParams, s: Spectrum) -> bool:
    """Closed-form consensus test for the one-tap protocol.

    Evaluates the four Jury inequalities of the M = 1 characteristic cubic
    directly in terms of the gains, for every nonzero Laplacian eigenvalue.
    """
    if p.M != 1:
        raise DomainError(f"one-tap consensus region needs M = 1, got M = {p.M}")
    if not p.zero_sum:
        raise DomainError("one-tap consensus region assumes theta_1 = -theta_0")
    s.require_connected()
    tau, e1, e2, t0 = p.tau, p.eps1, p.eps2, p.theta[0]
    lam = s.nonzero
    lhs = np.abs(tau**2 * t0**2 - 1.0)
    rhs = np.abs(tau**2 * e2 * t0 * lam + tau**2 * e1 * lam - tau * e2 * lam - tau**2 * t0**2 + 1.0)
    ok = (
        (abs(tau * t0) < 1.0)
        & (tau**2 * e1 * lam > 0)
        & (4.0 + 4.0 * tau * t0 - 2.0 * tau * e2 * lam + tau**2 * e1 * lam > 0)
        & (lhs > rhs)
    )
    return bool(np.all(ok))


def scaled_jury_residuals(
    r: float, p: ControlParams, lambda2: float, lambdaN: float
) -> NDArray[np.float64]:
    """Left-hand sides of the radius-``r`` Jury constraints of the M = 1 cubic.

    Substituting ``z = r w`` and requiring the roots in ``w`` to lie inside
    the unit circle gives six inequalities ``>= 0``. Those linear in the
    eigenvalue are evaluated at the binding end of the spectrum: the first
    three at ``lambdaN``, the fourth at ``lambda2``. The remaining two are
    eigenvalue free.

    ``r = 1`` recovers the unscaled Jury conditions.
    """
    if p.M != 1:
        raise DomainError(f"scaled Jury residuals need M = 1, got M = {p.M}")
    if not 0.0 < r <= 1.0:
        raise DomainError(f"radius must lie in (0, 1], got {r}")
    tau, e1, e2, t0 = p.tau, p.eps1, p.eps2, p.theta[0]
    r2, r4 = r * r, r**4
    lN, l2 = lambdaN, lambda2
    return np.array(
        [
            (r - tau * t0) * (r - 1) ** 2 + (tau**2 * e1 * r + tau * e2 * r2 - tau * e2 * r) * lN,
            (r + tau * t0) * (r + 1) ** 2 + (tau**2 * e1 * r - tau * e2 * r2 - tau * e2 * r) * lN,
            (r4 - tau**2 * t0**2) * (r2 + 1)
            + 2 * tau * t0 * r2 * (r2 - 1)
            + (-tau * e2 * r4 + tau**2 * e1 * r4 + tau**2 * e2 * t0 * r2) * lN,
            (r4 + tau**2 * t0**2) * (r2 - 1)
            - 2 * tau * t0 * r2 * (r2 - 1)
            + (tau * e2 * r4 - tau**2 * e1 * r4 - tau**2 * e2 * t0 * r2) * l2,
            r**3 - tau * t0,
            r**3 + tau * t0,
        ]
    )
