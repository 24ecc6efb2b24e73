"""Time-domain simulation of the closed loop, in node space and mode space.

Node-space runs propagate the state split into two exactly invariant parts:
the network average (a scalar recursion per dimension, where the Laplacian
vanishes) and the disagreement, which lives in the subspace orthogonal to
the all-ones vector and is re-projected there after every step. The split
is exact algebra, but it keeps the consensus error accurate to relative
precision long after it has dropped below ``eps * |x|``. Recombined
positions and velocities are reported as usual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceFloor, DomainError, ParameterError
from .graphs import Graph, Spectrum, laplacian_spectrum
from .modes import ControlParams, companion_matrix


def _as_states(a: ArrayLike, n: int, name: str) -> NDArray[np.float64]:
    a = np.array(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != n:
        raise ParameterError(f"{name} must have shape ({n},) or ({n}, n_dim), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Horizon and initial state of a run.

    ``x0`` and ``v0`` have shape ``(N, n_dim)``; 1-D input is read as one
    spatial dimension. Memory history is ``v(-M) = ... = v(-1) = v(0)``.
    """

    horizon: int
    x0: NDArray[np.float64]
    v0: NDArray[np.float64]
    seed: int | None = None

    def __post_init__(self) -> None:
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ParameterError(f"horizon must be a positive integer, got {self.horizon}")
        x0 = np.array(self.x0, dtype=np.float64)
        n = x0.shape[0] if x0.ndim else 0
        x0 = _as_states(x0, n, "x0")
        v0 = _as_states(self.v0, n, "v0")
        if v0.shape != x0.shape:
            raise ParameterError(f"x0 {x0.shape} and v0 {v0.shape} disagree")
        x0.setflags(write=False)
        v0.setflags(write=False)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "v0", v0)

    @classmethod
    def random(
        cls,
        n: int,
        horizon: int,
        seed: int,
        n_dim: int = 1,
        low: float = -10.0,
        high: float = 10.0,
    ) -> "SimConfig":
        """Positions and velocities drawn uniformly from ``[low, high]``."""
        rng = np.random.default_rng(seed)
        x0 = rng.uniform(low, high, size=(n, n_dim))
        v0 = rng.uniform(low, high, size=(n, n_dim))
        return cls(horizon, x0, v0, seed)

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    @property
    def n_dim(self) -> int:
        return self.x0.shape[1]


@dataclass(frozen=True, eq=False)
class FormationPlan:
    """Piecewise-constant desired positions.

    Each segment is ``(k_start, positions)`` with ``positions`` of shape
    ``(N, n_dim)``; a segment's offsets drive the protocol from ``k_start``
    until the next segment starts.
    """

    segments: tuple[tuple[int, NDArray[np.float64]], ...]

    def __post_init__(self) -> None:
        segs = []
        for start, pos in self.segments:
            pos = np.array(pos, dtype=np.float64)
            if pos.ndim == 1:
                pos = pos[:, None]
            pos.setflags(write=False)
            segs.append((int(start), pos))
        if not segs:
            raise ParameterError("formation plan needs at least one segment")
        if segs[0][0] != 0:
            raise ParameterError("first formation segment must start at k = 0")
        starts = [s for s, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ParameterError(f"segment starts must strictly increase, got {starts}")
        shapes = {pos.shape for _, pos in segs}
        if len(shapes) != 1:
            raise ParameterError(f"segments disagree on shape: {sorted(shapes)}")
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def fixed(cls, positions: ArrayLike) -> "FormationPlan":
        return cls(((0, np.asarray(positions)),))

    @property
    def shape(self) -> tuple[int, int]:
        return self.segments[0][1].shape

    def offsets_at(self, k: int) -> NDArray[np.float64]:
        current = self.segments[0][1]
        for start, pos in self.segments:
            if start > k:
                break
            current = pos
        return current

    def relative(self, k: int) -> NDArray[np.float64]:
        """Desired relative positions ``p_i - p_j`` at step ``k``, shape ``(N, N, n_dim)``."""
        p = self.offsets_at(k)
        return p[:, None, :] - p[None, :, :]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States for ``k = 0..K`` plus error series.

    ``x`` and ``v`` have shape ``(K+1, N, n_dim)``. ``e_norm`` is the
    Euclidean norm of the stacked consensus error, measured against the
    initial averages (for formation runs: of the shifted positions
    ``x - p``). ``formation_error`` is set for formation runs only.
    """

    x: NDArray[np.float64]
    v: NDArray[np.float64]
    e_norm: NDArray[np.float64]
    params: ControlParams
    graph_digest: str
    formation_error: NDArray[np.float64] | None = None

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    @property
    def n_dim(self) -> int:
        return self.x.shape[2]

    @property
    def steps(self) -> NDArray[np.int64]:
        return np.arange(self.horizon + 1)

    @property
    def times(self) -> NDArray[np.float64]:
        return self.steps * self.params.tau

    def mean_velocity(self) -> NDArray[np.float64]:
        return self.v.mean(axis=1)

    def mean_position(self) -> NDArray[np.float64]:
        return self.x.mean(axis=1)


@dataclass(frozen=True, eq=False)
class ModeTrajectory:
    """Graph-Fourier coordinates ``x~ = Omega^T x`` and ``v~ = Omega^T v``.

    Arrays have shape ``(K+1, N, n_dim)``; axis 1 indexes the modes.
    """

    x: NDArray[np.float64]
    v: NDArray[np.float64]
    basis: NDArray[np.float64] = field(repr=False)

    def reconstruct(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Node-space positions and velocities ``sum_i w_i x~_i``."""
        x = np.einsum("ni,kid->knd", self.basis, self.x)
        v = np.einsum("ni,kid->knd", self.basis, self.v)
        return x, v


def _run_dimension(
    lap: NDArray[np.float64],
    p: ControlParams,
    x0: NDArray[np.float64],
    v0: NDArray[np.float64],
    horizon: int,
    segments: Sequence[tuple[int, NDArray[np.float64]]] | None = None,
):
    """Propagate one spatial dimension.

    Returns positions, velocities, squared consensus error and the
    disagreement parts of the (shifted) positions and of the velocities.
    """
    n = x0.size
    tau, e1, e2 = p.tau, p.eps1, p.eps2
    theta = np.asarray(p.theta)
    theta_sum = p.theta_sum

    switches = dict(segments[1:]) if segments else {}
    off = segments[0][1] if segments else np.zeros(n)
    xi0 = x0 - off
    xbar = xi0.mean()
    vbar = v0.mean()
    dx = xi0 - xbar
    dx -= dx.mean()
    dv = v0 - vbar
    dv -= dv.mean()
    # newest first: hist[m] holds v(k - m)
    dv_hist = [dv] * (p.M + 1)
    mu_x = 0.0
    mu_v_hist = [0.0] * (p.M + 1)

    x = np.empty((horizon + 1, n))
    v = np.empty((horizon + 1, n))
    dx_series = np.empty((horizon + 1, n))
    dv_series = np.empty((horizon + 1, n))
    e_sq = np.empty(horizon + 1)

    for k in range(horizon + 1):
        if k in switches:
            # retarget: x - p jumps by p_old - p_new, split into mean and disagreement
            jump = off - switches[k]
            off = switches[k]
        if k in switches and np.any(jump):
            shift = jump.mean()
            xbar += shift
            dx = dx + (jump - shift)
            dx -= dx.mean()

        mu_v = mu_v_hist[0]
        x[k] = (xbar + k * tau * vbar + mu_x + dx) + off
        v[k] = vbar + mu_v + dv
        dx_series[k] = dx
        dv_series[k] = dv
        e_sq[k] = np.sum((mu_x + dx) ** 2) + np.sum((mu_v + dv) ** 2)
        if k == horizon:
            break

        memory = sum(t * h for t, h in zip(theta, dv_hist))
        u = -e1 * (lap @ dx) - e2 * (lap @ dv) + memory
        dx_next = dx + tau * dv
        dv_next = dv + tau * u
        dx = dx_next - dx_next.mean()
        dv = dv_next - dv_next.mean()
        dv_hist = [dv] + dv_hist[:-1]

        mu_memory = math.fsum(t * h for t, h in zip(theta, mu_v_hist))
        mu_v_next = mu_v + tau * (theta_sum * vbar + mu_memory)
        mu_x = mu_x + tau * mu_v
        mu_v_hist = [mu_v_next] + mu_v_hist[:-1]

    # the initial state is reported as given, not recombined
    x[0], v[0] = x0, v0
    return x, v, e_sq, dx_series, dv_series


def _check_connected(g: Graph) -> None:
    laplacian_spectrum(g).require_connected()


def _stack(runs, index: int) -> NDArray[np.float64]:
    return np.stack([r[index] for r in runs], axis=-1)


def simulate_consensus(g: Graph, p: ControlParams, cfg: SimConfig) -> Trajectory:
    """Run the closed loop ``x+ = x + tau v``, ``v+ = v + tau u`` for ``cfg.horizon`` steps."""
    if cfg.n != g.n:
        raise ParameterError(f"initial state has {cfg.n} agents, graph has {g.n}")
    _check_connected(g)
    lap = g.laplacian()
    runs = [
        _run_dimension(lap, p, cfg.x0[:, d], cfg.v0[:, d], cfg.horizon)
        for d in range(cfg.n_dim)
    ]
    e_norm = np.sqrt(np.sum([r[2] for r in runs], axis=0))
    return Trajectory(_stack(runs, 0), _stack(runs, 1), e_norm, p, g.digest())


def simulate_formation(
    g: Graph, p: ControlParams, plan: FormationPlan, cfg: SimConfig
) -> Trajectory:
    """Formation protocol: the position coupling acts on ``x - p`` instead of ``x``.

    Agents converge to ``x_i - x_j -> p_i - p_j`` with a common velocity.
    States and memory carry over unchanged when the plan switches segments.
    ``formation_error`` is the largest relative-position gap over graph
    edges plus the largest pairwise velocity gap (Euclidean across
    dimensions).
    """
    if p.M != 1:
        raise DomainError(f"formation protocol uses one memory tap, got M = {p.M}")
    if cfg.n != g.n:
        raise ParameterError(f"initial state has {cfg.n} agents, graph has {g.n}")
    if plan.shape != (cfg.n, cfg.n_dim):
        raise ParameterError(
            f"plan positions have shape {plan.shape}, expected {(cfg.n, cfg.n_dim)}"
        )
    _check_connected(g)
    lap = g.laplacian()
    runs = []
    for d in range(cfg.n_dim):
        segments = [(start, np.ascontiguousarray(pos[:, d])) for start, pos in plan.segments]
        runs.append(_run_dimension(lap, p, cfg.x0[:, d], cfg.v0[:, d], cfg.horizon, segments))
    e_norm = np.sqrt(np.sum([r[2] for r in runs], axis=0))

    iu, ju = np.nonzero(np.triu(g.weights, k=1))
    dx, dv = _stack(runs, 3), _stack(runs, 4)
    pos_gap = np.linalg.norm(dx[:, iu] - dx[:, ju], axis=-1).max(axis=1)
    vel_gap = np.linalg.norm(dv[:, :, None] - dv[:, None, :], axis=-1).max(axis=(1, 2))
    return Trajectory(
        _stack(runs, 0), _stack(runs, 1), e_norm, p, g.digest(), pos_gap + vel_gap
    )


def simulate_modes(s: Spectrum, p: ControlParams, cfg: SimConfig) -> ModeTrajectory:
    """Propagate every graph-Fourier mode with its companion matrix ``Phi(lambda_i)``."""
    if cfg.n != s.n:
        raise ParameterError(f"initial state has {cfg.n} agents, spectrum has {s.n}")
    basis = s.eigenvectors
    xt0 = basis.T @ cfg.x0
    vt0 = basis.T @ cfg.v0
    K, n, nd = cfg.horizon, cfg.n, cfg.n_dim
    xt = np.empty((K + 1, n, nd))
    vt = np.empty((K + 1, n, nd))
    for i, lam in enumerate(s.eigenvalues):
        phi = companion_matrix(p, lam)
        y = np.empty((p.M + 2, nd))
        y[0] = xt0[i]
        y[1:] = vt0[i]
        xt[0, i], vt[0, i] = y[0], y[1]
        for k in range(1, K + 1):
            y = phi @ y
            xt[k, i], vt[k, i] = y[0], y[1]
    return ModeTrajectory(xt, vt, basis)


def estimate_rate(e_norm: ArrayLike, window: int) -> float:
    """Per-step contraction factor from a log-linear fit over the last ``window`` samples.

    Raises:
        ConvergenceFloor: a sample in the window is exactly zero.
    """
    e = np.asarray(e_norm, dtype=np.float64)
    if window < 2 or e.size <= window:
        raise DomainError(f"need len(series) > window >= 2, got {e.size} and {window}")
    tail = e[-window:]
    if np.any(tail <= 0):
        raise ConvergenceFloor("error series hit zero inside the fitting window")
    slope = np.polyfit(np.arange(window, dtype=np.float64), np.log(tail), 1)[0]
    return float(np.exp(slope))


def formation_gap(traj: Trajectory, plan: FormationPlan, g: Graph, k: int) -> float:
    """Formation error at step ``k`` recomputed from the stored node-space states.

    Unlike :attr:`Trajectory.formation_error` this works on recombined
    positions, so it bottoms out near ``eps * |x|``.
    """
    rel = plan.relative(k)
    x, v = traj.x[k], traj.v[k]
    iu, ju = np.nonzero(np.triu(g.weights, k=1))
    pos = np.linalg.norm((x[iu] - x[ju]) - rel[iu, ju], axis=-1).max()
    dv = v[:, None, :] - v[None, :, :]
    return float(pos + np.linalg.norm(dv, axis=-1).max())
