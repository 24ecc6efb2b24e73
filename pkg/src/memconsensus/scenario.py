"""Scenario files, gains files and trajectory CSV export.

A scenario is a JSON object::

    {
      "version": 1,
      "graph": "path:8",                  # or "graph_file": "net.txt"
      "tau": 0.1,
      "memory": 1,
      "gains": "optimal-m1",              # | "optimize" | {"eps1": .., "eps2": .., "theta": [..]}
      "optimizer": {"iterations": 2000, "learning_rate": 0.01, "fd_step": 1e-6},
      "simulation": {"steps": 400,
                     "init": {"random": {"seed": 1, "low": -10, "high": 10, "dim": 1}}},
      "formation": {"segments": [{"start": 0, "positions": [[0, 0], ...]}, ...]}
    }

Unknown keys are rejected. Relative ``graph_file`` paths resolve against
the scenario file's directory.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ParameterError
from .gains import gains_m1
from .graphs import Graph, laplacian_spectrum, load_edge_list, parse_graph_spec
from .modes import ControlParams
from .optimizer import OptimizerConfig, expand_theta, optimize
from .simulate import FormationPlan, SimConfig, Trajectory

SCENARIO_VERSION = 1
GAINS_MODES = ("optimal-m1", "optimize")


class ScenarioError(ParameterError):
    """Invalid scenario or gains file."""


def _strict(obj: Any, allowed: set[str], where: str, required: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"unknown field(s) in {where}: {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ScenarioError(f"missing field(s) in {where}: {sorted(missing)}")
    return obj


def gains_from_dict(obj: dict, tau: float | None = None) -> ControlParams:
    """Read a gains object ``{tau, eps1, eps2, theta, M}``.

    ``tau`` and ``M`` are optional when the surrounding scenario supplies
    them; if present they must be consistent. An object wrapping the gains
    under a ``"gains"`` key (as emitted with ``--json``) is accepted too.
    """
    if isinstance(obj, dict) and isinstance(obj.get("gains"), dict):
        obj = obj["gains"]
    d = _strict(obj, {"tau", "eps1", "eps2", "theta", "M"}, "gains", {"eps1", "eps2", "theta"})
    file_tau = d.get("tau")
    if file_tau is None and tau is None:
        raise ScenarioError("gains need a sampling period tau")
    if file_tau is not None and tau is not None and float(file_tau) != float(tau):
        raise ScenarioError(f"gains tau {file_tau} disagrees with scenario tau {tau}")
    theta = d["theta"]
    if not isinstance(theta, list) or not theta:
        raise ScenarioError("gains theta must be a non-empty list")
    if "M" in d and d["M"] != len(theta) - 1:
        raise ScenarioError(f"gains M={d['M']} disagrees with {len(theta)} taps")
    return ControlParams(
        float(file_tau if file_tau is not None else tau),
        float(d["eps1"]),
        float(d["eps2"]),
        tuple(float(t) for t in theta),
    )


def load_gains(path: str | Path) -> ControlParams:
    return gains_from_dict(json.loads(Path(path).read_text()))


def resolve_graph(source: str, base: Path | None = None) -> Graph:
    """Edge-list path if such a file exists, generator spec otherwise."""
    path = Path(source)
    if base is not None and not path.is_absolute():
        path = base / path
    if path.is_file():
        return load_edge_list(path.read_text())
    return parse_graph_spec(source)


@dataclass
class Scenario:
    graph: str | None = None
    graph_file: str | None = None
    tau: float = 0.1
    memory: int = 1
    gains: str | ControlParams = "optimal-m1"
    optimizer: dict = field(default_factory=dict)
    steps: int = 400
    init: dict = field(default_factory=lambda: {"random": {"seed": 0}})
    formation: list[tuple[int, list]] | None = None
    base_dir: Path | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if (self.graph is None) == (self.graph_file is None):
            raise ScenarioError("scenario needs exactly one of 'graph' and 'graph_file'")
        if not self.tau > 0:
            raise ScenarioError(f"tau must be positive, got {self.tau}")
        if int(self.memory) != self.memory or self.memory < 0:
            raise ScenarioError(f"memory must be a nonnegative integer, got {self.memory}")
        if isinstance(self.gains, str):
            if self.gains not in GAINS_MODES:
                raise ScenarioError(f"gains must be one of {GAINS_MODES} or an object")
            if self.gains == "optimal-m1" and self.memory != 1:
                raise ScenarioError("optimal-m1 gains need memory = 1")
            if self.gains == "optimize" and self.memory < 1:
                raise ScenarioError("optimized gains need memory >= 1")
        elif self.gains.M != self.memory:
            raise ScenarioError(f"gains carry M={self.gains.M}, scenario memory is {self.memory}")
        elif self.gains.tau != self.tau:
            raise ScenarioError(f"gains tau {self.gains.tau} disagrees with scenario tau {self.tau}")
        _strict(self.optimizer, {"iterations", "learning_rate", "fd_step"}, "optimizer")
        if len(self.init) != 1 or next(iter(self.init)) not in ("random", "explicit"):
            raise ScenarioError("simulation.init needs exactly one of 'random' and 'explicit'")
        if "random" in self.init:
            _strict(self.init["random"], {"seed", "low", "high", "dim"}, "init.random")
        else:
            _strict(self.init["explicit"], {"x0", "v0"}, "init.explicit", {"x0", "v0"})

    # -- resolution ---------------------------------------------------------

    def build_graph(self) -> Graph:
        if self.graph is not None:
            return parse_graph_spec(self.graph)
        return resolve_graph(self.graph_file, self.base_dir)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(memory=self.memory, tau=self.tau, **self.optimizer)

    def build_params(self, g: Graph) -> tuple[ControlParams, dict]:
        """Control parameters plus a small report of how they were obtained."""
        if isinstance(self.gains, ControlParams):
            return self.gains, {"source": "explicit"}
        s = laplacian_spectrum(g)
        s.require_connected()
        report = gains_m1(s.lambda2, s.lambdaN, self.tau)
        if self.gains == "optimal-m1":
            return report.params, {"source": "optimal-m1", "r1_star": report.r_star}
        result = optimize(None, s, self.optimizer_config())
        return expand_theta(result.theta, self.tau), {
            "source": "optimize",
            "r_star": result.rate,
            "r1_star": report.r_star,
        }

    def sim_config(self, n: int) -> SimConfig:
        if "random" in self.init:
            r = self.init["random"]
            return SimConfig.random(
                n,
                self.steps,
                seed=int(r.get("seed", 0)),
                n_dim=int(r.get("dim", 1)),
                low=float(r.get("low", -10.0)),
                high=float(r.get("high", 10.0)),
            )
        e = self.init["explicit"]
        return SimConfig(self.steps, np.array(e["x0"], dtype=float), np.array(e["v0"], dtype=float))

    def formation_plan(self) -> FormationPlan | None:
        if self.formation is None:
            return None
        return FormationPlan(tuple((k, np.array(pos, dtype=float)) for k, pos in self.formation))

    def with_gains(self, p: ControlParams) -> "Scenario":
        return replace(self, gains=p)

    # -- (de)serialization --------------------------------------------------

    @classmethod
    def from_dict(cls, obj: dict, base_dir: Path | None = None) -> "Scenario":
        d = _strict(
            obj,
            {"version", "graph", "graph_file", "tau", "memory", "gains", "optimizer",
             "simulation", "formation"},
            "scenario",
            {"version"},
        )
        if d["version"] != SCENARIO_VERSION:
            raise ScenarioError(f"unsupported scenario version {d['version']!r}")
        tau = float(d.get("tau", 0.1))
        gains = d.get("gains", "optimal-m1")
        if isinstance(gains, dict):
            gains = gains_from_dict(gains, tau)
        elif not isinstance(gains, str):
            raise ScenarioError("gains must be a string mode or an object")
        sim = _strict(d.get("simulation", {}), {"steps", "init"}, "simulation")
        formation = None
        if "formation" in d:
            f = _strict(d["formation"], {"segments"}, "formation", {"segments"})
            formation = []
            for seg in f["segments"]:
                seg = _strict(seg, {"start", "positions"}, "formation segment", {"start", "positions"})
                formation.append((int(seg["start"]), seg["positions"]))
        return cls(
            graph=d.get("graph"),
            graph_file=d.get("graph_file"),
            tau=tau,
            memory=int(d.get("memory", gains.M if isinstance(gains, ControlParams) else 1)),
            gains=gains,
            optimizer=dict(d.get("optimizer", {})),
            steps=int(sim.get("steps", 400)),
            init=dict(sim.get("init", {"random": {"seed": 0}})),
            formation=formation,
            base_dir=base_dir,
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"version": SCENARIO_VERSION}
        if self.graph is not None:
            out["graph"] = self.graph
        else:
            out["graph_file"] = self.graph_file
        out["tau"] = self.tau
        out["memory"] = self.memory
        if isinstance(self.gains, ControlParams):
            g = self.gains.as_dict()
            out["gains"] = {k: g[k] for k in ("eps1", "eps2", "theta")}
        else:
            out["gains"] = self.gains
        if self.optimizer:
            out["optimizer"] = dict(self.optimizer)
        out["simulation"] = {"steps": self.steps, "init": self.init}
        if self.formation is not None:
            out["formation"] = {
                "segments": [
                    {"start": k, "positions": np.asarray(pos, dtype=float).tolist()}
                    for k, pos in self.formation
                ]
            }
        return out


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario.from_dict(obj, base_dir=path.parent)


def trajectory_csv(traj: Trajectory, full_state: bool = False) -> str:
    """CSV text ``k,t,e_norm[,x_1..x_N,v_1..v_N]``.

    With more than one spatial dimension the state columns carry ``_d0``,
    ``_d1``, ... suffixes. Floats are written at full precision.
    """
    n = traj.x.shape[1]
    nd = traj.n_dim
    header = ["k", "t", "e_norm"]
    if full_state:
        for name in ("x", "v"):
            for i in range(1, n + 1):
                header += [f"{name}_{i}"] if nd == 1 else [f"{name}_{i}_d{d}" for d in range(nd)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    tau = traj.params.tau
    for k in range(traj.horizon + 1):
        row = [str(k), repr(k * tau), repr(float(traj.e_norm[k]))]
        if full_state:
            row += [repr(float(a)) for a in traj.x[k].ravel()]
            row += [repr(float(a)) for a in traj.v[k].ravel()]
        writer.writerow(row)
    return buf.getvalue()


def read_trajectory_csv(text: str) -> dict[str, np.ndarray]:
    """Columns of a trajectory CSV as float arrays, keyed by header name."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}
