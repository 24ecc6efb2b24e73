"""Undirected networks, edge-list I/O and Laplacian spectra."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Iterable

import networkx as nx
import numpy as np
from numpy.typing import NDArray

from .errors import (
    ComputationError,
    ConnectivityError,
    GenerationError,
    GraphFormatError,
    ParameterError,
)

#: Below this value the algebraic connectivity is treated as zero.
CONNECTIVITY_TOL = 1e-9

MAX_RETRIES = 200

_KIND_ALIASES = {
    "path": "path",
    "cycle": "cycle",
    "circle": "cycle",
    "complete": "complete",
    "cbp": "complete_bipartite",
    "complete_bipartite": "complete_bipartite",
    "ws": "watts_strogatz",
    "watts_strogatz": "watts_strogatz",
    "ba": "barabasi_albert",
    "barabasi_albert": "barabasi_albert",
}


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted network on ``n`` agents.

    ``weights`` is the symmetric adjacency matrix with zero diagonal. The
    array is copied and frozen on construction.
    """

    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ParameterError(f"adjacency must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ParameterError("a network needs at least 2 agents")
        if not np.all(np.isfinite(w)):
            raise ParameterError("adjacency has non-finite entries")
        if np.any(w < 0):
            raise ParameterError("edge weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ParameterError("adjacency diagonal must be zero (no self-loops)")
        if not np.array_equal(w, w.T):
            raise ParameterError("adjacency must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        """Edges ``(u, v, w)`` with ``u < v`` in lexicographic order."""
        iu, ju = np.nonzero(np.triu(self.weights, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    @property
    def degrees(self) -> NDArray[np.float64]:
        return self.weights.sum(axis=1)

    def laplacian(self) -> NDArray[np.float64]:
        return np.diag(self.degrees) - self.weights

    def digest(self) -> str:
        """Short content hash, used to tag simulation output."""
        return hashlib.sha256(self.weights.tobytes()).hexdigest()[:16]

    def to_edge_list(self) -> str:
        lines = [f"# n={self.n}"]
        lines += [f"{u} {v} {w!r}" for u, v, w in self.edges]
        return "\n".join(lines) + "\n"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending Laplacian eigenvalues with the paired orthonormal eigenvectors.

    Column ``i`` of ``eigenvectors`` belongs to ``eigenvalues[i]``.
    """

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]

    def __post_init__(self) -> None:
        lam = np.array(self.eigenvalues, dtype=np.float64)
        vec = np.array(self.eigenvectors, dtype=np.float64)
        lam.setflags(write=False)
        vec.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    @classmethod
    def from_eigenvalues(cls, eigenvalues: Iterable[float]) -> "Spectrum":
        """Spectrum with an identity basis, for rate computations only."""
        lam = np.sort(np.asarray(list(eigenvalues), dtype=np.float64))
        return cls(lam, np.eye(lam.size))

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambdaN(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def connected(self) -> bool:
        return self.n >= 2 and self.lambda2 > CONNECTIVITY_TOL

    @property
    def nonzero(self) -> NDArray[np.float64]:
        """The multiset lambda_2 ... lambda_N."""
        return self.eigenvalues[1:]

    def require_connected(self) -> None:
        if not self.connected:
            raise ConnectivityError(
                f"network is disconnected (lambda_2 = {self.eigenvalues[1]:.3g})"
            )


def path_graph(n: int) -> Graph:
    return _from_nx(nx.path_graph(n), n)


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ParameterError("a cycle needs at least 3 agents")
    return _from_nx(nx.cycle_graph(n), n)


def complete_graph(n: int) -> Graph:
    return _from_nx(nx.complete_graph(n), n)


def complete_bipartite_graph(m: int, n: int) -> Graph:
    if m < 1 or n < 1:
        raise ParameterError("both parts of a complete bipartite graph need an agent")
    return _from_nx(nx.complete_bipartite_graph(m, n), m + n)


def generate_graph(kind: str, n: int | None = None, seed: int = 0, **params) -> Graph:
    """Build one of the standard test networks with unit edge weights.

    Args:
        kind: ``path``, ``cycle``, ``complete``, ``complete_bipartite``
            (``parts=(m, n)``), ``watts_strogatz`` (``k``, ``p``) or
            ``barabasi_albert`` (``m``, optional ``m0``). Short aliases
            ``cbp``, ``ws``, ``ba`` are accepted.
        n: agent count. Optional for ``complete_bipartite``.
        seed: seed for the random models; ignored by deterministic kinds.

    Random models are regenerated until connected, up to ``MAX_RETRIES``
    draws from one seeded stream.
    """
    try:
        kind = _KIND_ALIASES[kind]
    except KeyError:
        raise ParameterError(f"unknown graph kind {kind!r}") from None

    if kind == "complete_bipartite":
        parts = params.pop("parts", None)
        if parts is None or len(parts) != 2:
            raise ParameterError("complete_bipartite needs parts=(m, n)")
        a, b = (int(x) for x in parts)
        if n is not None and n != a + b:
            raise ParameterError(f"parts {a}+{b} do not add up to n={n}")
        _reject_extra(kind, params)
        return complete_bipartite_graph(a, b)

    if n is None or int(n) != n or n < 2:
        raise ParameterError(f"agent count must be an integer >= 2, got {n!r}")
    n = int(n)

    if kind == "path":
        _reject_extra(kind, params)
        return path_graph(n)
    if kind == "cycle":
        _reject_extra(kind, params)
        return cycle_graph(n)
    if kind == "complete":
        _reject_extra(kind, params)
        return complete_graph(n)

    rng = random.Random(seed)
    if kind == "watts_strogatz":
        k = int(params.pop("k", 4))
        p = float(params.pop("p", 0.3))
        _reject_extra(kind, params)
        if k < 2 or k % 2 or k >= n:
            raise ParameterError(f"watts_strogatz needs even k with 2 <= k < n, got k={k}")
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"rewiring probability must lie in [0, 1], got {p}")
        make = lambda: nx.watts_strogatz_graph(n, k, p, seed=rng)  # noqa: E731
    else:
        m = int(params.pop("m", 2))
        m0 = int(params.pop("m0", m + 1))
        _reject_extra(kind, params)
        if m < 1 or m0 < m or m0 > n or m >= n:
            raise ParameterError(
                f"barabasi_albert needs 1 <= m <= m0 <= n and m < n, got m={m}, m0={m0}"
            )
        seed_graph = nx.complete_graph(m0)
        make = lambda: nx.barabasi_albert_graph(  # noqa: E731
            n, m, seed=rng, initial_graph=seed_graph
        )

    for _ in range(MAX_RETRIES):
        g = make()
        if nx.is_connected(g):
            return _from_nx(g, n)
    raise GenerationError(f"no connected {kind} graph after {MAX_RETRIES} draws")


def parse_graph_spec(spec: str) -> Graph:
    """Build a graph from a ``kind:n[:key=value,...]`` string.

    Examples: ``path:8``, ``cbp:3,5``, ``ws:8:k=4,p=0.3,seed=7``,
    ``ba:8:m=2,seed=3``.
    """
    fields = spec.strip().split(":")
    if len(fields) < 2 or len(fields) > 3 or not fields[1]:
        raise ParameterError(f"graph spec must look like kind:n[:k=v,...], got {spec!r}")
    kind = fields[0].lower()
    params: dict = {}
    if len(fields) == 3 and fields[2]:
        for item in fields[2].split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ParameterError(f"bad parameter {item!r} in graph spec {spec!r}")
            params[key.strip()] = value.strip()
    seed = int(params.pop("seed", 0))
    for key in ("k", "m", "m0"):
        if key in params:
            params[key] = _as_int(params[key], key)
    if "p" in params:
        params["p"] = float(params["p"])

    if _KIND_ALIASES.get(kind) == "complete_bipartite":
        parts = fields[1].split(",")
        if len(parts) != 2:
            raise ParameterError(f"complete bipartite spec needs m,n, got {fields[1]!r}")
        return generate_graph(kind, parts=tuple(_as_int(x, "part") for x in parts), **params)
    return generate_graph(kind, _as_int(fields[1], "n"), seed=seed, **params)


def load_edge_list(text: str) -> Graph:
    """Parse ``u v w`` lines (0-based indices) into a graph.

    Blank lines and ``#`` comments are skipped. A ``# n=<count>`` header, as
    written by :meth:`Graph.to_edge_list`, fixes the agent count so isolated
    trailing agents survive a round trip; otherwise the count is one more
    than the largest index.
    """
    declared_n = None
    edges: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                declared_n = _as_int(body[2:], "n", lineno, GraphFormatError)
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'u v w', got {raw!r}")
        u = _as_int(parts[0], "u", lineno, GraphFormatError)
        v = _as_int(parts[1], "v", lineno, GraphFormatError)
        try:
            w = float(parts[2])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: weight {parts[2]!r} is not a number") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"line {lineno}: negative node index")
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop on node {u}")
        if not np.isfinite(w) or w <= 0:
            raise GraphFormatError(f"line {lineno}: weight must be positive, got {w}")
        key = (min(u, v), max(u, v))
        if key in edges:
            raise GraphFormatError(f"line {lineno}: duplicate edge {key}")
        edges[key] = w

    top = max((v for _, v in edges), default=-1)
    n = top + 1 if declared_n is None else declared_n
    if top >= n:
        raise GraphFormatError(f"node index {top} out of range for n={n}")
    if n < 2:
        raise GraphFormatError("edge list describes fewer than 2 agents")
    weights = np.zeros((n, n))
    for (u, v), w in edges.items():
        weights[u, v] = weights[v, u] = w
    return Graph(weights)


def laplacian_spectrum(g: Graph) -> Spectrum:
    """Symmetric eigendecomposition ``L = Omega diag(lambda) Omega^T``.

    Eigenvalues come back ascending. Each eigenvector is signed so that its
    first non-negligible component is positive.
    """
    try:
        lam, vec = np.linalg.eigh(g.laplacian())
    except np.linalg.LinAlgError as exc:
        raise ComputationError(f"Laplacian eigensolve failed: {exc}") from exc
    for j in range(vec.shape[1]):
        col = vec[:, j]
        lead = np.flatnonzero(np.abs(col) > 1e-12)
        if lead.size and col[lead[0]] < 0:
            vec[:, j] = -col
    # L is positive semidefinite and L 1 = 0; clamp the round-off
    lam[(lam < 0) & (lam > -CONNECTIVITY_TOL)] = 0.0
    if abs(lam[0]) < CONNECTIVITY_TOL:
        lam[0] = 0.0
    return Spectrum(lam, vec)


def eigenratio(s: Spectrum) -> float:
    """Connectivity ratio ``lambda_2 / lambda_N`` in ``(0, 1]``."""
    s.require_connected()
    return s.lambda2 / s.lambdaN


def _from_nx(g: nx.Graph, n: int) -> Graph:
    w = nx.to_numpy_array(g, nodelist=range(n), weight=None)
    return Graph(w)


def _reject_extra(kind: str, params: dict) -> None:
    if params:
        raise ParameterError(f"unexpected parameters for {kind}: {sorted(params)}")


def _as_int(text, name, lineno=None, exc=ParameterError) -> int:
    try:
        value = int(text)
    except (TypeError, ValueError):
        where = f"line {lineno}: " if lineno is not None else ""
        raise exc(f"{where}{name} must be an integer, got {text!r}") from None
    return value
