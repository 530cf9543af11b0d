"""Network configurations: system graph, sink attachment and ancilla wiring.

Sites are indexed from 0. Site 0 is the default source (where the excitation
is seeded) and site ``n_sites - 1`` the default sink-attached site.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

MAX_PATH_COUNT_SITES = 12


class Archetype(str, Enum):
    LINEAR = "linear"
    LOOP = "loop"
    NON_CRITICAL = "noncritical"
    MAXIMALLY_CONNECTED = "maximally_connected"


class AncillaMode(str, Enum):
    INDIVIDUAL = "individual"
    COMMUNAL = "communal"


def _frozen_bool(a) -> np.ndarray:
    arr = np.array(a, dtype=bool)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AncillaWiring:
    """Which system sites couple to which ancilla qubits.

    ``coupling[i, a]`` is true when site ``i`` talks to ancilla ``a``.
    """

    coupling: np.ndarray
    mode: AncillaMode
    open_to_environment: bool = False

    def __post_init__(self):
        c = _frozen_bool(self.coupling)
        if c.ndim != 2 or c.shape[1] < 1:
            raise ValueError("coupling must be an n_sites x n_ancillas matrix with n_ancillas >= 1")
        object.__setattr__(self, "coupling", c)
        object.__setattr__(self, "mode", AncillaMode(self.mode))
        if self.mode is AncillaMode.COMMUNAL:
            if c.shape[1] != 1 or not c.all():
                raise ValueError("a communal ancilla is a single qubit coupled to every site")
        else:
            if not (c.sum(axis=0) == 1).all():
                raise ValueError("each individual ancilla couples to exactly one site")
            if (c.sum(axis=1) > 1).any():
                raise ValueError("two individual ancillas cannot share a site")

    @classmethod
    def communal(cls, n_sites: int, open_to_environment: bool = False) -> "AncillaWiring":
        return cls(np.ones((n_sites, 1), dtype=bool), AncillaMode.COMMUNAL, open_to_environment)

    @classmethod
    def individual(cls, n_sites: int, sites=None, open_to_environment: bool = False) -> "AncillaWiring":
        """One ancilla per listed site (all sites by default)."""
        sites = list(range(n_sites)) if sites is None else list(sites)
        c = np.zeros((n_sites, len(sites)), dtype=bool)
        for a, i in enumerate(sites):
            c[i, a] = True
        return cls(c, AncillaMode.INDIVIDUAL, open_to_environment)

    @property
    def n_ancillas(self) -> int:
        return self.coupling.shape[1]

    @property
    def n_sites(self) -> int:
        return self.coupling.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        """(site, ancilla) pairs that are wired, in row-major order."""
        return [(int(i), int(a)) for i, a in zip(*np.nonzero(self.coupling))]

    def to_dict(self) -> dict:
        out = {"mode": self.mode.value, "open_to_environment": bool(self.open_to_environment)}
        if self.mode is AncillaMode.INDIVIDUAL:
            out["sites"] = [i for i, _ in sorted(self.pairs(), key=lambda p: p[1])]
        return out

    @classmethod
    def from_dict(cls, d: dict, n_sites: int) -> "AncillaWiring":
        mode = AncillaMode(d["mode"])
        is_open = bool(d.get("open_to_environment", False))
        if mode is AncillaMode.COMMUNAL:
            return cls.communal(n_sites, is_open)
        return cls.individual(n_sites, d.get("sites"), is_open)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    n_sites: int
    adjacency: np.ndarray
    sink_site: int | None = None
    source_site: int = 0
    ancilla: AncillaWiring | None = None
    label: str = field(default="custom")

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        adj = _frozen_bool(self.adjacency)
        if adj.shape != (self.n_sites, self.n_sites):
            raise ValueError(f"adjacency must be {self.n_sites}x{self.n_sites}, got {adj.shape}")
        if not (adj == adj.T).all():
            raise ValueError("adjacency must be symmetric")
        if adj.diagonal().any():
            raise ValueError("adjacency must have a zero diagonal")
        object.__setattr__(self, "adjacency", adj)
        if self.sink_site is None:
            object.__setattr__(self, "sink_site", self.n_sites - 1)
        for name in ("sink_site", "source_site"):
            v = getattr(self, name)
            if not 0 <= v < self.n_sites:
                raise ValueError(f"{name}={v} out of range for {self.n_sites} sites")
        if self.n_sites >= 2 and self.sink_site == self.source_site:
            raise ValueError("source and sink sites must differ")
        if self.ancilla is not None and self.ancilla.n_sites != self.n_sites:
            raise ValueError("ancilla wiring does not match n_sites")

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(self.adjacency)))]

    @property
    def n_ancillas(self) -> int:
        return 0 if self.ancilla is None else self.ancilla.n_ancillas

    def with_ancilla(self, ancilla: AncillaWiring | None) -> "NetworkSpec":
        return replace(self, ancilla=ancilla)

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "label": self.label,
            "edges": [list(e) for e in self.edges],
            "source_site": self.source_site,
            "sink_site": self.sink_site,
            "ancilla": None if self.ancilla is None else self.ancilla.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        """Accepts either an explicit ``edges`` list or an ``archetype`` name."""
        n = int(d["n_sites"])
        if "archetype" in d:
            base = build_archetype(d["archetype"], n)
            adj, label = base.adjacency, base.label
        else:
            adj = np.zeros((n, n), dtype=bool)
            for i, j in d.get("edges", []):
                adj[i, j] = adj[j, i] = True
            label = d.get("label", "custom")
        anc = d.get("ancilla")
        return cls(
            n_sites=n,
            adjacency=adj,
            sink_site=d.get("sink_site"),
            source_site=int(d.get("source_site", 0)),
            ancilla=None if anc is None else AncillaWiring.from_dict(anc, n),
            label=label,
        )


_MIN_SITES = {
    Archetype.LINEAR: 2,
    Archetype.LOOP: 2,
    Archetype.NON_CRITICAL: 3,
    Archetype.MAXIMALLY_CONNECTED: 2,
}


def build_archetype(kind: Archetype | str, n_sites: int, ancilla: AncillaWiring | None = None) -> NetworkSpec:
    """Build one of the four reference configurations.

    NON_CRITICAL is the complete graph with the single source-sink edge
    removed, i.e. the most connected graph that lacks the critical link.
    """
    kind = Archetype(kind)
    if n_sites < _MIN_SITES[kind]:
        raise ValueError(f"{kind.value} needs at least {_MIN_SITES[kind]} sites, got {n_sites}")
    adj = np.zeros((n_sites, n_sites), dtype=bool)
    if kind in (Archetype.LINEAR, Archetype.LOOP):
        for i in range(n_sites - 1):
            adj[i, i + 1] = adj[i + 1, i] = True
        if kind is Archetype.LOOP and n_sites > 2:
            adj[0, -1] = adj[-1, 0] = True
    else:
        adj[:] = True
        np.fill_diagonal(adj, False)
        if kind is Archetype.NON_CRITICAL:
            adj[0, -1] = adj[-1, 0] = False
    return NetworkSpec(n_sites, adj, sink_site=n_sites - 1, source_site=0, ancilla=ancilla, label=kind.value)


def has_critical_link(spec: NetworkSpec) -> bool:
    return bool(spec.adjacency[spec.source_site, spec.sink_site])


def path_count(spec: NetworkSpec) -> int:
    """Number of simple source -> sink paths, by exhaustive DFS."""
    if spec.n_sites > MAX_PATH_COUNT_SITES:
        raise ValueError(f"path enumeration limited to {MAX_PATH_COUNT_SITES} sites")
    nbrs = [np.flatnonzero(row).tolist() for row in spec.adjacency]
    target = spec.sink_site

    def dfs(node, visited):
        if node == target:
            return 1
        total = 0
        for nxt in nbrs[node]:
            if nxt not in visited:
                visited.add(nxt)
                total += dfs(nxt, visited)
                visited.discard(nxt)
        return total

    if spec.source_site == target:
        return 1
    return dfs(spec.source_site, {spec.source_site})
