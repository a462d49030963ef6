"""Network topology: weighted bidirectional graph plus per-node traffic weights.

The graph is immutable after loading. Endpoint sampling follows a gravity
model: the source is drawn from the node generation probabilities and the
destination from the same probabilities renormalized over the remaining nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import TopologyError

PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class NodeSpec:
    id: str
    gen_prob: float


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    length_km: float

    @property
    def key(self) -> tuple[str, str]:
        """Canonical direction-agnostic link key."""
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


class NetworkTopology:
    """Validated node/link sets with adjacency precomputed for routing."""

    def __init__(self, nodes: list[NodeSpec], links: list[LinkSpec]):
        self.nodes = list(nodes)
        self.links = list(links)
        self._validate()
        self.node_ids = [n.id for n in self.nodes]
        self.gen_probs = {n.id: n.gen_prob for n in self.nodes}
        self.adjacency: dict[str, list[tuple[str, float]]] = {n.id: [] for n in self.nodes}
        self.link_lengths: dict[tuple[str, str], float] = {}
        for link in self.links:
            self.adjacency[link.a].append((link.b, link.length_km))
            self.adjacency[link.b].append((link.a, link.length_km))
            self.link_lengths[link.key] = link.length_km
        for neighbors in self.adjacency.values():
            neighbors.sort()
        # source-sampling cumulative weights, fixed node order
        self._cum = []
        acc = 0.0
        for n in self.nodes:
            acc += n.gen_prob
            self._cum.append(acc)

    def _validate(self) -> None:
        if len(self.nodes) < 2:
            raise TopologyError("topology needs at least 2 nodes")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate node ids")
        for n in self.nodes:
            if not 0.0 <= n.gen_prob <= 1.0:
                raise TopologyError(f"gen_prob of {n.id!r} outside [0, 1]")
        total = sum(n.gen_prob for n in self.nodes)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise TopologyError(f"node probabilities sum != 1 (got {total!r})")
        known = set(ids)
        seen_links: set[tuple[str, str]] = set()
        for link in self.links:
            if link.a == link.b:
                raise TopologyError(f"self-loop on {link.a!r}")
            if link.a not in known or link.b not in known:
                raise TopologyError(f"link {link.a!r}-{link.b!r} references unknown node")
            if link.length_km <= 0:
                raise TopologyError(f"link {link.a!r}-{link.b!r} has nonpositive length")
            if link.key in seen_links:
                raise TopologyError(f"duplicate link {link.a!r}-{link.b!r}")
            seen_links.add(link.key)
        if not self._connected():
            raise TopologyError("graph is not connected")

    def _connected(self) -> bool:
        if not self.links:
            return len(self.nodes) <= 1
        adj: dict[str, set[str]] = {n.id: set() for n in self.nodes}
        for link in self.links:
            adj[link.a].add(link.b)
            adj[link.b].add(link.a)
        seen = {self.nodes[0].id}
        stack = [self.nodes[0].id]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)

    @property
    def link_keys(self) -> list[tuple[str, str]]:
        return sorted(self.link_lengths)

    @property
    def mean_link_length_km(self) -> float:
        return sum(l.length_km for l in self.links) / len(self.links)

    def length_of(self, a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        try:
            return self.link_lengths[key]
        except KeyError:
            raise TopologyError(f"no link {a!r}-{b!r}") from None

    def path_length_km(self, path: list[str] | tuple[str, ...]) -> float:
        return sum(self.length_of(u, v) for u, v in zip(path, path[1:]))

    def path_links(self, path: list[str] | tuple[str, ...]) -> list[tuple[str, str]]:
        links = []
        for u, v in zip(path, path[1:]):
            links.append((u, v) if u <= v else (v, u))
        return links


def load_topology(path: str | Path) -> NetworkTopology:
    """Parse and validate a topology file (JSON; schema in README)."""
    p = Path(path)
    if not p.exists():
        raise TopologyError(f"topology file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise TopologyError(f"topology file {p} is not valid JSON: {exc}") from exc
    try:
        nodes = [NodeSpec(str(n["id"]), float(n["gen_prob"])) for n in doc["nodes"]]
        links = [LinkSpec(str(l["a"]), str(l["b"]), float(l["length_km"])) for l in doc["links"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise TopologyError(f"topology file {p} does not match schema: {exc}") from exc
    return NetworkTopology(nodes, links)


def sample_endpoints(topology: NetworkTopology, rng) -> tuple[str, str]:
    """Draw a (source, destination) pair from the gravity model.

    The destination weights exclude the source; if every other node has zero
    weight the destination falls back to uniform over the remaining nodes.
    """
    u = rng.random() * topology._cum[-1]
    src = topology.nodes[-1].id
    for node, cum in zip(topology.nodes, topology._cum):
        if u < cum:
            src = node.id
            break
    others = [n for n in topology.nodes if n.id != src]
    total = sum(n.gen_prob for n in others)
    v = rng.random()
    if total <= 0.0:
        return src, others[min(int(v * len(others)), len(others) - 1)].id
    v *= total
    acc = 0.0
    for n in others:
        acc += n.gen_prob
        if v < acc:
            return src, n.id
    return src, others[-1].id
