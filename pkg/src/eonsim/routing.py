"""Candidate paths and routing-plus-spectrum assignment.

k-shortest loopless paths come from Yen's algorithm with a fully deterministic
order: (total length, lexicographic node sequence). Costs are always recomputed
by summing edge lengths left-to-right along the final path so float ties
resolve identically to an exhaustive-enumeration oracle.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .qot import QotEstimatorSpec, estimate_gsnr, slot_capacity
from .spectrum import BandPlan, SlotRange, SpectrumGrid
from .topology import NetworkTopology
from .traffic import Request

Path = tuple[str, ...]


@dataclass(frozen=True)
class CandidatePlan:
    path: Path
    slots: SlotRange
    gsnr_db: float
    modulation: str
    slot_rate_gbps: float
    n_slots: int

    @property
    def rate_gbps(self) -> float:
        return self.slot_rate_gbps * self.n_slots


def _path_cost(topology: NetworkTopology, path: Path) -> float:
    cost = 0.0
    for u, v in zip(path, path[1:]):
        cost += topology.length_of(u, v)
    return cost


def _dijkstra(
    adjacency: dict[str, list[tuple[str, float]]],
    s: str,
    d: str,
    banned_nodes: set[str],
    banned_edges: set[tuple[str, str]],
) -> Path | None:
    """Min-cost path, ties resolved toward the lexicographically smallest one."""
    heap: list[tuple[float, Path]] = [(0.0, (s,))]
    settled: set[str] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node == d:
            return path
        if node in settled:
            continue
        settled.add(node)
        for nxt, w in adjacency[node]:
            if nxt in settled or nxt in banned_nodes:
                continue
            edge = (node, nxt) if node <= nxt else (nxt, node)
            if edge in banned_edges:
                continue
            heapq.heappush(heap, (cost + w, path + (nxt,)))
    return None


def k_shortest_paths(topology: NetworkTopology, s: str, d: str, k: int) -> list[Path]:
    """Up to k loopless s->d paths ordered by (length, lexicographic nodes)."""
    assert s != d
    adjacency = topology.adjacency
    first = _dijkstra(adjacency, s, d, set(), set())
    if first is None:
        return []
    accepted: list[Path] = [first]
    candidates: list[tuple[float, Path]] = []
    seen: set[Path] = {first}
    while len(accepted) < k:
        prev = accepted[-1]
        for i in range(len(prev) - 1):
            spur = prev[i]
            root = prev[: i + 1]
            banned_edges = set()
            for path in accepted:
                if path[: i + 1] == root and len(path) > i + 1:
                    a, b = path[i], path[i + 1]
                    banned_edges.add((a, b) if a <= b else (b, a))
            banned_nodes = set(root[:-1])
            tail = _dijkstra(adjacency, spur, d, banned_nodes, banned_edges)
            if tail is None:
                continue
            total = root[:-1] + tail
            if total not in seen:
                seen.add(total)
                heapq.heappush(candidates, (_path_cost(topology, total), total))
        if not candidates:
            break
        _, best = heapq.heappop(candidates)
        accepted.append(best)
    accepted.sort(key=lambda p: (_path_cost(topology, p), p))
    return accepted


def rsa(
    request: Request,
    topology: NetworkTopology,
    grid: SpectrumGrid,
    plan: BandPlan,
    qot_spec: QotEstimatorSpec,
    table,
    k: int,
    max_slots: int,
    paths: list[Path] | None = None,
) -> CandidatePlan | None:
    """First feasible (path, slot range): path-major, slot-count-minor order.

    For each candidate path and each slot count, first-fit proposes the lowest
    free range; the range's GSNR then decides the achievable rate. The first
    candidate whose achievable rate covers the request wins.
    """
    if paths is None:
        paths = k_shortest_paths(topology, request.src, request.dst, k)
    for path in paths:
        path_links = topology.path_links(path)
        for n_slots in range(1, max_slots + 1):
            found = grid.first_fit(path_links, n_slots)
            if found is None:
                break  # wider ranges cannot fit where a narrower one could not
            gsnr = estimate_gsnr(qot_spec, topology, path, found, grid)
            cap = slot_capacity(table, gsnr)
            if cap.slot_rate_gbps * n_slots >= request.rate_gbps:
                return CandidatePlan(path, found, gsnr, cap.modulation, cap.slot_rate_gbps, n_slots)
    return None
