"""Compile-time function distances and the harmonic-average baseline.

The static distance map holds, for every direct call edge, the minimum
count of conditional edges between the caller's entry and the cheapest
call site (the pair weight), and for every function pair the total weight
along the cheapest direct-call path (dff). Unreachable is represented as
None everywhere; no magic large numbers, and accidental arithmetic on an
unreachable value raises instead of silently propagating.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from typing import Optional

from .graph import ProgramGraph, Target, dbb_from, graph_hash, cg_distance_from

# A target sitting directly on the execution path would divide by zero in
# the harmonic average; it enters the mean as this value instead.
HARMONIC_ZERO_EPSILON = 0.5


class DistanceMapError(Exception):
    """Corrupt distance-map file or graph/map mismatch."""


@dataclass(frozen=True)
class StaticDistanceMap:
    """Immutable function-pair weights and shortest-path distances.

    weights maps every direct call edge (caller, callee) to its conditional
    edge count (None when no call site is reachable from the caller entry).
    dff holds finite distances only; query through dff_value.
    """

    built_from: str
    weights: dict
    dff: dict

    def weight_value(self, caller: int, callee: int) -> Optional[int]:
        return self.weights.get((caller, callee))

    def dff_value(self, fa: int, fb: int) -> Optional[int]:
        if fa == fb:
            return 0
        return self.dff.get((fa, fb))


def weight(graph: ProgramGraph, caller: int, callee: int) -> Optional[int]:
    """Conditional-edge count from caller entry to its cheapest call site.

    None when callee is not invoked from any block of caller, or when
    every call site is unreachable from the caller's entry block.
    """
    fn = graph.function(caller)
    graph.function(callee)  # raises on unknown id
    sites = [b.id for b in fn.blocks if callee in b.calls]
    if not sites:
        return None
    dist = dbb_from(fn, fn.entry)
    reachable = [dist[s] for s in sites if s in dist]
    return min(reachable) if reachable else None


def _edge_weights(graph: ProgramGraph) -> dict:
    out = {}
    for f in graph.functions:
        dist = dbb_from(f, f.entry)
        sites: dict[int, list[int]] = {}
        for b in f.blocks:
            for callee in b.calls:
                sites.setdefault(callee, []).append(b.id)
        for callee, blocks in sites.items():
            reachable = [dist[b] for b in blocks if b in dist]
            out[(f.id, callee)] = min(reachable) if reachable else None
    return out


def build_distance_map(graph: ProgramGraph) -> StaticDistanceMap:
    """All-pairs dff over the weighted direct-call graph (Dijkstra per source).

    Deterministic: the heap breaks distance ties on the smaller function id.
    """
    weights = _edge_weights(graph)
    adj: dict[int, list[tuple[int, int]]] = {f.id: [] for f in graph.functions}
    for (a, b), w in sorted(weights.items()):
        if w is not None:
            adj[a].append((b, w))

    dff: dict = {}
    for src in sorted(f.id for f in graph.functions):
        dist = {src: 0}
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, math.inf):
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        for dst, d in dist.items():
            dff[(src, dst)] = d
    return StaticDistanceMap(built_from=graph_hash(graph), weights=weights, dff=dff)


def harmonic_distance(trace, targets: list[Target], graph: ProgramGraph) -> float:
    """Single-scalar seed-to-target-set distance of the classic baseline.

    Per-target distance is the minimum hop count over uniformly weighted
    direct call-graph edges from any traversed function to the target's
    function. The result is the harmonic mean of the finite per-target
    distances; zero distances enter as HARMONIC_ZERO_EPSILON. Returns
    math.inf when no target is reachable.
    """
    if not targets:
        raise ValueError("harmonic_distance requires at least one target")
    funcs = set(trace.functions)
    dist = cg_distance_from(graph, funcs)
    inv_sum = 0.0
    finite = 0
    for t in targets:
        d = dist.get(t.function)
        if d is None:
            continue
        finite += 1
        inv_sum += 1.0 / (d if d > 0 else HARMONIC_ZERO_EPSILON)
    if finite == 0:
        return math.inf
    return finite / inv_sum


# ---------------------------------------------------------------------------
# Persistence: infinite entries are omitted on disk and reconstructed on load
# ---------------------------------------------------------------------------


def save_distance_map(dmap: StaticDistanceMap, path: str) -> None:
    data = {
        "built_from": dmap.built_from,
        "weights": [
            [a, b, w] for (a, b), w in sorted(dmap.weights.items()) if w is not None
        ],
        "dff": [[a, b, d] for (a, b), d in sorted(dmap.dff.items())],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_distance_map(path: str, graph: ProgramGraph) -> StaticDistanceMap:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DistanceMapError(f"{path}: corrupt file: {exc.msg}") from None
    for key in ("built_from", "weights", "dff"):
        if key not in data:
            raise DistanceMapError(f"{path}: missing field '{key}'")
    expected = graph_hash(graph)
    if data["built_from"] != expected:
        raise DistanceMapError(
            f"{path}: built_from hash {data['built_from'][:12]}... does not match "
            f"the supplied graph ({expected[:12]}...)"
        )
    weights: dict = {(a, b): None for (a, b) in _derived_call_pairs(graph)}
    for item in data["weights"]:
        a, b, w = item
        if (a, b) not in weights:
            raise DistanceMapError(f"{path}: weight for non-call-edge ({a},{b})")
        weights[(a, b)] = w
    dff = {(a, b): d for a, b, d in data["dff"]}
    return StaticDistanceMap(built_from=data["built_from"], weights=weights, dff=dff)


def _derived_call_pairs(graph: ProgramGraph):
    return sorted(graph.call_edges)
