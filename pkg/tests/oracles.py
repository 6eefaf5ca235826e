"""Independent brute-force oracles the production code is checked against.

These deliberately use different algorithms than the package: exhaustive
path enumeration and Floyd-Warshall instead of 0/1-BFS and Dijkstra.
"""

from __future__ import annotations

import random

INF = float("inf")


def oracle_dbb(function, src: int, dst: int):
    """Min conditional-edge count via DFS over all simple paths (+ revisits).

    Uses iterative relaxation over the block adjacency: Bellman-Ford style,
    which is exhaustive and independent of the deque-based search.
    """
    blocks = {b.id: b for b in function.blocks}
    dist = {b: INF for b in blocks}
    dist[src] = 0
    for _ in range(len(blocks)):
        changed = False
        for b in blocks.values():
            if dist[b.id] == INF:
                continue
            w = 1 if len(b.successors) >= 2 else 0
            for s in b.successors:
                if dist[b.id] + w < dist[s]:
                    dist[s] = dist[b.id] + w
                    changed = True
        if not changed:
            break
    return None if dist[dst] == INF else int(dist[dst])


def oracle_weights(graph):
    """Eq-style pair weights from the Bellman-Ford block oracle."""
    weights = {}
    for f in graph.functions:
        sites = {}
        for b in f.blocks:
            for callee in b.calls:
                sites.setdefault(callee, []).append(b.id)
        for callee, blocks in sites.items():
            ds = [oracle_dbb(f, f.entry, b) for b in blocks]
            finite = [d for d in ds if d is not None]
            weights[(f.id, callee)] = min(finite) if finite else None
    return weights


def oracle_dff(graph):
    """All-pairs shortest path over the weighted call graph via Floyd-Warshall."""
    n = graph.n_functions
    dist = [[INF] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0
    for (a, b), w in oracle_weights(graph).items():
        if w is not None and w < dist[a][b]:
            dist[a][b] = w
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if dik == INF:
                continue
            di = dist[i]
            for j in range(n):
                nd = dik + dk[j]
                if nd < di[j]:
                    di[j] = nd
    return {
        (i, j): int(dist[i][j])
        for i in range(n)
        for j in range(n)
        if dist[i][j] != INF
    }


def oracle_reachable_pairs(graph):
    """Plain direct-call reachability, for the infinite-iff-unreachable check."""
    n = graph.n_functions
    adj = {f.id: set() for f in graph.functions}
    for a, b in graph.call_edges:
        adj[a].add(b)
    pairs = set()
    for s in range(n):
        seen = {s}
        work = [s]
        while work:
            u = work.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    work.append(v)
        pairs.update((s, t) for t in seen)
    return pairs


def random_graph_dict(
    rng: random.Random,
    max_functions: int = 50,
    max_blocks: int = 8,
    target_rate: float = 0.3,
    edge_rate: float = 1.6,
) -> dict:
    """Random graph-file dict for oracle-equivalence and property tests."""
    n = rng.randint(1, max_functions)
    functions = []
    tid = 0
    for fid in range(n):
        nb = rng.randint(1, max_blocks)
        succ = {b: set() for b in range(nb)}
        for j in range(1, nb):
            if rng.random() < 0.9:
                succ[rng.randrange(j)].add(j)
        for b in range(nb):
            if nb > 1 and rng.random() < 0.35:
                dst = rng.randrange(nb)
                if dst != b:
                    succ[b].add(dst)
        blocks = [
            {"id": b, "succ": sorted(succ[b]), "calls": []} for b in range(nb)
        ]
        targets = []
        if rng.random() < target_rate:
            targets.append({"id": tid, "block": rng.randrange(nb)})
            tid += 1
        functions.append(
            {"id": fid, "name": f"fn{fid}", "entry": 0, "blocks": blocks,
             "targets": targets}
        )
    # Call sites go only in entry-reachable blocks, like a call graph
    # derived from live code.
    live_blocks = []
    for fn in functions:
        succ = {b["id"]: b["succ"] for b in fn["blocks"]}
        seen = {0}
        work = [0]
        while work:
            u = work.pop()
            for v in succ[u]:
                if v not in seen:
                    seen.add(v)
                    work.append(v)
        live_blocks.append(sorted(seen))

    n_edges = round(edge_rate * n)
    placed = set()
    for _ in range(n_edges * 3):
        if len(placed) >= n_edges or n < 2:
            break
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or (u, v) in placed:
            continue
        placed.add((u, v))
        block = rng.choice(live_blocks[u])
        functions[u]["blocks"][block]["calls"].append(v)
    return {"functions": functions}


def all_path_conditional_cost(function, src: int, dst: int, limit: int = 12):
    """True exhaustive simple-path enumeration for tiny block graphs."""
    blocks = {b.id: b for b in function.blocks}
    best = [None]

    def walk(u, cost, seen):
        if u == dst:
            if best[0] is None or cost < best[0]:
                best[0] = cost
            return
        if len(seen) > limit:
            return
        b = blocks[u]
        w = 1 if len(b.successors) >= 2 else 0
        for s in b.successors:
            if s not in seen:
                walk(s, cost + w, seen | {s})

    walk(src, 0, {src})
    return best[0]
