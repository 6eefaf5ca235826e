"""Annotated program graphs: functions, basic blocks, call edges, targets.

A ProgramGraph is the static world the scheduler reasons over. It is
immutable after construction and safe to share read-only between campaigns.
Hidden indirect-call edges (used only by the simulator's execution model)
live in a separate ground-truth field that static analysis never sees.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

# Convention: after loading, function ids are dense 0..N-1 and the function
# with id 0 is the campaign entry point (every execution enters it).
ENTRY_FUNCTION = 0


class GraphError(Exception):
    """Base class for graph file problems."""


class ParseError(GraphError):
    """Malformed graph file (bad JSON, wrong types, unknown fields)."""


class ValidationError(GraphError):
    """Structurally valid file violating a graph invariant."""


@dataclass(frozen=True)
class BasicBlock:
    id: int
    successors: tuple[int, ...]
    calls: tuple[int, ...]

    @property
    def is_conditional(self) -> bool:
        return len(self.successors) >= 2


@dataclass(frozen=True)
class Target:
    id: int
    function: int
    block: int


@dataclass(frozen=True)
class Function:
    id: int
    name: str
    entry: int
    blocks: tuple[BasicBlock, ...]
    targets: tuple[Target, ...]
    _block_map: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_block_map", {b.id: b for b in self.blocks})

    def block(self, block_id: int) -> BasicBlock:
        try:
            return self._block_map[block_id]
        except KeyError:
            raise KeyError(
                f"function {self.id} ({self.name}) has no block {block_id}"
            ) from None

    def has_block(self, block_id: int) -> bool:
        return block_id in self._block_map


@dataclass(frozen=True)
class IndirectEdge:
    """A call edge known to the simulator but invisible to static analysis."""

    from_fn: int
    from_block: int
    to_fn: int


@dataclass(frozen=True)
class ProgramGraph:
    functions: tuple[Function, ...]
    call_edges: frozenset  # (caller, callee) pairs from direct call sites
    indirect_edges: tuple[IndirectEdge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fn_map", {f.id: f for f in self.functions})
        targets = {}
        for f in self.functions:
            for t in f.targets:
                targets[t.id] = t
        object.__setattr__(self, "_target_map", targets)

    @property
    def n_functions(self) -> int:
        return len(self.functions)

    def function(self, fid: int) -> Function:
        try:
            return self._fn_map[fid]
        except KeyError:
            raise KeyError(f"unknown function id {fid}") from None

    def has_function(self, fid: int) -> bool:
        return fid in self._fn_map

    def target(self, tid: int) -> Target:
        try:
            return self._target_map[tid]
        except KeyError:
            raise KeyError(f"unknown target id {tid}") from None

    def targets(self) -> list[Target]:
        return [self._target_map[t] for t in sorted(self._target_map)]

    @property
    def ground_truth(self) -> frozenset:
        """All caller->callee pairs the execution model may traverse."""
        pairs = set(self.call_edges)
        pairs.update((e.from_fn, e.to_fn) for e in self.indirect_edges)
        return frozenset(pairs)

    def direct_callees(self, fid: int) -> list[int]:
        return sorted({b for (a, b) in self.call_edges if a == fid})


def _derive_call_edges(functions: tuple[Function, ...]) -> frozenset:
    edges = set()
    for f in functions:
        for b in f.blocks:
            for callee in b.calls:
                edges.add((f.id, callee))
    return frozenset(edges)


# ---------------------------------------------------------------------------
# File format (strict JSON; unknown fields rejected to catch typos)
# ---------------------------------------------------------------------------

_TOP_KEYS = {"functions", "indirect_edges"}
_FN_KEYS = {"id", "name", "entry", "blocks", "targets"}
_BLOCK_KEYS = {"id", "succ", "calls"}
_TARGET_KEYS = {"id", "block"}
_IEDGE_KEYS = {"from_fn", "from_block", "to_fn"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")


def _nonneg_int(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ParseError(f"{where}: expected non-negative integer, got {value!r}")
    return value


def _parse_function(obj, index: int) -> Function:
    where = f"functions[{index}]"
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected object")
    _check_keys(obj, _FN_KEYS, where)
    for key in ("id", "name", "entry", "blocks"):
        if key not in obj:
            raise ParseError(f"{where}: missing field '{key}'")
    fid = _nonneg_int(obj["id"], f"{where}.id")
    name = obj["name"]
    if not isinstance(name, str):
        raise ParseError(f"{where}.name: expected string")
    entry = _nonneg_int(obj["entry"], f"{where}.entry")

    blocks = []
    for j, bobj in enumerate(obj["blocks"]):
        bwhere = f"{where}.blocks[{j}]"
        if not isinstance(bobj, dict):
            raise ParseError(f"{bwhere}: expected object")
        _check_keys(bobj, _BLOCK_KEYS, bwhere)
        if "id" not in bobj:
            raise ParseError(f"{bwhere}: missing field 'id'")
        bid = _nonneg_int(bobj["id"], f"{bwhere}.id")
        succ = tuple(
            _nonneg_int(s, f"{bwhere}.succ[{k}]")
            for k, s in enumerate(bobj.get("succ", []))
        )
        calls = tuple(
            _nonneg_int(c, f"{bwhere}.calls[{k}]")
            for k, c in enumerate(bobj.get("calls", []))
        )
        blocks.append(BasicBlock(id=bid, successors=succ, calls=calls))

    targets = []
    for j, tobj in enumerate(obj.get("targets", [])):
        twhere = f"{where}.targets[{j}]"
        if not isinstance(tobj, dict):
            raise ParseError(f"{twhere}: expected object")
        _check_keys(tobj, _TARGET_KEYS, twhere)
        for key in ("id", "block"):
            if key not in tobj:
                raise ParseError(f"{twhere}: missing field '{key}'")
        targets.append(
            Target(
                id=_nonneg_int(tobj["id"], f"{twhere}.id"),
                function=fid,
                block=_nonneg_int(tobj["block"], f"{twhere}.block"),
            )
        )

    return Function(
        id=fid, name=name, entry=entry, blocks=tuple(blocks), targets=tuple(targets)
    )


def _validate(functions: list[Function], indirect: list[IndirectEdge]) -> None:
    fids = [f.id for f in functions]
    if len(set(fids)) != len(fids):
        raise ValidationError("duplicate function ids")
    fid_set = set(fids)

    seen_targets: dict[int, int] = {}
    for f in functions:
        bids = [b.id for b in f.blocks]
        if len(set(bids)) != len(bids):
            raise ValidationError(f"function {f.id}: duplicate block ids")
        if not f.has_block(f.entry):
            raise ValidationError(f"function {f.id}: entry block {f.entry} not found")
        for b in f.blocks:
            for s in b.successors:
                if not f.has_block(s):
                    raise ValidationError(
                        f"function {f.id}: block {b.id} successor {s} "
                        "is not a block of the same function"
                    )
            for callee in b.calls:
                if callee not in fid_set:
                    raise ValidationError(
                        f"function {f.id}: block {b.id} calls unknown function {callee}"
                    )
        for t in f.targets:
            if t.id in seen_targets:
                raise ValidationError(
                    f"duplicate target id {t.id} "
                    f"(functions {seen_targets[t.id]} and {f.id})"
                )
            seen_targets[t.id] = f.id
            if not f.has_block(t.block):
                raise ValidationError(
                    f"target {t.id}: target/block function mismatch "
                    f"(block {t.block} is not in function {f.id})"
                )

    direct = _derive_call_edges(tuple(functions))
    for e in indirect:
        if e.from_fn not in fid_set or e.to_fn not in fid_set:
            raise ValidationError(
                f"indirect edge {e.from_fn}->{e.to_fn} references unknown function"
            )
        fn = next(f for f in functions if f.id == e.from_fn)
        if not fn.has_block(e.from_block):
            raise ValidationError(
                f"indirect edge from function {e.from_fn}: "
                f"block {e.from_block} not found"
            )
        if (e.from_fn, e.to_fn) in direct:
            raise ValidationError(
                f"indirect edge {e.from_fn}->{e.to_fn} duplicates a direct call edge"
            )


def _densify(
    functions: list[Function], indirect: list[IndirectEdge]
) -> tuple[list[Function], list[IndirectEdge]]:
    """Remap function ids onto 0..N-1 preserving the original id order."""
    remap = {old: new for new, old in enumerate(sorted(f.id for f in functions))}
    out = []
    for f in sorted(functions, key=lambda f: f.id):
        out.append(
            Function(
                id=remap[f.id],
                name=f.name,
                entry=f.entry,
                blocks=tuple(
                    BasicBlock(
                        id=b.id,
                        successors=b.successors,
                        calls=tuple(remap[c] for c in b.calls),
                    )
                    for b in f.blocks
                ),
                targets=tuple(
                    Target(id=t.id, function=remap[f.id], block=t.block)
                    for t in f.targets
                ),
            )
        )
    iedges = [
        IndirectEdge(remap[e.from_fn], e.from_block, remap[e.to_fn]) for e in indirect
    ]
    return out, iedges


def graph_from_dict(data) -> ProgramGraph:
    if not isinstance(data, dict):
        raise ParseError("top level: expected object")
    _check_keys(data, _TOP_KEYS, "top level")
    if "functions" not in data or not isinstance(data["functions"], list):
        raise ParseError("top level: missing or non-list 'functions'")

    functions = [_parse_function(o, i) for i, o in enumerate(data["functions"])]

    indirect = []
    for i, eobj in enumerate(data.get("indirect_edges", [])):
        where = f"indirect_edges[{i}]"
        if not isinstance(eobj, dict):
            raise ParseError(f"{where}: expected object")
        _check_keys(eobj, _IEDGE_KEYS, where)
        for key in _IEDGE_KEYS:
            if key not in eobj:
                raise ParseError(f"{where}: missing field '{key}'")
        indirect.append(
            IndirectEdge(
                from_fn=_nonneg_int(eobj["from_fn"], f"{where}.from_fn"),
                from_block=_nonneg_int(eobj["from_block"], f"{where}.from_block"),
                to_fn=_nonneg_int(eobj["to_fn"], f"{where}.to_fn"),
            )
        )

    _validate(functions, indirect)
    functions, indirect = _densify(functions, indirect)
    return ProgramGraph(
        functions=tuple(functions),
        call_edges=_derive_call_edges(tuple(functions)),
        indirect_edges=tuple(indirect),
    )


def graph_to_dict(graph: ProgramGraph) -> dict:
    data: dict = {
        "functions": [
            {
                "id": f.id,
                "name": f.name,
                "entry": f.entry,
                "blocks": [
                    {"id": b.id, "succ": list(b.successors), "calls": list(b.calls)}
                    for b in f.blocks
                ],
                "targets": [{"id": t.id, "block": t.block} for t in f.targets],
            }
            for f in graph.functions
        ]
    }
    if graph.indirect_edges:
        data["indirect_edges"] = [
            {"from_fn": e.from_fn, "from_block": e.from_block, "to_fn": e.to_fn}
            for e in sorted(
                graph.indirect_edges, key=lambda e: (e.from_fn, e.from_block, e.to_fn)
            )
        ]
    return data


def load_program(path: str) -> ProgramGraph:
    """Load and validate a program graph file.

    Raises ParseError with field diagnostics on malformed input and
    ValidationError naming the violated invariant on inconsistent input.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return graph_from_dict(data)


def canonical_bytes(graph: ProgramGraph) -> bytes:
    """Canonical serialization used for content hashing and saving."""
    return (
        json.dumps(graph_to_dict(graph), sort_keys=True, separators=(",", ":")) + "\n"
    ).encode("utf-8")


def graph_hash(graph: ProgramGraph) -> str:
    return hashlib.sha256(canonical_bytes(graph)).hexdigest()


def save_program(graph: ProgramGraph, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(canonical_bytes(graph))


# ---------------------------------------------------------------------------
# Block-level distance
# ---------------------------------------------------------------------------


def dbb_from(function: Function, src: int) -> dict[int, int]:
    """Conditional-edge distances from ``src`` to every reachable block.

    An edge counts as conditional iff its source block has two or more
    successors. 0/1 breadth-first search over the block graph; successors
    visited in ascending block id for determinism.
    """
    if not function.has_block(src):
        raise KeyError(f"function {function.id} has no block {src}")
    dist = {src: 0}
    dq: deque = deque([src])
    while dq:
        u = dq.popleft()
        du = dist[u]
        block = function.block(u)
        w = 1 if block.is_conditional else 0
        for v in sorted(block.successors):
            dv = du + w
            if v not in dist or dv < dist[v]:
                dist[v] = dv
                if w == 0:
                    dq.appendleft(v)
                else:
                    dq.append(v)
    return dist


def dbb(function: Function, src: int, dst: int) -> Optional[int]:
    """Minimum number of conditional edges on any path from src to dst.

    Returns None when dst is unreachable from src.
    """
    if not function.has_block(dst):
        raise KeyError(f"function {function.id} has no block {dst}")
    return dbb_from(function, src).get(dst)


def unreachable_blocks(graph: ProgramGraph) -> dict[int, list[int]]:
    """Blocks not reachable from their function's entry, flagged per function."""
    flagged: dict[int, list[int]] = {}
    for f in graph.functions:
        seen = {f.entry}
        work = [f.entry]
        while work:
            u = work.pop()
            for v in f.block(u).successors:
                if v not in seen:
                    seen.add(v)
                    work.append(v)
        missing = sorted(b.id for b in f.blocks if b.id not in seen)
        if missing:
            flagged[f.id] = missing
    return flagged


def cg_successors(graph: ProgramGraph) -> dict[int, list[int]]:
    """Adjacency of the static (direct-call) call graph, sorted for determinism."""
    adj: dict[int, list[int]] = {f.id: [] for f in graph.functions}
    for a, b in sorted(graph.call_edges):
        adj[a].append(b)
    return adj


def cg_distance_from(graph: ProgramGraph, sources) -> dict[int, int]:
    """Uniform-weight BFS hop counts over the static call graph from a set."""
    adj = cg_successors(graph)
    dist = {s: 0 for s in sorted(sources)}
    dq: deque = deque(sorted(sources))
    while dq:
        u = dq.popleft()
        for v in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                dq.append(v)
    return dist


def iter_cfg_edges(graph: ProgramGraph) -> Iterator[tuple[int, int, int]]:
    """All intra-function edges as (function, src block, dst block)."""
    for f in graph.functions:
        for b in f.blocks:
            for s in b.successors:
                yield (f.id, b.id, s)
