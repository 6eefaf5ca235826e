"""Seeds, execution traces, and the dynamic seed-to-function distances.

A seed never carries input bytes here: it is its trace plus metadata.
Traces are immutable once recorded; distance queries are pure functions
over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .graph import ENTRY_FUNCTION, ProgramGraph
from .distance import StaticDistanceMap


@dataclass(frozen=True)
class ExecutionTrace:
    functions: frozenset = frozenset()
    edges: frozenset = frozenset()
    targets_reached: frozenset = frozenset()
    targets_triggered: frozenset = frozenset()

    def __post_init__(self) -> None:
        if not self.targets_triggered <= self.targets_reached:
            raise ValueError("triggered targets must be a subset of reached targets")


@dataclass
class Seed:
    id: int
    exec_time: int  # virtual microseconds
    size: int  # bytes
    trace: ExecutionTrace
    favor: bool = False
    parent: Optional[int] = None
    created_at: int = 0

    def __post_init__(self) -> None:
        if self.exec_time <= 0:
            raise ValueError("exec_time must be positive")
        if self.size <= 0:
            raise ValueError("size must be positive")


@dataclass(frozen=True)
class TargetDistanceVector:
    """Per-target distances, ordered like the queried target list.

    An entry of None means the target's function is statically unreachable
    from every traversed function.
    """

    entries: dict

    def __getitem__(self, target_id: int):
        return self.entries[target_id]

    def values(self) -> list:
        return list(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)


def _traversed(trace: ExecutionTrace) -> frozenset:
    # Every execution enters the program entry; a trace that recorded
    # nothing (crash at entry) still counts the entry function.
    return trace.functions if trace.functions else frozenset({ENTRY_FUNCTION})


def dsf(seed: Seed, fid: int, dmap: StaticDistanceMap) -> Optional[int]:
    """Distance between the functions traversed by a seed and a function.

    Zero when the seed already traverses fid, otherwise the minimum static
    distance from any traversed function; None when no traversed function
    reaches fid statically.
    """
    return dsf_of_functions(_traversed(seed.trace), fid, dmap)


def dsf_of_functions(funcs, fid: int, dmap: StaticDistanceMap) -> Optional[int]:
    if fid in funcs:
        return 0
    best: Optional[int] = None
    for fs in funcs:
        d = dmap.dff_value(fs, fid)
        if d is not None and (best is None or d < best):
            best = d
    return best


def multi_target_distance(
    seed: Seed,
    targets: list[int],
    ranking,
    dmap: StaticDistanceMap,
    graph: ProgramGraph,
) -> TargetDistanceVector:
    """Seed-to-target distance vector; precision independent of set size.

    A triggered target contributes zero regardless of the seed; untriggered
    entries are the seed's distance to the target's owner function.
    """
    funcs = _traversed(seed.trace)
    entries: dict = {}
    for tid in targets:
        target = graph.target(tid)
        if ranking.state(tid).triggered:
            entries[tid] = 0
        else:
            entries[tid] = dsf_of_functions(funcs, target.function, dmap)
    return TargetDistanceVector(entries=entries)


# ---------------------------------------------------------------------------
# Trace dump (debugging and golden tests)
# ---------------------------------------------------------------------------


def trace_dump_line(seed: Seed) -> str:
    t = seed.trace
    return (
        f"{seed.id}; {seed.exec_time}; {seed.size}; "
        f"functions={_ids(t.functions)}; "
        f"reached={_ids(t.targets_reached)}; "
        f"triggered={_ids(t.targets_triggered)}"
    )


def parse_trace_line(line: str) -> Seed:
    parts = [p.strip() for p in line.strip().split(";")]
    if len(parts) != 6:
        raise ValueError(f"trace line must have 6 fields, got {len(parts)}")
    sid, exec_time, size = int(parts[0]), int(parts[1]), int(parts[2])
    fields = {}
    for part in parts[3:]:
        key, _, value = part.partition("=")
        fields[key] = frozenset(int(x) for x in value.split(",") if x != "")
    for key in ("functions", "reached", "triggered"):
        if key not in fields:
            raise ValueError(f"trace line missing '{key}=' field")
    trace = ExecutionTrace(
        functions=fields["functions"],
        targets_reached=fields["reached"],
        targets_triggered=fields["triggered"],
    )
    return Seed(id=sid, exec_time=exec_time, size=size, trace=trace)


def _ids(values) -> str:
    return ",".join(str(v) for v in sorted(values))
