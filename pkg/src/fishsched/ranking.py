"""Dynamic target ranking: reached/triggered flags and hit frequencies.

The ranking is the shared structure between the campaign loop (single
writer) and the cull logic and distance queries (readers). Hits count
executions whose trace reached the target, one increment per execution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .execution import ExecutionTrace
from .graph import ProgramGraph


@dataclass
class TargetState:
    reached: bool = False
    triggered: bool = False
    hits: int = 0
    first_reached_at: Optional[int] = None
    first_triggered_at: Optional[int] = None


@dataclass(frozen=True)
class UpdateSummary:
    """Novelty counts from one recorded execution, consumed by the phase clock."""

    new_functions: int = 0
    new_reached: int = 0
    new_triggered: int = 0

    def merged(self, *, new_functions: int) -> "UpdateSummary":
        return UpdateSummary(
            new_functions=new_functions,
            new_reached=self.new_reached,
            new_triggered=self.new_triggered,
        )


class TargetRanking:
    """Per-target dynamic state covering exactly the graph's target set."""

    def __init__(self, graph: ProgramGraph) -> None:
        self._states = {t.id: TargetState() for t in graph.targets()}
        self.epoch = 0

    def state(self, target_id: int) -> TargetState:
        try:
            return self._states[target_id]
        except KeyError:
            raise KeyError(f"unknown target id {target_id}") from None

    def target_ids(self) -> list[int]:
        return sorted(self._states)

    def record_execution(self, trace: ExecutionTrace, now: int) -> UpdateSummary:
        """Fold one execution into the ranking; returns the novelty counts."""
        self.epoch += 1
        new_reached = 0
        new_triggered = 0
        for tid in sorted(trace.targets_reached):
            st = self.state(tid)
            st.hits += 1
            if not st.reached:
                st.reached = True
                st.first_reached_at = now
                new_reached += 1
        for tid in sorted(trace.targets_triggered):
            st = self.state(tid)
            if not st.triggered:
                st.triggered = True
                st.first_triggered_at = now
                new_triggered += 1
        return UpdateSummary(new_reached=new_reached, new_triggered=new_triggered)


def reached_untriggered(
    ranking: TargetRanking, exclude_triggered: bool = False
) -> list[int]:
    """Reached targets, ascending by id.

    The literal cull filter keeps triggered targets in the list (their
    distance is zeroed elsewhere); exclude_triggered drops them, which is
    what the scheduler uses by default.
    """
    out = []
    for tid in ranking.target_ids():
        st = ranking.state(tid)
        if not st.reached:
            continue
        if exclude_triggered and st.triggered:
            continue
        out.append(tid)
    return out


def order_by_hits(ids: list[int], ranking: TargetRanking) -> list[int]:
    """Least-hit first; ties broken on the smaller target id."""
    return sorted(ids, key=lambda tid: (ranking.state(tid).hits, tid))


def energy_rows(ranking: TargetRanking) -> list[tuple]:
    """Rows for the energy report CSV, ascending by target id."""
    rows = []
    for tid in ranking.target_ids():
        st = ranking.state(tid)
        rows.append(
            (
                tid,
                st.hits,
                int(st.reached),
                int(st.triggered),
                "" if st.first_reached_at is None else st.first_reached_at,
                "" if st.first_triggered_at is None else st.first_triggered_at,
            )
        )
    return rows


def energy_series(hits_by_target: dict) -> list[tuple[int, int]]:
    """(rank, hits) rows sorted by descending hit frequency."""
    ordered = sorted(hits_by_target.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(rank + 1, hits) for rank, (_, hits) in enumerate(ordered)]
