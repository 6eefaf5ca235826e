"""Three-phase queue culling and the timeout-driven phase state machine.

A campaign widens first (inter-function exploration favors the seed
closest to each unexplored function that contains targets), then tests
reached code (plain coverage culling), then narrows onto the least-hit
reached targets (exploitation). Every cull pass clears all favor flags
before setting any, so favors never leak across phases.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .distance import StaticDistanceMap
from .execution import Seed, dsf
from .graph import ProgramGraph
from .ranking import TargetRanking, UpdateSummary, order_by_hits, reached_untriggered

# Virtual-clock granularity: wall-clock timeouts are expressed in ticks,
# one tick per executed input, at this default scale.
TICKS_PER_VIRTUAL_MINUTE = 100


class Phase(enum.Enum):
    INTER_EXPLORE = "inter_explore"
    INTRA_EXPLORE = "intra_explore"
    EXPLOIT = "exploit"


@dataclass
class PhaseClock:
    """Timestamps of the last novelty events, updated once per execution."""

    last_new_function: int = 0
    last_new_target_reached: int = 0
    last_new_target_triggered: int = 0

    def update(self, now: int, summary: UpdateSummary) -> None:
        if summary.new_functions > 0:
            self.last_new_function = max(self.last_new_function, now)
        if summary.new_reached > 0:
            self.last_new_target_reached = max(self.last_new_target_reached, now)
        if summary.new_triggered > 0:
            self.last_new_target_triggered = max(self.last_new_target_triggered, now)


@dataclass
class SchedulerConfig:
    w_function: float = 30 * TICKS_PER_VIRTUAL_MINUTE
    w_reach: float = 10 * TICKS_PER_VIRTUAL_MINUTE
    w_trigger: float = 60 * TICKS_PER_VIRTUAL_MINUTE
    exploit_fraction: float = 0.20
    exploit_include_triggered: bool = False
    exploit_timeout_to: Phase = Phase.INTER_EXPLORE
    skip_unfavored_probability: float = 1.0

    def __post_init__(self) -> None:
        for name in ("w_function", "w_reach", "w_trigger"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 < self.exploit_fraction <= 1:
            raise ValueError("exploit_fraction must be in (0, 1]")
        if not 0 <= self.skip_unfavored_probability <= 1:
            raise ValueError("skip_unfavored_probability must be in [0, 1]")


class FunctionExplorationState:
    """Which functions some trace has traversed, and which contain targets."""

    def __init__(self, graph: ProgramGraph) -> None:
        self.has_targets = frozenset(f.id for f in graph.functions if f.targets)
        self.explored: set = set()

    def observe(self, trace) -> int:
        new = sorted(set(trace.functions) - self.explored)
        self.explored.update(new)
        return len(new)

    def unexplored_target_functions(self) -> list[int]:
        return sorted(self.has_targets - self.explored)


def _clear_favors(queue: list[Seed]) -> None:
    for s in queue:
        s.favor = False


def inter_function_cull(
    queue: list[Seed],
    fstate: FunctionExplorationState,
    dmap: StaticDistanceMap,
    dsf_fn: Optional[Callable[[Seed, int], Optional[int]]] = None,
) -> None:
    """Favor the closest seed for each unexplored function holding targets.

    Ties on distance prefer the lowest execution time, then the smaller
    seed id. Functions with no finite-distance seed mark no one.
    """
    _clear_favors(queue)
    if dsf_fn is None:
        dsf_fn = lambda s, fid: dsf(s, fid, dmap)
    for fid in fstate.unexplored_target_functions():
        best = None
        best_key = None
        for s in queue:
            d = dsf_fn(s, fid)
            if d is None:
                continue
            key = (d, s.exec_time, s.id)
            if best_key is None or key < best_key:
                best_key = key
                best = s
        if best is not None:
            best.favor = True


def exploitation_cull(
    queue: list[Seed],
    ranking: TargetRanking,
    cfg: SchedulerConfig,
    dmap: StaticDistanceMap,
    graph: ProgramGraph,
    dsf_fn: Optional[Callable[[Seed, int], Optional[int]]] = None,
) -> None:
    """Favor the fastest seed for each of the least-hit reached targets.

    Candidates are the reached targets (triggered ones dropped unless
    configured otherwise), least-hit first; only the top ceil(fraction * n)
    are serviced. A serviced target favors the fastest seed whose trace
    reached it; if no queued seed reaches it, the minimum-distance seed is
    favored so the pass stays total.
    """
    _clear_favors(queue)
    if dsf_fn is None:
        dsf_fn = lambda s, fid: dsf(s, fid, dmap)
    candidates = reached_untriggered(
        ranking, exclude_triggered=not cfg.exploit_include_triggered
    )
    if not candidates:
        return
    ordered = order_by_hits(candidates, ranking)
    threshold = math.ceil(len(ordered) * cfg.exploit_fraction)
    for tid in ordered[:threshold]:
        fid = graph.target(tid).function
        best = None
        best_key = None
        for s in queue:
            if tid in s.trace.targets_reached:
                key = (0, 0, s.exec_time, s.id)
            else:
                d = dsf_fn(s, fid)
                if d is None:
                    continue
                key = (1, d, s.exec_time, s.id)
            if best_key is None or key < best_key:
                best_key = key
                best = s
        if best is not None:
            best.favor = True


def intra_function_cull(queue: list[Seed]) -> None:
    """Coverage culling: per covered edge, the smallest-and-fastest seed wins.

    Greedy marking in ascending edge order: a winner claims all of its
    edges and already-claimed edges are skipped.
    """
    _clear_favors(queue)
    top_rated: dict = {}
    for s in queue:
        score = (s.exec_time * s.size, s.id)
        for e in s.trace.edges:
            cur = top_rated.get(e)
            if cur is None or score < cur[0]:
                top_rated[e] = (score, s)
    claimed: set = set()
    for e in sorted(top_rated):
        if e in claimed:
            continue
        winner = top_rated[e][1]
        winner.favor = True
        claimed.update(winner.trace.edges)


def phase_step(
    phase: Phase,
    clock: PhaseClock,
    now: int,
    cfg: SchedulerConfig,
    summary: UpdateSummary,
) -> Phase:
    """Pure transition function of the phase state machine.

    A newly traversed function always moves (or keeps) the campaign in
    inter-function exploration; otherwise each phase falls through to the
    next when its novelty clock times out.
    """
    if summary.new_functions > 0:
        return Phase.INTER_EXPLORE
    if phase is Phase.INTER_EXPLORE:
        if now - clock.last_new_function >= cfg.w_function:
            return Phase.INTRA_EXPLORE
    elif phase is Phase.INTRA_EXPLORE:
        if now - clock.last_new_target_reached >= cfg.w_reach:
            return Phase.EXPLOIT
    elif phase is Phase.EXPLOIT:
        if now - clock.last_new_target_triggered >= cfg.w_trigger:
            return cfg.exploit_timeout_to
    return phase


def select_next_seed(
    queue: list[Seed],
    rng: random.Random,
    skip_unfavored_probability: float = 1.0,
) -> Seed:
    """Uniform choice among favored seeds, falling back to the whole queue."""
    if not queue:
        raise ValueError("cannot select from an empty queue")
    favored = [s for s in queue if s.favor]
    if favored and rng.random() < skip_unfavored_probability:
        return rng.choice(favored)
    return rng.choice(queue)
