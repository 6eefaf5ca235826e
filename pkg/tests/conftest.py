import sys
import time
from pathlib import Path
from types import SimpleNamespace

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fishsched.distance import build_distance_map
from fishsched.graph import graph_from_dict, load_program
from fishsched.simulator import (
    SCHEDULERS,
    STANDARD_SEEDS,
    run_campaign_with_queue,
    standard_config,
    standard_graph,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def standard_results():
    """All four schedulers over the pinned benchmark world and ten seeds.

    Built once per session; the RQ-style comparisons, the phase-dynamics
    check, and the indirect-call check all read from it.
    """
    t0 = time.monotonic()
    graph = standard_graph()
    dmap = build_distance_map(graph)
    results = {sched: {} for sched in SCHEDULERS}
    queues = {}
    for sched in SCHEDULERS:
        for seed in STANDARD_SEEDS:
            result, queue = run_campaign_with_queue(
                graph, standard_config(sched, seed)
            )
            results[sched][seed] = result
            if sched == "fishfuzz":
                queues[seed] = queue
    return SimpleNamespace(
        graph=graph,
        dmap=dmap,
        results=results,
        queues=queues,
        build_seconds=time.monotonic() - t0,
    )


@pytest.fixture(scope="session")
def fig2_graph():
    return load_program(str(FIXTURES / "fig2.graph"))


@pytest.fixture(scope="session")
def fig2_paths():
    return {
        "graph": str(FIXTURES / "fig2.graph"),
        "s1": str(FIXTURES / "fig2_s1.trace"),
        "s2": str(FIXTURES / "fig2_s2.trace"),
    }


def linear_block(bid, succ=(), calls=()):
    return {"id": bid, "succ": list(succ), "calls": list(calls)}


def make_graph(data):
    return graph_from_dict(data)


@pytest.fixture
def diamond_graph():
    """One function with a diamond CFG: 0 -> {1,2} -> 3, callee called at 3."""
    return make_graph(
        {
            "functions": [
                {
                    "id": 0,
                    "name": "main",
                    "entry": 0,
                    "blocks": [
                        linear_block(0, succ=[1, 2]),
                        linear_block(1, succ=[3]),
                        linear_block(2, succ=[3]),
                        linear_block(3, calls=[1]),
                    ],
                    "targets": [],
                },
                {
                    "id": 1,
                    "name": "leaf",
                    "entry": 0,
                    "blocks": [linear_block(0)],
                    "targets": [{"id": 0, "block": 0}],
                },
            ]
        }
    )


@pytest.fixture
def chain_graph():
    """f0 -> f1 -> f2 with pair weights 1 and 2; targets in f1 and f2.

    f0 calls f1 from a block one conditional edge deep; f1 calls f2 from a
    block two conditional edges deep.
    """
    return make_graph(
        {
            "functions": [
                {
                    "id": 0,
                    "name": "f0",
                    "entry": 0,
                    "blocks": [
                        linear_block(0, succ=[1, 2]),
                        linear_block(1, calls=[1]),
                        linear_block(2),
                    ],
                    "targets": [],
                },
                {
                    "id": 1,
                    "name": "f1",
                    "entry": 0,
                    "blocks": [
                        linear_block(0, succ=[1, 2]),
                        linear_block(1, succ=[3, 4]),
                        linear_block(2),
                        linear_block(3, calls=[2]),
                        linear_block(4),
                    ],
                    "targets": [{"id": 0, "block": 0}],
                },
                {
                    "id": 2,
                    "name": "f2",
                    "entry": 0,
                    "blocks": [linear_block(0)],
                    "targets": [{"id": 1, "block": 0}],
                },
            ]
        }
    )
