"""Head-to-head campaign comparison: aggregates, Gini, rank-sum p-values."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .simulator import CampaignResult

# Exact rank-sum enumeration is feasible up to this many total samples;
# larger groups fall back to the normal approximation.
EXACT_LIMIT = 20


def gini(values) -> float:
    """Gini coefficient of a non-negative distribution; 0 for an empty or flat one."""
    xs = sorted(values)
    n = len(xs)
    total = sum(xs)
    if n == 0 or total == 0:
        return 0.0
    weighted = sum((i + 1) * x for i, x in enumerate(xs))
    return (2.0 * weighted) / (n * total) - (n + 1) / n


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def rank_sum_p(xs: list[float], ys: list[float]) -> float:
    """Two-sided Mann-Whitney p-value.

    Exact when the pooled sample is small: over every assignment of group
    labels to the pooled midranks, the fraction whose U deviates from its
    mean at least as much as the observed U. Normal approximation with tie
    correction otherwise.
    """
    n1, n2 = len(xs), len(ys)
    if n1 == 0 or n2 == 0:
        raise ValueError("rank_sum_p requires non-empty groups")
    pooled = list(xs) + list(ys)
    ranks = _midranks(pooled)
    r1 = sum(ranks[:n1])
    u_obs = r1 - n1 * (n1 + 1) / 2
    mean_u = n1 * n2 / 2

    if n1 + n2 <= EXACT_LIMIT:
        dev = abs(u_obs - mean_u) - 1e-12
        count = 0
        total = 0
        min_offset = n1 * (n1 + 1) / 2
        for combo in itertools.combinations(range(n1 + n2), n1):
            total += 1
            u = sum(ranks[i] for i in combo) - min_offset
            if abs(u - mean_u) >= dev:
                count += 1
        return count / total

    n = n1 + n2
    tie_counts: dict[float, int] = {}
    for v in pooled:
        tie_counts[v] = tie_counts.get(v, 0) + 1
    tie_term = sum(t**3 - t for t in tie_counts.values())
    var_u = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u == 0:
        return 1.0
    z = (abs(u_obs - mean_u) - 0.5) / math.sqrt(var_u)
    z = max(z, 0.0)
    return min(1.0, 2.0 * (1.0 - _phi(z)))


def _phi(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def never_hit_count(result: CampaignResult) -> int:
    """Targets with zero hit frequency at the end of the campaign."""
    return sum(1 for hits in result.target_hits.values() if hits == 0)


@dataclass(frozen=True)
class SchedulerAggregate:
    scheduler: str
    seeds: list
    coverage: list
    reached: list
    triggered: list
    never_hit: list
    gini: list

    def means(self) -> dict:
        def mean(xs):
            return sum(xs) / len(xs)

        return {
            "coverage": mean(self.coverage),
            "reached": mean(self.reached),
            "triggered": mean(self.triggered),
            "never_hit": mean(self.never_hit),
            "gini": mean(self.gini),
        }


@dataclass(frozen=True)
class ComparisonReport:
    aggregates: dict  # scheduler -> SchedulerAggregate
    pairwise: dict  # (sched_a, sched_b) -> {metric: {"delta":..., "p":...}}

    def csv_rows(self) -> list[list]:
        rows: list[list] = [["section", "scheduler", "metric", "value"]]
        for name in sorted(self.aggregates):
            agg = self.aggregates[name]
            rows.append(["group", name, "n_seeds", len(agg.seeds)])
            for metric, value in sorted(agg.means().items()):
                rows.append(["group", name, f"mean_{metric}", _fmt(value)])
        for (a, b) in sorted(self.pairwise):
            for metric, stats in sorted(self.pairwise[(a, b)].items()):
                rows.append(
                    ["pair", f"{a}|{b}", f"{metric}_delta", _fmt(stats["delta"])]
                )
                rows.append(["pair", f"{a}|{b}", f"{metric}_p", _fmt(stats["p"])])
        return rows

    def text_table(self) -> str:
        lines = []
        header = f"{'scheduler':<20} {'cov':>10} {'reach':>8} {'trig':>8} {'zero':>6} {'gini':>8}"
        lines.append(header)
        lines.append("-" * len(header))
        for name in sorted(self.aggregates):
            m = self.aggregates[name].means()
            lines.append(
                f"{name:<20} {m['coverage']:>10.1f} {m['reached']:>8.1f} "
                f"{m['triggered']:>8.1f} {m['never_hit']:>6.1f} {m['gini']:>8.4f}"
            )
        for (a, b) in sorted(self.pairwise):
            stats = self.pairwise[(a, b)]
            lines.append(
                f"{a} vs {b}: "
                + "  ".join(
                    f"{metric} delta={s['delta']:+.2f} p={s['p']:.4f}"
                    for metric, s in sorted(stats.items())
                )
            )
        return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


_METRICS = ("coverage", "reached", "triggered")


def compare_campaigns(results: list[CampaignResult]) -> ComparisonReport:
    """Aggregate per scheduler and test pairwise differences across rng seeds."""
    if len(results) < 2:
        raise ValueError("compare_campaigns requires at least two results")
    if len({r.graph_hash for r in results}) > 1:
        raise ValueError("mismatched graphs: results were produced on different graphs")

    by_sched: dict[str, list[CampaignResult]] = {}
    for r in results:
        by_sched.setdefault(r.scheduler, []).append(r)

    aggregates = {}
    for name, rs in by_sched.items():
        rs = sorted(rs, key=lambda r: r.rng_seed)
        aggregates[name] = SchedulerAggregate(
            scheduler=name,
            seeds=[r.rng_seed for r in rs],
            coverage=[r.final_coverage for r in rs],
            reached=[r.final_reached for r in rs],
            triggered=[r.final_triggered for r in rs],
            never_hit=[never_hit_count(r) for r in rs],
            gini=[gini(list(r.target_hits.values())) for r in rs],
        )

    names = sorted(aggregates)
    pairs = (
        list(itertools.combinations(names, 2))
        if len(names) > 1
        else [(names[0], names[0])]
    )
    pairwise = {}
    for a, b in pairs:
        agg_a, agg_b = aggregates[a], aggregates[b]
        stats = {}
        for metric in _METRICS:
            xs = getattr(agg_a, metric)
            ys = getattr(agg_b, metric)
            stats[metric] = {
                "delta": sum(xs) / len(xs) - sum(ys) / len(ys),
                "p": rank_sum_p(xs, ys),
            }
        pairwise[(a, b)] = stats
    return ComparisonReport(aggregates=aggregates, pairwise=pairwise)
