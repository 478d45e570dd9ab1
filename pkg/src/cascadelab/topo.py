"""Per-cascade topology and source-relative propagation metrics.

All distances are unweighted hop counts on the cascade tree; reception
times never enter a distance metric. Metrics that need at least two
nodes (structural virality, the source-relative stats, the depth/time
profile) raise UndefinedMetricError on singletons instead of returning a
placeholder, so corpus-level statistics never absorb degenerate values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .corpus import Cascade, Corpus, Label


FEATURES = (
    "size",
    "depth",
    "max_breadth",
    "diameter",
    "structural_virality",
    "max_hop",
    "avg_hop",
    "max_time",
    "avg_time",
    # Secondary reading of "widest point": largest fan-out of any single node.
    "max_out_degree",
)


class UndefinedMetricError(ValueError):
    """Metric precondition not met (e.g. a single-node cascade)."""


def node_depths(c: Cascade) -> dict[str, int]:
    """Hop distance from the root for every node, by BFS."""
    children = c.children_index()
    depths = {c.root.uid: 0}
    queue = deque([c.root.uid])
    while queue:
        uid = queue.popleft()
        for child in children[uid]:
            depths[child] = depths[uid] + 1
            queue.append(child)
    return depths


def depth(c: Cascade) -> int:
    """Longest root-to-node hop count; 0 for a single node."""
    return max(node_depths(c).values())


def max_breadth(c: Cascade) -> int:
    """Maximum number of nodes at any single depth level."""
    widths: dict[int, int] = {}
    for d in node_depths(c).values():
        widths[d] = widths.get(d, 0) + 1
    return max(widths.values())


def max_out_degree(c: Cascade) -> int:
    """Largest number of direct children under any one node."""
    children = c.children_index()
    return max(len(kids) for kids in children.values())


def _adjacency(c: Cascade) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n.uid: [] for n in c.nodes}
    for node in c.nodes:
        if node.parent is not None:
            adj[node.parent].append(node.uid)
            adj[node.uid].append(node.parent)
    return adj


def _bfs_farthest(adj: dict[str, list[str]], start: str) -> tuple[str, int]:
    dist = {start: 0}
    queue = deque([start])
    far_uid, far_d = start, 0
    while queue:
        uid = queue.popleft()
        for nbr in adj[uid]:
            if nbr not in dist:
                dist[nbr] = dist[uid] + 1
                if dist[nbr] > far_d:
                    far_uid, far_d = nbr, dist[nbr]
                queue.append(nbr)
    return far_uid, far_d


def diameter(c: Cascade) -> int:
    """Longest shortest path in the undirected tree (double BFS)."""
    if c.size == 1:
        return 0
    adj = _adjacency(c)
    end, _ = _bfs_farthest(adj, c.root.uid)
    _, dia = _bfs_farthest(adj, end)
    return dia


def structural_virality(c: Cascade) -> float:
    """Mean hop distance over all ordered node pairs.

    Low for broadcast (star-like) spread, high for chain-like spread.
    Computed from per-edge subtree counts: an edge splitting the tree
    into s and n-s nodes lies on s*(n-s) unordered paths.
    """
    n = c.size
    if n < 2:
        raise UndefinedMetricError("structural virality needs >= 2 nodes")
    children = c.children_index()
    subtree = {uid: 1 for uid in children}
    # Children are created after parents by validation (reachability), so a
    # reverse BFS order accumulates subtree sizes bottom-up.
    order = []
    queue = deque([c.root.uid])
    while queue:
        uid = queue.popleft()
        order.append(uid)
        queue.extend(children[uid])
    wiener = 0
    for uid in reversed(order):
        for child in children[uid]:
            subtree[uid] += subtree[child]
    for node in c.nodes:
        if node.parent is not None:
            s = subtree[node.uid]
            wiener += s * (n - s)
    return 2.0 * wiener / (n * (n - 1))


def source_distance_stats(c: Cascade) -> tuple[int, float]:
    """(max hop, mean hop) from the source over non-root nodes."""
    if c.size < 2:
        raise UndefinedMetricError("source distance stats need >= 2 nodes")
    hops = [d for d in node_depths(c).values() if d > 0]
    return max(hops), sum(hops) / len(hops)


def reception_time_stats(c: Cascade) -> tuple[float, float]:
    """(max, mean) reception time over non-root nodes."""
    if c.size < 2:
        raise UndefinedMetricError("reception time stats need >= 2 nodes")
    times = [n.t for n in c.nodes if not n.is_root]
    return max(times), sum(times) / len(times)


@dataclass(frozen=True)
class DepthTimeProfile:
    """Mean reception time per depth level, depths >= 1 ascending."""
    rows: tuple[tuple[int, float, int], ...]  # (depth, mean_time, count)


def depth_time_profile(c: Cascade) -> DepthTimeProfile:
    if c.size < 2:
        raise UndefinedMetricError("depth/time profile needs >= 2 nodes")
    depths = node_depths(c)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for node in c.nodes:
        d = depths[node.uid]
        if d == 0:
            continue
        sums[d] = sums.get(d, 0.0) + node.t
        counts[d] = counts.get(d, 0) + 1
    rows = tuple((d, sums[d] / counts[d], counts[d]) for d in sorted(sums))
    return DepthTimeProfile(rows=rows)


_METRIC_FUNCS = {
    "size": lambda c: float(c.size),
    "depth": lambda c: float(depth(c)),
    "max_breadth": lambda c: float(max_breadth(c)),
    "diameter": lambda c: float(diameter(c)),
    "structural_virality": structural_virality,
    "max_hop": lambda c: float(source_distance_stats(c)[0]),
    "avg_hop": lambda c: source_distance_stats(c)[1],
    "max_time": lambda c: reception_time_stats(c)[0],
    "avg_time": lambda c: reception_time_stats(c)[1],
    "max_out_degree": lambda c: float(max_out_degree(c)),
}


def compute_metric(c: Cascade, feature: str) -> float:
    """Evaluate one named metric on one cascade."""
    if feature not in _METRIC_FUNCS:
        raise ValueError(f"unknown feature {feature!r}; expected one of {FEATURES}")
    return float(_METRIC_FUNCS[feature](c))


@dataclass(frozen=True)
class MetricSeries:
    """One metric value per cascade, with labels carried for grouping."""
    feature: str
    values: tuple[tuple[str, float], ...]     # (cascade id, value)
    label_of: dict[str, Label]
    skipped: tuple[str, ...] = ()             # cascade ids failing the precondition


def metric_series(corpus: Corpus, feature: str) -> MetricSeries:
    """Evaluate one metric over every cascade in the corpus.

    Cascades that fail the metric's precondition are skipped and listed
    in ``skipped`` rather than contributing a placeholder value.
    """
    if feature not in _METRIC_FUNCS:
        raise ValueError(f"unknown feature {feature!r}; expected one of {FEATURES}")
    func = _METRIC_FUNCS[feature]
    values = []
    labels = {}
    skipped = []
    for cascade in corpus:
        labels[cascade.id] = cascade.label
        try:
            values.append((cascade.id, float(func(cascade))))
        except UndefinedMetricError:
            skipped.append(cascade.id)
    return MetricSeries(feature=feature, values=tuple(values),
                        label_of=labels, skipped=tuple(skipped))
