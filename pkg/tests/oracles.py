"""Independent reference implementations used as test oracles.

Everything here is deliberately written the slow, obvious way (double loops
over the published formulas, exhaustive enumeration) and never calls the
implementations it checks.
"""

from __future__ import annotations

from itertools import combinations


def brute_modularity(graph, assignment: dict[str, int]) -> float:
    """Directed weighted modularity straight from the double-sum formula:
    (1/W) sum_ij [w_ij - s_out(i) s_in(j) / W] delta(c_i, c_j), diagonal
    null-model terms included."""
    nodes = sorted(graph.nodes)
    w = graph.total_weight
    total = 0.0
    for i in nodes:
        for j in nodes:
            if assignment[i] != assignment[j]:
                continue
            w_ij = graph.edges.get((i, j), 0.0)
            total += w_ij - graph.s_out[i] * graph.s_in[j] / w
    return total / w


def all_partitions(items: list[str]):
    """Every set partition of ``items`` (Bell-number enumeration)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in all_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [partition[i] + [first]] + partition[i + 1 :]
        yield partition + [[first]]


def exhaustive_best_q(graph) -> float:
    """Maximum modularity over every set partition of the graph's nodes."""
    nodes = sorted(graph.nodes)
    best = float("-inf")
    for partition in all_partitions(nodes):
        assignment = {n: i for i, block in enumerate(partition) for n in block}
        q = brute_modularity(graph, assignment)
        if q > best:
            best = q
    return best


def simulate_greedy_merges(graph) -> list[tuple[frozenset, frozenset, float]]:
    """Replay the greedy agglomeration from scratch.

    At each step, the modularity gain of merging every edge-connected
    cluster pair is computed by evaluating brute_modularity before and
    after (no incremental bookkeeping), with the same tie rule as the
    implementation: highest gain, then lexicographically smallest pair of
    cluster representatives.  Returns the merge sequence with the
    modularity after each merge.
    """
    clusters: dict[str, frozenset] = {n: frozenset([n]) for n in sorted(graph.nodes)}

    def connected(a: str, b: str) -> bool:
        for u in clusters[a]:
            for v in clusters[b]:
                if (u, v) in graph.edges or (v, u) in graph.edges:
                    return True
        return False

    def assignment_of(cluster_map: dict[str, frozenset]) -> dict[str, int]:
        return {
            n: i
            for i, rep in enumerate(sorted(cluster_map))
            for n in cluster_map[rep]
        }

    merges = []
    while True:
        current_q = brute_modularity(graph, assignment_of(clusters))
        best = None
        for a, b in combinations(sorted(clusters), 2):
            if not connected(a, b):
                continue
            trial = dict(clusters)
            trial[a] = trial[a] | trial.pop(b)
            gain = brute_modularity(graph, assignment_of(trial)) - current_q
            key = (a, b)
            if best is None or gain > best[0] + 1e-12 or (
                gain >= best[0] - 1e-12 and key < best[1]
            ):
                best = (gain, key)
        if best is None:
            break
        a, b = best[1]
        left, right = clusters[a], clusters[b]
        clusters[a] = clusters[a] | clusters.pop(b)
        merges.append((left, right, current_q + best[0]))
    return merges


def scan_minimum(f, lo: float, hi: float, steps: int = 20001) -> float:
    """Dense-grid argmin of a 1-d function (finite-difference style oracle)."""
    best_x = lo
    best_y = f(lo)
    for k in range(1, steps):
        x = lo + (hi - lo) * k / (steps - 1)
        y = f(x)
        if y < best_y:
            best_x, best_y = x, y
    return best_x


def eq1_energy(x: float, neighbors: list[tuple[float, float]]) -> float:
    """Energy of one building at ``x`` against (neighbor_x, weight) pairs."""
    return sum((w * (x - nx)) ** 2 for nx, w in neighbors)
