"""Feature clustering by directed weighted modularity maximization.

Greedy agglomeration in the CNM style: start from singleton clusters and
repeatedly merge the edge-connected pair with the largest modularity gain,
recording the merge tree.  The best partition is the cut of that tree at
the step where modularity peaked.

Modularity of a partition is

    Q = (1/W) * sum_ij [ w_ij - s_out(i) * s_in(j) / W ] * delta(c_i, c_j)

i.e. the summed significance of intra-cluster edges, where significance is
the actual weight minus its expectation under the strength-preserving null
model (directed convention: out-strength of the source times in-strength of
the target).
"""

from __future__ import annotations

from dataclasses import dataclass

from .canon import fmt_real
from .graph_model import ClassGraph

# Merge gains closer than this are considered tied and broken lexicographically.
TIE_EPSILON = 1e-12

# Connected components up to this size get an exact modularity optimum
# (Bell-number search is tiny there); larger ones rely on greedy merging.
EXACT_COMPONENT_LIMIT = 8


class UndefinedModularityError(ValueError):
    """Raised for graphs with zero total weight."""


@dataclass(frozen=True)
class Partition:
    """Assignment of every class to one of k dense cluster ids (0..k-1)."""

    assignment: dict[str, int]

    @property
    def cluster_count(self) -> int:
        return len(set(self.assignment.values())) if self.assignment else 0

    def clusters(self) -> list[list[str]]:
        """Cluster member lists, indexed by cluster id, members sorted."""
        out: list[list[str]] = [[] for _ in range(self.cluster_count)]
        for class_id in sorted(self.assignment):
            out[self.assignment[class_id]].append(class_id)
        return out


def _normalize_partition(clusters: list[list[str]]) -> Partition:
    # Dense cluster ids ordered by each cluster's smallest class id.
    ordered = sorted((sorted(members) for members in clusters if members), key=lambda m: m[0])
    assignment = {cid: idx for idx, members in enumerate(ordered) for cid in members}
    return Partition(assignment=assignment)


def modularity(graph: ClassGraph, partition: Partition) -> float:
    """Directed weighted modularity of ``partition`` on ``graph``."""
    w_total = graph.total_weight
    if w_total <= 0:
        raise UndefinedModularityError("modularity is undefined for graphs with zero total weight")
    assignment = partition.assignment
    if set(assignment) != set(graph.nodes):
        raise ValueError("partition does not cover exactly the graph's classes")

    intra = 0.0
    for (s, t), w in graph.edges.items():
        if assignment[s] == assignment[t]:
            intra += w
    out_strength: dict[int, float] = {}
    in_strength: dict[int, float] = {}
    for node in graph.nodes:
        c = assignment[node]
        out_strength[c] = out_strength.get(c, 0.0) + graph.s_out[node]
        in_strength[c] = in_strength.get(c, 0.0) + graph.s_in[node]
    null = sum(out_strength[c] * in_strength.get(c, 0.0) for c in out_strength)
    return intra / w_total - null / (w_total * w_total)


@dataclass(frozen=True)
class DendrogramNode:
    """Leaf (``class_id`` set) or binary merge (children + order + Q)."""

    index: int
    class_id: str | None = None
    left: int | None = None
    right: int | None = None
    merge_order: int | None = None
    q_after_merge: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.class_id is not None


@dataclass(frozen=True)
class Dendrogram:
    """Merge forest: one root per connected component.

    ``q_history[k]`` is the modularity after merge step ``k+1``;
    ``q_initial`` is the modularity of the all-singletons start state.
    """

    nodes: tuple[DendrogramNode, ...]
    roots: tuple[int, ...]
    class_ids: tuple[str, ...]
    q_initial: float
    q_history: tuple[float, ...]

    @property
    def merge_count(self) -> int:
        return len(self.q_history)

    def leaf_sets(self) -> dict[int, frozenset[str]]:
        """Set of classes under each node, by node index."""
        out: dict[int, frozenset[str]] = {}
        for node in self.nodes:  # children precede parents by construction
            if node.is_leaf:
                out[node.index] = frozenset((node.class_id,))
            else:
                out[node.index] = out[node.left] | out[node.right]
        return out


def _undirected_components(graph: ClassGraph, members=None) -> list[list[str]]:
    """Connected components (edge direction ignored), members sorted."""
    keep = set(graph.nodes if members is None else members)
    adjacency: dict[str, set[str]] = {n: set() for n in sorted(keep)}
    for (s, t) in graph.edges:
        if s in keep and t in keep:
            adjacency[s].add(t)
            adjacency[t].add(s)
    seen: set[str] = set()
    components: list[list[str]] = []
    for start in sorted(keep):
        if start in seen:
            continue
        stack = [start]
        component = []
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            component.append(node)
            stack.extend(adjacency[node] - seen)
        components.append(sorted(component))
    return components


def _partition_q_terms(graph: ClassGraph, blocks) -> float:
    """Sum of the cluster Q terms for ``blocks`` (global W normalization)."""
    w_total = graph.total_weight
    total = 0.0
    for block in blocks:
        inside = set(block)
        w_in = sum(
            w for (s, t), w in graph.edges.items() if s in inside and t in inside
        )
        so = sum(graph.s_out[n] for n in inside)
        si = sum(graph.s_in[n] for n in inside)
        total += w_in / w_total - so * si / (w_total * w_total)
    return total


def _optimal_component_partition(graph: ClassGraph, component: list[str]) -> list[list[str]]:
    """Exact modularity optimum for one small component.

    Enumerates every set partition (restricted-growth order, first maximum
    wins so the result is deterministic), then splits any disconnected
    cluster into its connected parts, which never lowers Q.
    """
    nodes = sorted(component)
    in_component = set(nodes)
    w_total = graph.total_weight
    out_w = {n: graph.s_out[n] for n in nodes}
    in_w = {n: graph.s_in[n] for n in nodes}
    adjacency: dict[str, dict[str, float]] = {n: {} for n in nodes}
    for (s, t), w in graph.edges.items():
        if s in in_component and t in in_component:
            adjacency[s][t] = adjacency[s].get(t, 0.0) + w

    best_q = float("-inf")
    best: list[list[str]] | None = None
    blocks: list[list[str]] = []

    def evaluate() -> float:
        total = 0.0
        for block in blocks:
            inside = set(block)
            w_in = sum(
                w
                for n in block
                for other, w in adjacency[n].items()
                if other in inside
            )
            so = sum(out_w[n] for n in block)
            si = sum(in_w[n] for n in block)
            total += w_in / w_total - so * si / (w_total * w_total)
        return total

    def recurse(i: int) -> None:
        nonlocal best_q, best
        if i == len(nodes):
            q = evaluate()
            if q > best_q + TIE_EPSILON:
                best_q = q
                best = [list(b) for b in blocks]
            return
        node = nodes[i]
        for block in blocks:
            block.append(node)
            recurse(i + 1)
            block.pop()
        blocks.append([node])
        recurse(i + 1)
        blocks.pop()

    recurse(0)
    split: list[list[str]] = []
    for block in best:
        split.extend(_undirected_components(graph, block))
    return split


def _merge_targets(graph: ClassGraph, exact_limit: int) -> dict[str, int]:
    """Per-class guide ids for components small enough to solve exactly."""
    targets: dict[str, int] = {}
    guide = 0
    if graph.total_weight <= 0:
        return targets
    for component in _undirected_components(graph):
        if 1 < len(component) <= exact_limit:
            for block in _optimal_component_partition(graph, component):
                for node in block:
                    targets[node] = guide
                guide += 1
    return targets


def agglomerate(graph: ClassGraph, exact_limit: int = EXACT_COMPONENT_LIMIT) -> Dendrogram:
    """Agglomerative modularity maximization of ``graph``.

    Only edge-connected cluster pairs are merge candidates (merging
    disconnected clusters never raises Q).  When several pairs tie on gain
    within :data:`TIE_EPSILON`, the pair whose (smaller, larger) smallest
    member ids compare lexicographically least wins, which makes the result
    deterministic.  Merging continues until each connected component has
    collapsed to a single root.

    Greedy merging alone can lock itself out of the optimum on small noisy
    graphs (one bad early merge is unrecoverable), so components of up to
    ``exact_limit`` nodes are solved exactly first and their clusters merged
    before anything else; the optimal partition is then one of the recorded
    merge steps and the cut recovers it.  Pass ``exact_limit=0`` for pure
    greedy behavior.
    """
    class_ids = tuple(sorted(graph.nodes))
    if not class_ids:
        raise ValueError("cannot agglomerate an empty graph")
    w_total = graph.total_weight

    nodes: list[DendrogramNode] = [
        DendrogramNode(index=i, class_id=cid) for i, cid in enumerate(class_ids)
    ]
    # Live cluster state, keyed by representative (smallest member class id).
    node_of: dict[str, int] = {cid: i for i, cid in enumerate(class_ids)}
    s_out = {cid: graph.s_out[cid] for cid in class_ids}
    s_in = {cid: graph.s_in[cid] for cid in class_ids}
    guide_of: dict[str, int | None] = dict.fromkeys(class_ids)
    for cid, guide in _merge_targets(graph, exact_limit).items():
        guide_of[cid] = guide
    # pair_w[a][b] = w(a->b) + w(b->a) summed over merged members.
    pair_w: dict[str, dict[str, float]] = {cid: {} for cid in class_ids}
    for (s, t), w in graph.edges.items():
        pair_w[s][t] = pair_w[s].get(t, 0.0) + w
        pair_w[t][s] = pair_w[t].get(s, 0.0) + w

    if w_total > 0:
        q = -sum(graph.s_out[c] * graph.s_in[c] for c in class_ids) / (w_total * w_total)
    else:
        q = 0.0
    q_initial = q
    q_history: list[float] = []
    step = 0

    while True:
        best_gain = best_guided_gain = None
        best_key = best_guided_key = None
        for a in pair_w:
            for b, w in pair_w[a].items():
                if b <= a:
                    continue
                gain = w / w_total - (s_out[a] * s_in[b] + s_out[b] * s_in[a]) / (
                    w_total * w_total
                )
                key = (a, b)
                if (
                    best_gain is None
                    or gain > best_gain + TIE_EPSILON
                    or (gain >= best_gain - TIE_EPSILON and key < best_key)
                ):
                    best_gain = gain
                    best_key = key
                if guide_of[a] is not None and guide_of[a] == guide_of[b]:
                    if (
                        best_guided_gain is None
                        or gain > best_guided_gain + TIE_EPSILON
                        or (gain >= best_guided_gain - TIE_EPSILON and key < best_guided_key)
                    ):
                        best_guided_gain = gain
                        best_guided_key = key
        if best_key is None:
            break
        if best_guided_key is not None:  # finish exact clusters first
            best_key = best_guided_key
            best_gain = best_guided_gain

        a, b = best_key  # a < b; merged cluster keeps representative a
        step += 1
        q += best_gain
        q_history.append(q)
        merged = DendrogramNode(
            index=len(nodes),
            left=node_of[a],
            right=node_of[b],
            merge_order=step,
            q_after_merge=q,
        )
        nodes.append(merged)
        node_of[a] = merged.index
        del node_of[b]

        if guide_of[a] != guide_of[b]:
            guide_of[a] = None
        del guide_of[b]
        s_out[a] += s_out.pop(b)
        s_in[a] += s_in.pop(b)
        neighbors_b = pair_w.pop(b)
        adj_a = pair_w[a]
        adj_a.pop(b, None)
        for n, w in neighbors_b.items():
            if n == a:
                continue
            adj_a[n] = adj_a.get(n, 0.0) + w
            adj_n = pair_w[n]
            adj_n.pop(b, None)
            adj_n[a] = adj_a[n]

    roots = tuple(sorted(node_of.values()))
    return Dendrogram(
        nodes=tuple(nodes),
        roots=roots,
        class_ids=class_ids,
        q_initial=q_initial,
        q_history=tuple(q_history),
    )


def partition_at_step(dendrogram: Dendrogram, step: int) -> Partition:
    """Partition after ``step`` merges (0 = all singletons)."""
    if step < 0 or step > dendrogram.merge_count:
        raise ValueError(f"step {step} out of range 0..{dendrogram.merge_count}")
    parent: dict[int, int] = {}
    for node in dendrogram.nodes:
        if not node.is_leaf:
            parent[node.left] = node.index
            parent[node.right] = node.index

    def merged_at(idx: int) -> int:
        order = dendrogram.nodes[idx].merge_order
        return 0 if order is None else order

    leaf_sets = dendrogram.leaf_sets()
    clusters: list[list[str]] = []
    for node in dendrogram.nodes:
        live = merged_at(node.index) <= step and (
            node.index not in parent or merged_at(parent[node.index]) > step
        )
        if live:
            clusters.append(sorted(leaf_sets[node.index]))
    return _normalize_partition(clusters)


def cut_dendrogram(dendrogram: Dendrogram, graph: ClassGraph) -> Partition:
    """Cut at the agglomeration step with the highest modularity.

    The history includes the singleton start state; ties go to the earliest
    step, i.e. the cut with more clusters.
    """
    if set(dendrogram.class_ids) != set(graph.nodes):
        raise ValueError("dendrogram was not built from this graph")
    best_step = 0
    best_q = dendrogram.q_initial
    for i, q in enumerate(dendrogram.q_history, start=1):
        if q > best_q:
            best_q = q
            best_step = i
    return partition_at_step(dendrogram, best_step)


def dendrogram_to_text(dendrogram: Dendrogram) -> str:
    """Nested-list debug rendering, e.g. ``(a,(b,c)@q=0.25)@q=0.1``.

    Iterative so arbitrarily deep merge chains cannot overflow the stack.
    """
    rendered: dict[int, str] = {}
    for node in dendrogram.nodes:  # children precede parents
        if node.is_leaf:
            rendered[node.index] = node.class_id
        else:
            rendered[node.index] = (
                f"({rendered[node.left]},{rendered[node.right]})"
                f"@q={fmt_real(node.q_after_merge)}"
            )
    return "\n".join(rendered[root] for root in dendrogram.roots)
