"""Feature tree construction from dendrogram cuts."""

import pytest

from sarfmap.clustering import Partition, agglomerate, cut_dendrogram, partition_at_step
from sarfmap.feature_tree import FeatureNode, FeatureTree, build_feature_tree
from sarfmap.graph_model import ClassEntity, class_graph

from generators import planted_partition_graph


def _graph(edge_weights):
    names = sorted({n for edge in edge_weights for n in edge})
    entities = [ClassEntity(id=n, display_name=n.upper()) for n in names]
    return class_graph(entities, edge_weights)


def _leaf_distance(tree: FeatureTree, a: int, b: int) -> int:
    """Path length between two cluster leaves."""

    def path(node: FeatureNode, cluster: int, acc):
        if node.is_leaf:
            return acc + [node] if node.cluster == cluster else None
        for child in node.children:
            found = path(child, cluster, acc + [node])
            if found:
                return found
        return None

    pa = path(tree.root, a, [])
    pb = path(tree.root, b, [])
    shared = 0
    for x, y in zip(pa, pb):
        if x is y:
            shared += 1
        else:
            break
    return (len(pa) - shared) + (len(pb) - shared)


def test_two_cluster_cut_gives_two_leaf_children():
    graph = _graph(
        {("a", "b"): 3.0, ("b", "a"): 3.0, ("c", "d"): 3.0, ("d", "c"): 3.0,
         ("a", "c"): 0.1}
    )
    dendrogram = agglomerate(graph)
    partition = cut_dendrogram(dendrogram, graph)
    assert partition.cluster_count == 2
    tree = build_feature_tree(dendrogram, partition)
    assert not tree.root.is_leaf
    assert len(tree.root.children) == 2
    assert all(child.is_leaf for child in tree.root.children)


def test_well_separated_merges_stay_binary():
    # Four clusters merged pairwise then together with well-separated Qs:
    # contraction must not fire, leaving a depth-2 binary tree.
    groups = {
        0: ["a1", "a2", "a3"],
        1: ["b1", "b2", "b3"],
        2: ["c1", "c2", "c3"],
        3: ["d1", "d2", "d3"],
    }
    edges = {}
    for members in groups.values():
        for s in members:
            for t in members:
                if s != t:
                    edges[(s, t)] = 4.0
    # pair (0,1) and (2,3) strongly, the two pairs weakly
    edges[("a1", "b1")] = 1.2
    edges[("b1", "a1")] = 1.2
    edges[("c1", "d1")] = 1.0
    edges[("d1", "c1")] = 1.0
    edges[("a2", "c2")] = 0.2
    graph = _graph(edges)
    dendrogram = agglomerate(graph)
    partition = cut_dendrogram(dendrogram, graph)
    assert partition.cluster_count == 4
    tree = build_feature_tree(dendrogram, partition)
    assert len(tree.root.children) == 2
    for child in tree.root.children:
        assert not child.is_leaf
        assert len(child.children) == 2
        assert all(leaf.is_leaf for leaf in child.children)


def test_contraction_produces_nary_branch():
    # With a huge epsilon every post-cut merge contracts into the root.
    graph, _ = planted_partition_graph(seed=5, clusters=4, size=5, p_in=0.7, p_out=0.02)
    dendrogram = agglomerate(graph)
    partition = cut_dendrogram(dendrogram, graph)
    assert partition.cluster_count == 4
    tree = build_feature_tree(dendrogram, partition, contraction_epsilon=10.0)
    assert len(tree.root.children) == 4
    assert all(child.is_leaf for child in tree.root.children)


def test_forest_gets_synthetic_root():
    graph = _graph({("a", "b"): 1.0, ("c", "d"): 1.0, ("e", "f"): 1.0})
    dendrogram = agglomerate(graph)
    assert len(dendrogram.roots) == 3
    partition = cut_dendrogram(dendrogram, graph)
    tree = build_feature_tree(dendrogram, partition)
    assert len(tree.root.children) >= 3 or tree.root.is_leaf is False


def test_leaf_count_matches_cluster_count_and_order_deterministic():
    graph, _ = planted_partition_graph(seed=9, clusters=5, size=6, p_in=0.6, p_out=0.02)
    dendrogram = agglomerate(graph)
    partition = cut_dendrogram(dendrogram, graph)
    tree1 = build_feature_tree(dendrogram, partition)
    tree2 = build_feature_tree(dendrogram, partition)
    assert tree1 == tree2
    assert tree1.leaf_count() == partition.cluster_count
    leaves = [leaf.cluster for leaf in tree1.leaves()]
    assert sorted(leaves) == list(range(partition.cluster_count))


def test_branches_have_at_least_two_children():
    graph, _ = planted_partition_graph(seed=6, clusters=5, size=6, p_in=0.6, p_out=0.02)
    dendrogram = agglomerate(graph)
    tree = build_feature_tree(dendrogram, cut_dendrogram(dendrogram, graph))

    def walk(node):
        if not node.is_leaf:
            assert len(node.children) >= 2
            for child in node.children:
                walk(child)

    walk(tree.root)


def test_debug_text_dump():
    from sarfmap.feature_tree import feature_tree_to_text

    graph, _ = planted_partition_graph(seed=6, clusters=3, size=5, p_in=0.6, p_out=0.02)
    dendrogram = agglomerate(graph)
    tree = build_feature_tree(dendrogram, cut_dendrogram(dendrogram, graph))
    text = feature_tree_to_text(tree)
    assert text.count("cluster") == tree.leaf_count()
    assert text.splitlines()[0].startswith(("branch", "cluster"))


def test_mismatched_partition_rejected():
    graph = _graph({("a", "b"): 1.0, ("b", "c"): 1.0, ("c", "a"): 1.0})
    dendrogram = agglomerate(graph)
    bogus = Partition(assignment={"a": 0, "b": 1, "c": 0})  # not a dendrogram cut
    with pytest.raises(ValueError):
        build_feature_tree(dendrogram, bogus)


def test_merge_order_monotonicity():
    # If clusters A,B merge before (A u B),C then tree distance(A,B) must
    # not exceed distance(A,C).
    graph, _ = planted_partition_graph(seed=2, clusters=6, size=5, p_in=0.65, p_out=0.015)
    dendrogram = agglomerate(graph)
    partition = cut_dendrogram(dendrogram, graph)
    tree = build_feature_tree(dendrogram, partition)

    cluster_of_set = {
        frozenset(members): idx for idx, members in enumerate(partition.clusters())
    }
    leaf_sets = dendrogram.leaf_sets()
    # Walk post-cut merges in order; each merge joining two live groups
    # asserts the distance ordering against everything joining later.
    merges = sorted(
        (n for n in dendrogram.nodes if not n.is_leaf),
        key=lambda n: n.merge_order,
    )
    for node in merges:
        left, right = leaf_sets[node.left], leaf_sets[node.right]
        a = cluster_of_set.get(frozenset(left))
        b = cluster_of_set.get(frozenset(right))
        if a is None or b is None:
            continue
        d_ab = _leaf_distance(tree, a, b)
        for other_set, c in cluster_of_set.items():
            if c in (a, b):
                continue
            if other_set <= (left | right):
                continue
            assert d_ab <= _leaf_distance(tree, a, c)
