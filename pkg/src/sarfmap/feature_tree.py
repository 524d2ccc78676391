"""Abstract n-ary feature tree driving the street layout.

The binary dendrogram structure above the chosen cut is kept, then branches
whose merge modularities are nearly equal are contracted into their parent,
expanding binary chains into n-ary branches (features that separated almost
simultaneously end up as siblings).
"""

from __future__ import annotations

from dataclasses import dataclass

from .clustering import Dendrogram, Partition

# A branch is folded into its parent when the Q gap between their merges is
# below this fraction of the peak Q.
DEFAULT_CONTRACTION_EPSILON = 0.01


@dataclass(frozen=True)
class FeatureNode:
    """Leaf (``cluster`` set) or branch with ordered children."""

    children: tuple["FeatureNode", ...] = ()
    cluster: int | None = None
    merge_q: float | None = None
    size: int = 0
    min_class: str = ""

    @property
    def is_leaf(self) -> bool:
        return self.cluster is not None


@dataclass(frozen=True)
class FeatureTree:
    root: FeatureNode

    def leaves(self) -> list[FeatureNode]:
        out: list[FeatureNode] = []

        def walk(node: FeatureNode) -> None:
            if node.is_leaf:
                out.append(node)
            for child in node.children:
                walk(child)

        walk(self.root)
        return out

    def leaf_count(self) -> int:
        return len(self.leaves())


def _ordered(children: list[FeatureNode]) -> tuple[FeatureNode, ...]:
    # Larger subtrees first; ties by smallest class id.
    return tuple(sorted(children, key=lambda n: (-n.size, n.min_class)))


def feature_tree_to_text(tree: FeatureTree) -> str:
    """Indented debug dump of the tree structure."""
    lines: list[str] = []

    def walk(node: FeatureNode, indent: int) -> None:
        pad = "  " * indent
        if node.is_leaf:
            lines.append(f"{pad}cluster {node.cluster} ({node.size} classes)")
        else:
            q = f" q={node.merge_q:.6f}" if node.merge_q is not None else ""
            lines.append(f"{pad}branch ({node.size} classes){q}")
            for child in node.children:
                walk(child, indent + 1)

    walk(tree.root, 0)
    return "\n".join(lines)


def build_feature_tree(
    dendrogram: Dendrogram,
    partition: Partition,
    contraction_epsilon: float = DEFAULT_CONTRACTION_EPSILON,
) -> FeatureTree:
    """Convert a dendrogram plus cut partition into the feature tree.

    Raises ``ValueError`` when the partition is not a cut of the dendrogram
    (every cluster must be the leaf set of some dendrogram node).
    """
    leaf_sets = dendrogram.leaf_sets()
    cluster_members = partition.clusters()
    cluster_of_set = {frozenset(members): idx for idx, members in enumerate(cluster_members)}
    if len(cluster_of_set) != len(cluster_members):
        raise ValueError("partition contains duplicate clusters")
    known_sets = set(leaf_sets.values())
    for members in cluster_of_set:
        if members not in known_sets:
            raise ValueError("partition is not a cut of this dendrogram")

    q_peak = max((dendrogram.q_initial, *dendrogram.q_history))
    threshold = contraction_epsilon * abs(q_peak)

    def build(index: int) -> FeatureNode:
        members = leaf_sets[index]
        cluster = cluster_of_set.get(members)
        if cluster is not None:
            return FeatureNode(
                cluster=cluster, size=len(members), min_class=min(members)
            )
        node = dendrogram.nodes[index]
        if node.is_leaf:
            raise ValueError("partition is not a cut of this dendrogram")
        children: list[FeatureNode] = []
        for child in (build(node.left), build(node.right)):
            gap = (
                abs(node.q_after_merge - child.merge_q)
                if child.merge_q is not None and not child.is_leaf
                else None
            )
            if gap is not None and gap < threshold:
                children.extend(child.children)  # contract near-simultaneous split
            else:
                children.append(child)
        return FeatureNode(
            children=_ordered(children),
            merge_q=node.q_after_merge,
            size=len(members),
            min_class=min(members),
        )

    subtrees = [build(root) for root in dendrogram.roots]
    if len(subtrees) == 1:
        root = subtrees[0]
    else:
        root = FeatureNode(
            children=_ordered(subtrees),
            size=sum(t.size for t in subtrees),
            min_class=min(t.min_class for t in subtrees),
        )
    return FeatureTree(root=root)
