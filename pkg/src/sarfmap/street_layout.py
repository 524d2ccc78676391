"""Street layout: place all city blocks on the plane along the feature tree.

Each branch of the feature tree becomes a street; children hang off both
sides of their street, orthogonal to the parent street.  Children are
slotted greedily in tree order into the insertion point minimizing the
squared-weight squared-distance link energy (block centroids stand in for
buildings during the search).  Whole placement passes repeat while the full
per-building energy keeps strictly decreasing.

The resulting blank map is strictly two dimensional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .block_layout import BlockLayout
from .feature_tree import FeatureNode, FeatureTree
from .graph_model import ClassGraph

Point = tuple[float, float]
Rect = tuple[float, float, float, float]  # x0, y0, x1, y1


@dataclass(frozen=True)
class StreetConfig:
    street_width: float = 1.0
    separator_width: float = 0.5
    cell: float = 1.0
    max_passes: int = 50
    min_gain: float = 1e-9


@dataclass(frozen=True)
class Street:
    id: int
    kind: str  # "branch" | "separator"
    axis: str  # "horizontal" | "vertical"
    depth: int
    start: Point
    end: Point
    width: float
    parent: int | None = None

    def rect(self) -> Rect:
        half = self.width / 2.0
        (x0, y0), (x1, y1) = self.start, self.end
        if self.axis == "horizontal":
            return (min(x0, x1), y0 - half, max(x0, x1), y0 + half)
        return (x0 - half, min(y0, y1), x0 + half, max(y0, y1))


@dataclass(frozen=True)
class PlacedBlock:
    cluster: int
    origin: Point
    width: int
    depth: int
    street: int
    levels: int

    def rect(self, cell: float = 1.0) -> Rect:
        x, y = self.origin
        return (x, y, x + self.width * cell, y + self.depth * cell)


@dataclass(frozen=True)
class BuildingSite:
    class_id: str
    cluster: int
    col: int
    row: int
    level: int
    x: float
    y: float


@dataclass(frozen=True)
class SideGroup:
    """Ordered child tiles along one side of a street (for separators)."""

    street: int
    side: str  # "near" | "far"
    rects: tuple[Rect, ...]


@dataclass(frozen=True)
class CityMap:
    blocks: tuple[PlacedBlock, ...]
    buildings: tuple[BuildingSite, ...]
    streets: tuple[Street, ...]
    bounds: Rect
    cell_size: float = 1.0
    energy_history: tuple[float, ...] = ()
    side_groups: tuple[SideGroup, ...] = ()
    links: tuple = ()  # LinkGeometry, filled by annotate
    keywords: tuple = ()  # KeywordLabel, filled by annotate
    overlays: object = None  # OverlayData, filled by annotate

    def building_by_class(self) -> dict[str, BuildingSite]:
        return {b.class_id: b for b in self.buildings}

    def block_by_cluster(self) -> dict[int, PlacedBlock]:
        return {b.cluster: b for b in self.blocks}


def edge_energy(weight: float, p_i: Point, p_j: Point) -> float:
    """Energy of one dependency link: w^2 * squared distance."""
    dx = p_i[0] - p_j[0]
    dy = p_i[1] - p_j[1]
    return weight * weight * (dx * dx + dy * dy)


def total_link_energy(city: CityMap, graph: ClassGraph) -> float:
    """Full per-building link energy of a placed map."""
    pos = {b.class_id: (b.x, b.y) for b in city.buildings}
    return sum(
        edge_energy(w, pos[s], pos[t]) for (s, t), w in sorted(graph.edges.items())
    )


@dataclass
class _Node:
    id: int
    depth: int
    cluster: int | None
    children: list["_Node"] = field(default_factory=list)
    blocks: tuple[int, ...] = ()  # clusters in this subtree

    @property
    def is_leaf(self) -> bool:
        return self.cluster is not None

    @property
    def horizontal(self) -> bool:
        return self.depth % 2 == 0


def _build_nodes(tree: FeatureTree) -> _Node:
    counter = [0]

    def build(fnode: FeatureNode, depth: int) -> _Node:
        node = _Node(id=counter[0], depth=depth, cluster=fnode.cluster)
        counter[0] += 1
        for child in fnode.children:
            node.children.append(build(child, depth + 1))
        if node.is_leaf:
            node.blocks = (node.cluster,)
        else:
            node.blocks = tuple(b for c in node.children for b in c.blocks)
        return node

    root = build(tree.root, 0)
    if root.is_leaf:  # degenerate single-feature map still gets its street
        wrapper = _Node(id=counter[0], depth=0, cluster=None)
        root.depth = 1
        wrapper.children.append(root)
        wrapper.blocks = root.blocks
        return wrapper
    return root


_Assignment = dict[int, tuple[list["_Node"], list["_Node"]]]


class _Layout:
    """One placement pass over a fixed node tree."""

    def __init__(
        self,
        root: _Node,
        block_sizes: dict[int, tuple[float, float]],
        agg: dict[tuple[int, int], float],
        config: StreetConfig,
    ):
        self.root = root
        self.block_sizes = block_sizes
        self.agg = agg
        self.cfg = config

    # --- tile geometry -------------------------------------------------

    def _tile_size(self, node: _Node, assignment: _Assignment) -> tuple[float, float]:
        if node.is_leaf:
            return self.block_sizes[node.cluster]
        near, far = assignment[node.id]
        sizes_near = [self._tile_size(c, assignment) for c in near]
        sizes_far = [self._tile_size(c, assignment) for c in far]
        sep = self.cfg.separator_width
        sw = self.cfg.street_width

        def packed(sizes: list[tuple[float, float]], along: int) -> float:
            if not sizes:
                return 0.0
            return sum(s[along] for s in sizes) + sep * (len(sizes) - 1)

        if node.horizontal:
            length = max(packed(sizes_near, 0), packed(sizes_far, 0), sw)
            near_h = max((s[1] for s in sizes_near), default=0.0)
            far_h = max((s[1] for s in sizes_far), default=0.0)
            return (length, near_h + sw + far_h)
        length = max(packed(sizes_near, 1), packed(sizes_far, 1), sw)
        near_w = max((s[0] for s in sizes_near), default=0.0)
        far_w = max((s[0] for s in sizes_far), default=0.0)
        return (near_w + sw + far_w, length)

    def _child_origins(
        self, node: _Node, assignment: _Assignment, origin: Point
    ) -> list[tuple[_Node, Point, tuple[float, float]]]:
        """Origins and sizes of placed children; street flush on both sides."""
        near, far = assignment[node.id]
        sizes = {c.id: self._tile_size(c, assignment) for c in near + far}
        sep = self.cfg.separator_width
        sw = self.cfg.street_width
        x0, y0 = origin
        out: list[tuple[_Node, Point, tuple[float, float]]] = []
        if node.horizontal:
            near_h = max((sizes[c.id][1] for c in near), default=0.0)
            cursor = x0
            for c in near:
                w, h = sizes[c.id]
                out.append((c, (cursor, y0 + near_h - h), (w, h)))
                cursor += w + sep
            cursor = x0
            for c in far:
                w, h = sizes[c.id]
                out.append((c, (cursor, y0 + near_h + sw), (w, h)))
                cursor += w + sep
        else:
            near_w = max((sizes[c.id][0] for c in near), default=0.0)
            cursor = y0
            for c in near:
                w, h = sizes[c.id]
                out.append((c, (x0 + near_w - w, cursor), (w, h)))
                cursor += h + sep
            cursor = y0
            for c in far:
                w, h = sizes[c.id]
                out.append((c, (x0 + near_w + sw, cursor), (w, h)))
                cursor += h + sep
        return out

    def _centroids(
        self, node: _Node, assignment: _Assignment, origin: Point, out: dict[int, Point]
    ) -> None:
        if node.is_leaf:
            w, h = self.block_sizes[node.cluster]
            out[node.cluster] = (origin[0] + w / 2.0, origin[1] + h / 2.0)
            return
        for child, child_origin, _size in self._child_origins(node, assignment, origin):
            self._centroids(child, assignment, child_origin, out)

    # --- greedy slot assignment ----------------------------------------

    def assign(self, warm: "_Warm | None") -> _Assignment:
        assignment: _Assignment = {}

        def visit(node: _Node) -> None:
            for child in node.children:
                if not child.is_leaf:
                    visit(child)
            assignment[node.id] = ([], [])
            near, far = assignment[node.id]
            subtree = set(node.blocks)
            external: list[tuple[int, Point]] = []
            node_origin: Point | None = None
            if warm is not None:
                node_origin = warm.node_origins.get(node.id)
                if node_origin is not None:
                    external = [
                        (b, p) for b, p in warm.block_centroids.items() if b not in subtree
                    ]
            for child in node.children:
                best_e: float | None = None
                best_slot: tuple[int, int] | None = None
                for side_idx, side in enumerate((near, far)):
                    for pos in range(len(side) + 1):
                        side.insert(pos, child)
                        e = self._slot_energy(node, assignment, external, node_origin)
                        side.pop(pos)
                        if best_e is None or e < best_e - 1e-12:
                            best_e = e
                            best_slot = (side_idx, pos)
                side_idx, pos = best_slot
                (near if side_idx == 0 else far).insert(pos, child)

        visit(self.root)
        return assignment

    def _slot_energy(
        self,
        node: _Node,
        assignment: _Assignment,
        external: list[tuple[int, Point]],
        node_origin: Point | None,
    ) -> float:
        local: dict[int, Point] = {}
        self._centroids(node, assignment, (0.0, 0.0), local)
        blocks = sorted(local)
        total = 0.0
        for i, a in enumerate(blocks):
            pa = local[a]
            for b in blocks[i + 1 :]:
                w2 = self.agg.get((a, b))
                if w2 is not None:
                    pb = local[b]
                    dx = pa[0] - pb[0]
                    dy = pa[1] - pb[1]
                    total += w2 * (dx * dx + dy * dy)
        if node_origin is not None:
            ox, oy = node_origin
            for a in blocks:
                ax, ay = local[a][0] + ox, local[a][1] + oy
                for b, (bx, by) in external:
                    w2 = self.agg.get((min(a, b), max(a, b)))
                    if w2 is not None:
                        dx = ax - bx
                        dy = ay - by
                        total += w2 * (dx * dx + dy * dy)
        return total

    # --- realization ----------------------------------------------------

    def realize(self, assignment: _Assignment) -> "_Geometry":
        geo = _Geometry()

        def visit(node: _Node, origin: Point, parent_street: int | None) -> None:
            if node.is_leaf:
                geo.block_origins[node.cluster] = origin
                geo.block_streets[node.cluster] = parent_street
                return
            w, h = self._tile_size(node, assignment)
            near, far = assignment[node.id]
            sw = self.cfg.street_width
            x0, y0 = origin
            street_id = len(geo.streets)
            if node.horizontal:
                near_h = max(
                    (self._tile_size(c, assignment)[1] for c in near), default=0.0
                )
                mid = y0 + near_h + sw / 2.0
                street = Street(
                    id=street_id,
                    kind="branch",
                    axis="horizontal",
                    depth=node.depth,
                    start=(x0, mid),
                    end=(x0 + w, mid),
                    width=sw,
                    parent=parent_street,
                )
            else:
                near_w = max(
                    (self._tile_size(c, assignment)[0] for c in near), default=0.0
                )
                mid = x0 + near_w + sw / 2.0
                street = Street(
                    id=street_id,
                    kind="branch",
                    axis="vertical",
                    depth=node.depth,
                    start=(mid, y0),
                    end=(mid, y0 + h),
                    width=sw,
                    parent=parent_street,
                )
            geo.streets.append(street)
            geo.node_origins[node.id] = origin
            placed = self._child_origins(node, assignment, origin)
            by_child = {c.id: (o, s) for c, o, s in placed}
            for side_name, side in (("near", near), ("far", far)):
                rects = []
                for c in side:
                    (cx, cy), (cw, ch) = by_child[c.id]
                    rects.append((cx, cy, cx + cw, cy + ch))
                geo.side_groups.append(
                    SideGroup(street=street_id, side=side_name, rects=tuple(rects))
                )
            for child, child_origin, _size in placed:
                visit(child, child_origin, street_id)

        visit(self.root, (0.0, 0.0), None)
        size = self._tile_size(self.root, assignment)
        geo.bounds = (0.0, 0.0, size[0], size[1])
        return geo


@dataclass
class _Geometry:
    block_origins: dict[int, Point] = field(default_factory=dict)
    block_streets: dict[int, int | None] = field(default_factory=dict)
    streets: list[Street] = field(default_factory=list)
    side_groups: list[SideGroup] = field(default_factory=list)
    node_origins: dict[int, Point] = field(default_factory=dict)
    bounds: Rect = (0.0, 0.0, 0.0, 0.0)


@dataclass
class _Warm:
    node_origins: dict[int, Point]
    block_centroids: dict[int, Point]


def layout_streets(
    tree: FeatureTree,
    blocks: dict[int, BlockLayout],
    graph: ClassGraph,
    config: StreetConfig = StreetConfig(),
) -> CityMap:
    """Place every block along the street hierarchy of ``tree``.

    Runs up to ``config.max_passes`` placement passes, keeping a pass only
    when it strictly lowers the full link energy; the recorded energy
    history is therefore strictly decreasing.
    """
    leaf_clusters = sorted(leaf.cluster for leaf in tree.leaves())
    if leaf_clusters != sorted(blocks):
        raise ValueError("feature tree leaves do not match the provided blocks")

    cell = config.cell
    block_sizes = {
        c: (b.width * cell, b.depth * cell) for c, b in sorted(blocks.items())
    }
    cluster_of: dict[str, int] = {}
    for c, b in sorted(blocks.items()):
        for class_id in b.placements:
            cluster_of[class_id] = c
    agg: dict[tuple[int, int], float] = {}
    for (s, t), w in sorted(graph.edges.items()):
        ca, cb = cluster_of[s], cluster_of[t]
        if ca == cb:
            continue
        key = (min(ca, cb), max(ca, cb))
        agg[key] = agg.get(key, 0.0) + w * w

    root = _build_nodes(tree)
    layout = _Layout(root, block_sizes, agg, config)

    best_geo: _Geometry | None = None
    best_energy = math.inf
    history: list[float] = []
    warm: _Warm | None = None
    for _ in range(config.max_passes):
        assignment = layout.assign(warm)
        geo = layout.realize(assignment)
        city = _build_city(geo, blocks, config, energy_history=())
        energy = total_link_energy(city, graph)
        if energy < best_energy - config.min_gain:
            best_geo = geo
            best_energy = energy
            history.append(energy)
            centroids: dict[int, Point] = {}
            for c, origin in geo.block_origins.items():
                w, h = block_sizes[c]
                centroids[c] = (origin[0] + w / 2.0, origin[1] + h / 2.0)
            warm = _Warm(node_origins=dict(geo.node_origins), block_centroids=centroids)
        else:
            break

    return _build_city(best_geo, blocks, config, energy_history=tuple(history))


def _build_city(
    geo: _Geometry,
    blocks: dict[int, BlockLayout],
    config: StreetConfig,
    energy_history: tuple[float, ...],
) -> CityMap:
    cell = config.cell
    placed_blocks = []
    buildings = []
    for cluster in sorted(blocks):
        layout = blocks[cluster]
        origin = geo.block_origins[cluster]
        placed_blocks.append(
            PlacedBlock(
                cluster=cluster,
                origin=origin,
                width=layout.width,
                depth=layout.depth,
                street=geo.block_streets[cluster],
                levels=layout.level_count,
            )
        )
        for class_id in sorted(layout.placements):
            p = layout.placements[class_id]
            buildings.append(
                BuildingSite(
                    class_id=class_id,
                    cluster=cluster,
                    col=p.col,
                    row=p.row,
                    level=p.level,
                    x=origin[0] + (p.col + 0.5) * cell,
                    y=origin[1] + (p.row + 0.5) * cell,
                )
            )
    buildings.sort(key=lambda b: b.class_id)
    return CityMap(
        blocks=tuple(placed_blocks),
        buildings=tuple(buildings),
        streets=tuple(geo.streets),
        bounds=geo.bounds,
        cell_size=cell,
        energy_history=energy_history,
        side_groups=tuple(geo.side_groups),
    )


def place_separators(city: CityMap, config: StreetConfig = StreetConfig()) -> CityMap:
    """Insert a separator street between adjacent tiles on each street side.

    Idempotent: existing separators are rebuilt rather than duplicated.
    """
    branch_streets = tuple(s for s in city.streets if s.kind != "separator")
    streets_by_id = {s.id: s for s in branch_streets}
    separators: list[Street] = []
    next_id = max(streets_by_id, default=-1) + 1
    for group in city.side_groups:
        street = streets_by_id[group.street]
        for a, b in zip(group.rects, group.rects[1:]):
            if street.axis == "horizontal":
                x_mid = (a[2] + b[0]) / 2.0
                run = min(a[3] - a[1], b[3] - b[1])
                if group.side == "near":  # tiles north of street, flush at bottom
                    y1 = a[3]
                    seg = ((x_mid, y1 - run), (x_mid, y1))
                else:
                    y0 = a[1]
                    seg = ((x_mid, y0), (x_mid, y0 + run))
                axis = "vertical"
            else:
                y_mid = (a[3] + b[1]) / 2.0
                run = min(a[2] - a[0], b[2] - b[0])
                if group.side == "near":  # tiles west of street, flush at right
                    x1 = a[2]
                    seg = ((x1 - run, y_mid), (x1, y_mid))
                else:
                    x0 = a[0]
                    seg = ((x0, y_mid), (x0 + run, y_mid))
                axis = "horizontal"
            separators.append(
                Street(
                    id=next_id,
                    kind="separator",
                    axis=axis,
                    depth=street.depth + 1,
                    start=seg[0],
                    end=seg[1],
                    width=config.separator_width,
                    parent=street.id,
                )
            )
            next_id += 1
    return replace(city, streets=branch_streets + tuple(separators))
