"""Grid layout of one cluster's classes inside a city block.

Three steps: level decomposition (a topological leveling that tolerates
cycles), horizontal arrangement (each building pulled toward its cross-level
neighbors, weighted by squared dependency weight), and depth optimization
(the block depth minimizing a penalty that charges tied or reversed
dependencies and mildly charges long in-order ones).

Levels are indexed from the top: callers end up north of their callees, so
in a well-layered block dependencies point south.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph_model import ClassGraph

SWEEP_LIMIT = 100
SWEEP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Level:
    index: int
    members: tuple[str, ...]


@dataclass(frozen=True)
class LevelDecomposition:
    levels: tuple[Level, ...]
    cycle_moves: int  # how often the cycle-removal fallback fired


@dataclass(frozen=True)
class LayoutConfig:
    """Penalty constants for depth optimization."""

    tie_penalty_a: float = 2.0
    balance_b: float = 0.3
    target_aspect: float = 1.0

    def __post_init__(self):
        if self.tie_penalty_a <= 0 or self.balance_b <= 0:
            raise ValueError("penalty constants must be positive")


@dataclass(frozen=True)
class Placement:
    col: int
    row: int
    level: int


@dataclass(frozen=True)
class BlockLayout:
    cluster: int
    depth: int
    width: int
    placements: dict[str, Placement]
    penalty: float
    continuous: dict[str, float] = field(repr=False, default_factory=dict)

    @property
    def level_count(self) -> int:
        return 1 + max(p.level for p in self.placements.values())


def greedy_level_decomposition(subgraph: ClassGraph) -> LevelDecomposition:
    """Strip sources into upper levels and sinks into lower levels.

    When only cycles remain, the single node maximizing outs minus ins
    (ties: smallest id) is forced into the next upper level, after which
    stripping resumes.  Every node lands in exactly one level.
    """
    if not subgraph.nodes:
        raise ValueError("cannot decompose an empty subgraph")
    ins: dict[str, set[str]] = {n: set() for n in subgraph.nodes}
    outs: dict[str, set[str]] = {n: set() for n in subgraph.nodes}
    for (s, t) in subgraph.edges:
        outs[s].add(t)
        ins[t].add(s)

    remaining = sorted(subgraph.nodes)
    up_levels: list[list[str]] = []
    low_levels: list[list[str]] = []
    cycle_moves = 0

    while remaining:
        upper = [n for n in remaining if not ins[n]]
        upper_set = set(upper)
        lower = [n for n in remaining if n not in upper_set and not outs[n]]
        if not upper and not lower:
            forced = min(remaining, key=lambda n: (len(ins[n]) - len(outs[n]), n))
            upper = [forced]
            upper_set = {forced}
            cycle_moves += 1
        stripped = upper + lower
        stripped_set = set(stripped)
        for c in stripped:
            for n in outs[c]:
                ins[n].discard(c)
            for n in ins[c]:
                outs[n].discard(c)
        remaining = [n for n in remaining if n not in stripped_set]
        if upper:
            up_levels.append(upper)
        if lower:
            low_levels.insert(0, lower)

    levels = tuple(
        Level(index=i, members=tuple(sorted(members)))
        for i, members in enumerate(up_levels + low_levels)
    )
    return LevelDecomposition(levels=levels, cycle_moves=cycle_moves)


@dataclass(frozen=True)
class ArrangeResult:
    columns: dict[str, int]
    continuous: dict[str, float]


def _centered_columns(row: list[str], width: int) -> dict[str, int]:
    start = (width - len(row)) // 2
    return {b: start + i for i, b in enumerate(row)}


def _cross_level_neighbors(
    subgraph: ClassGraph, level_of: dict[str, int]
) -> dict[str, list[tuple[str, float]]]:
    # Both directions of the energy: predecessors and successors on other
    # levels, carrying squared weights.
    neighbors: dict[str, list[tuple[str, float]]] = {n: [] for n in subgraph.nodes}
    for (s, t), w in sorted(subgraph.edges.items()):
        if level_of[s] == level_of[t]:
            continue
        neighbors[s].append((t, w * w))
        neighbors[t].append((s, w * w))
    return neighbors


def continuous_minimizer(neighbor_columns: list[tuple[float, float]]) -> float | None:
    """Closed-form minimizer of sum (w * (x - nx))^2 over (nx, w) pairs:
    the w^2-weighted mean of neighbor columns.  None without neighbors."""
    num = 0.0
    den = 0.0
    for nx, w in neighbor_columns:
        num += w * w * nx
        den += w * w
    if den == 0.0:
        return None
    return num / den


def _weighted_mean(
    building: str,
    columns: dict[str, int],
    neighbors: dict[str, list[tuple[str, float]]],
) -> float | None:
    num = 0.0
    den = 0.0
    for other, w2 in neighbors[building]:
        num += w2 * columns[other]
        den += w2
    if den == 0.0:
        return None
    return num / den


def arrange_horizontal(
    levels: tuple[Level, ...],
    row_assignment: dict[str, int],
    width: int,
    subgraph: ClassGraph,
    order: list[str] | None = None,
) -> ArrangeResult:
    """Assign distinct integer columns per row, pulled toward neighbors.

    Each sweep recomputes, per building, the squared-weight mean of its
    cross-level neighbors' current columns, then re-discretizes every row by
    sorting on that continuous value (ties by class id).  Sweeps run top to
    bottom and back until columns stop changing.  Buildings without
    cross-level neighbors keep their centered initial column.
    """
    order = order if order is not None else sorted(row_assignment)
    row_count = 1 + max(row_assignment.values()) if row_assignment else 0
    rows: list[list[str]] = [[] for _ in range(row_count)]
    for b in order:
        rows[row_assignment[b]].append(b)
    if any(len(r) > width for r in rows):
        raise ValueError("width is smaller than the largest row")

    level_of = {b: lvl.index for lvl in levels for b in lvl.members}
    neighbors = _cross_level_neighbors(subgraph, level_of)

    columns: dict[str, int] = {}
    for row in rows:
        columns.update(_centered_columns(row, width))
    continuous: dict[str, float] = {b: float(c) for b, c in columns.items()}

    for _ in range(SWEEP_LIMIT):
        changed = False
        for row_iter in (rows, list(reversed(rows))):
            for row in row_iter:
                for b in row:
                    mean = _weighted_mean(b, columns, neighbors)
                    continuous[b] = mean if mean is not None else float(columns[b])
                row.sort(key=lambda b: (continuous[b], b))
                for b, col in _centered_columns(row, width).items():
                    if columns[b] != col:
                        columns[b] = col
                        changed = True
        if not changed:
            break

    # Final continuous values are the exact minimizers given final columns.
    for b in columns:
        mean = _weighted_mean(b, columns, neighbors)
        continuous[b] = mean if mean is not None else float(columns[b])
    return ArrangeResult(columns=columns, continuous=continuous)


def depth_penalty(
    rows: dict[str, int], subgraph: ClassGraph, config: LayoutConfig
) -> float:
    """Penalty of a row assignment: for each dependency i -> j, charge
    w * (|dy| + a) when i is level with or below j, else w * b * dy."""
    a = config.tie_penalty_a
    b = config.balance_b
    total = 0.0
    for (i, j), w in sorted(subgraph.edges.items()):
        yi, yj = rows[i], rows[j]
        if yi >= yj:
            total += w * (abs(yi - yj) + a)
        else:
            total += w * b * (yj - yi)
    return total


def _deal_rows(order: list[str], depth: int) -> dict[str, int]:
    # Capacities as equal as possible (difference <= 1), remainder first.
    n = len(order)
    base, extra = divmod(n, depth)
    rows: dict[str, int] = {}
    pos = 0
    for r in range(depth):
        cap = base + (1 if r < extra else 0)
        for b in order[pos : pos + cap]:
            rows[b] = r
        pos += cap
    return rows


def optimize_depth(
    levels: tuple[Level, ...],
    subgraph: ClassGraph,
    config: LayoutConfig = LayoutConfig(),
    cluster: int = 0,
) -> BlockLayout:
    """Search every candidate depth for the minimal-penalty block layout.

    Buildings are concatenated in (level, continuous-x) order and dealt
    into d rows, re-arranged horizontally, and scored; ties prefer the
    smaller depth.
    """
    level_of = {b: lvl.index for lvl in levels for b in lvl.members}
    n = len(level_of)
    if n == 0:
        raise ValueError("no buildings to lay out")

    # Seed ordering pass: one row per level.
    seed_rows = {b: lvl for b, lvl in level_of.items()}
    seed_width = max(len(lvl.members) for lvl in levels)
    seed = arrange_horizontal(levels, seed_rows, seed_width, subgraph)
    deal_order = sorted(level_of, key=lambda b: (level_of[b], seed.continuous[b], b))

    best: BlockLayout | None = None
    for depth in range(1, n + 1):
        capacity = math.ceil(n / depth)
        width = max(capacity, int(round(capacity * config.target_aspect)))
        rows = _deal_rows(deal_order, depth)
        arranged = arrange_horizontal(levels, rows, width, subgraph, order=deal_order)
        penalty = depth_penalty(rows, subgraph, config)
        if best is None or penalty < best.penalty:
            placements = {
                b: Placement(col=arranged.columns[b], row=rows[b], level=level_of[b])
                for b in sorted(level_of)
            }
            best = BlockLayout(
                cluster=cluster,
                depth=depth,
                width=width,
                placements=placements,
                penalty=penalty,
                continuous=dict(sorted(arranged.continuous.items())),
            )
    return best


def layout_block(subgraph: ClassGraph, config: LayoutConfig = LayoutConfig(), cluster: int = 0) -> BlockLayout:
    """Full block pipeline: decompose levels, then optimize the depth."""
    decomposition = greedy_level_decomposition(subgraph)
    return optimize_depth(decomposition.levels, subgraph, config, cluster=cluster)
