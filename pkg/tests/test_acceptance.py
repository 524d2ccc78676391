"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.  Tolerances and thresholds are fixed here and must not
be loosened.
"""

import random
import time

import pytest
from sklearn.metrics import normalized_mutual_info_score

from sarfmap.block_layout import (
    LayoutConfig,
    arrange_horizontal,
    continuous_minimizer,
    depth_penalty,
    greedy_level_decomposition,
    layout_block,
)
from sarfmap.clustering import Partition, agglomerate, cut_dendrogram, modularity
from sarfmap.graph_model import ClassEntity, class_graph
from sarfmap.pipeline import run_pipeline
from sarfmap.street_layout import StreetConfig

from generators import (
    layered_system_text,
    planted_partition_text,
    random_class_graph,
    random_cyclic_graph,
    random_dag,
)
from oracles import brute_modularity, exhaustive_best_q


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[ACCEPTANCE] {name}: {status}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# --- shared expensive fixtures ---------------------------------------------

@pytest.fixture(scope="module")
def swing_runs():
    """Two runs of the 536-class, 16-package synthetic fixture, timed."""
    text = layered_system_text(classes=536, packages=16)
    t0 = time.perf_counter()
    first = run_pipeline(text)
    t_first = time.perf_counter() - t0
    t0 = time.perf_counter()
    second = run_pipeline(text)
    t_second = time.perf_counter() - t0
    return first, second, max(t_first, t_second)


@pytest.fixture(scope="module")
def planted_runs():
    """Full pipeline over 20 planted-partition seeds."""
    runs = []
    for seed in range(20):
        text, labels = planted_partition_text(seed)
        runs.append((run_pipeline(text), labels))
    return runs


def test_criterion_modularity_correctness():
    rng = random.Random(12061)
    worst = 0.0
    for i in range(200):
        n = 2 + i % 7  # sizes 2..8
        graph = random_class_graph(rng, n, density=0.15 + 0.05 * (i % 5))
        assignment = {node: rng.randint(0, 3) for node in sorted(graph.nodes)}
        q = modularity(graph, Partition(assignment=assignment))
        q_ref = brute_modularity(graph, assignment)
        worst = max(worst, abs(q - q_ref))
        single = modularity(graph, Partition(assignment=dict.fromkeys(graph.nodes, 0)))
        worst = max(worst, abs(single))
    _report("modularity-correctness", worst < 1e-9, f"max |diff| = {worst:.2e}")


def test_criterion_greedy_near_optimality():
    rng = random.Random(40320)
    t0 = time.perf_counter()
    worst_ratio = float("inf")
    for i in range(50):
        n = 3 + i % 6  # sizes 3..8
        graph = random_class_graph(rng, n, density=0.15 + 0.06 * (i % 5))
        partition = cut_dendrogram(agglomerate(graph), graph)
        achieved = modularity(graph, partition)
        best = exhaustive_best_q(graph)
        if best > 1e-12:
            worst_ratio = min(worst_ratio, achieved / best)
        else:
            worst_ratio = min(worst_ratio, 1.0 if achieved >= -1e-9 else 0.0)
    elapsed = time.perf_counter() - t0
    _report(
        "greedy-near-optimality",
        worst_ratio >= 0.9 and elapsed < 10.0,
        f"worst ratio = {worst_ratio:.3f}, elapsed = {elapsed:.1f}s",
    )


def test_criterion_feature_recovery(planted_runs):
    nmis = []
    intra_shares = []
    for result, labels in planted_runs:
        doc = result.document
        block_of = {b["class"]: b["cluster"] for b in doc["blank"]["buildings"]}
        names = sorted(block_of)
        nmis.append(
            normalized_mutual_info_score(
                [labels[n] for n in names], [block_of[n] for n in names]
            )
        )
        links = doc["annotations"]["links"]
        total = sum(l["weight"] for l in links)
        intra = sum(l["weight"] for l in links if block_of[l["source"]] == block_of[l["target"]])
        intra_shares.append(intra / total)
    mean_nmi = sum(nmis) / len(nmis)
    min_intra = min(intra_shares)
    _report(
        "feature-recovery",
        mean_nmi >= 0.9 and min_intra >= 0.7,
        f"mean NMI = {mean_nmi:.3f}, min intra-block weight share = {min_intra:.3f}",
    )


def test_criterion_level_decomposition():
    rng = random.Random(271828)
    ok = True
    detail = ""
    for _ in range(100):
        graph = random_dag(rng, rng.randint(2, 50))
        decomposition = greedy_level_decomposition(graph)
        level_of = {m: l.index for l in decomposition.levels for m in l.members}
        if decomposition.cycle_moves != 0:
            ok, detail = False, "cycle removal fired on a DAG"
            break
        if sorted(level_of) != sorted(graph.nodes):
            ok, detail = False, "levels are not a partition"
            break
        if any(level_of[s] >= level_of[t] for (s, t) in graph.edges):
            ok, detail = False, "non-strict level ordering on a DAG edge"
            break
    if ok:
        for _ in range(100):
            graph = random_cyclic_graph(rng, rng.randint(3, 50))
            decomposition = greedy_level_decomposition(graph)
            members = [m for l in decomposition.levels for m in l.members]
            if sorted(members) != sorted(graph.nodes) or len(members) != len(set(members)):
                ok, detail = False, "cyclic graph not totally partitioned"
                break

    def entities(names):
        return [ClassEntity(id=n, display_name=n) for n in names]

    chain = class_graph(entities("abc"), {("a", "b"): 1.0, ("b", "c"): 1.0})
    two_cycle = class_graph(entities("ab"), {("a", "b"): 1.0, ("b", "a"): 1.0})
    lone = class_graph(entities("a"), {})
    traces = [
        ([{"a"}, {"b"}, {"c"}], greedy_level_decomposition(chain)),
        ([{"a"}, {"b"}], greedy_level_decomposition(two_cycle)),
        ([{"a"}], greedy_level_decomposition(lone)),
    ]
    for expected, decomposition in traces:
        got = [set(level.members) for level in decomposition.levels]
        if got != expected:
            ok, detail = False, f"hand trace mismatch: {got} != {expected}"
    _report("level-decomposition", ok, detail or "300 graphs + 3 hand traces")


def test_criterion_arrangement_optimality():
    config = LayoutConfig()

    # exact plug-in penalty values (a=2, b=0.3)
    plug = class_graph(
        [ClassEntity(id="i", display_name="I"), ClassEntity(id="j", display_name="J")],
        {("i", "j"): 1.0},
    )
    values = (
        depth_penalty({"i": 0, "j": 1}, plug, config),
        depth_penalty({"i": 0, "j": 0}, plug, config),
        depth_penalty({"i": 1, "j": 0}, plug, config),
    )
    ok = values == (pytest.approx(0.3), pytest.approx(2.0), pytest.approx(3.0))

    rng = random.Random(6174)
    worst_gap = 0.0
    for _ in range(12):
        graph = random_cyclic_graph(rng, rng.randint(3, 12), density=0.3)
        layout = layout_block(graph)
        level_of = {b: p.level for b, p in layout.placements.items()}
        columns = {b: p.col for b, p in layout.placements.items()}
        # continuous x equals the closed-form weighted mean of neighbor columns
        for b in sorted(layout.placements):
            pairs = []
            for (s, t), w in graph.edges.items():
                if s == b and level_of[t] != level_of[b]:
                    pairs.append((float(columns[t]), w))
                elif t == b and level_of[s] != level_of[b]:
                    pairs.append((float(columns[s]), w))
            expected = continuous_minimizer(pairs)
            got = layout.continuous[b]
            gap = abs(got - expected) if expected is not None else abs(got - columns[b])
            worst_gap = max(worst_gap, gap)
        # the returned depth is exhaustively optimal
        decomposition = greedy_level_decomposition(graph)
        for depth in range(1, len(graph.nodes) + 1):
            alt = _independent_deal(decomposition, graph, depth)
            if layout.penalty > depth_penalty(alt, graph, config) + 1e-9:
                ok = False
    _report(
        "eq1-eq2-optimality",
        ok and worst_gap < 1e-9,
        f"plug-ins exact, max closed-form gap = {worst_gap:.2e}",
    )


def _independent_deal(decomposition, graph, depth):
    level_of = {m: l.index for l in decomposition.levels for m in l.members}
    seed_width = max(len(l.members) for l in decomposition.levels)
    seed = arrange_horizontal(decomposition.levels, dict(level_of), seed_width, graph)
    order = sorted(level_of, key=lambda b: (level_of[b], seed.continuous[b], b))
    base, extra = divmod(len(order), depth)
    rows = {}
    pos = 0
    for r in range(depth):
        cap = base + (1 if r < extra else 0)
        for b in order[pos : pos + cap]:
            rows[b] = r
        pos += cap
    return rows


def _check_geometry(city) -> str | None:
    cells = set()
    for b in city.buildings:
        key = (b.cluster, b.col, b.row)
        if key in cells:
            return f"grid collision at {key}"
        cells.add(key)
    half = StreetConfig().separator_width / 2
    rects = [
        (r[0] - half, r[1] - half, r[2] + half, r[3] + half)
        for r in (b.rect() for b in city.blocks)
    ]
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            a, b = rects[i], rects[j]
            if not (a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1]):
                return f"inflated blocks {i} and {j} overlap"
    history = city.energy_history
    if any(b >= a for a, b in zip(history, history[1:])):
        return "energy history not decreasing"
    for street in city.streets:
        if len(street.start) != 2 or len(street.end) != 2:
            return "street with non-planar geometry"
    for block in city.blocks:
        if len(block.origin) != 2:
            return "block with non-planar origin"
    return None


def test_criterion_geometry_invariants(swing_runs, planted_runs):
    cities = [swing_runs[0].city]
    for result, _labels in planted_runs[:3]:
        cities.append(result.city)
    small = run_pipeline("class a A p\nclass b B p\nmember a.m a method\n"
                         "member b.m b method\ndep a.m b.m call\n")
    cities.append(small.city)

    problem = None
    for city in cities:
        problem = _check_geometry(city)
        if problem:
            break
    # blank-map documents carry no elevation anywhere
    if problem is None:
        for result in [swing_runs[0], small] + [r for r, _ in planted_runs[:3]]:
            if _tree_has_key(result.document["blank"], ("z", "elevation")):
                problem = "blank map carries elevation data"
                break
    _report("geometry-invariants", problem is None, problem or f"{len(cities)} maps checked")


def _tree_has_key(tree, names) -> bool:
    if isinstance(tree, dict):
        return any(k in names for k in tree) or any(_tree_has_key(v, names) for v in tree.values())
    if isinstance(tree, list):
        return any(_tree_has_key(v, names) for v in tree)
    return False


def test_criterion_determinism(swing_runs):
    first, second, slowest = swing_runs
    ok = (
        first.document_bytes == second.document_bytes
        and first.svg == second.svg
        and slowest < 60.0
    )
    detail = (
        f"{len(first.document['blank']['buildings'])} classes, "
        f"map {len(first.document_bytes)} bytes, slowest run {slowest:.1f}s"
    )
    _report("determinism", ok, detail)


def test_criterion_pattern_classifier():
    from sarfmap.annotate import classify_block_pattern
    from sarfmap.street_layout import BuildingSite, CityMap, PlacedBlock, Street

    def grid_city(cells):
        width = 1 + max(c for c, _r, _l in cells.values())
        depth = 1 + max(r for _c, r, _l in cells.values())
        levels = 1 + max(l for _c, _r, l in cells.values())
        buildings = tuple(
            BuildingSite(class_id=cid, cluster=0, col=c, row=r, level=l,
                         x=c + 0.5, y=r + 0.5)
            for cid, (c, r, l) in sorted(cells.items())
        )
        block = PlacedBlock(cluster=0, origin=(0.0, 0.0), width=width, depth=depth,
                            street=0, levels=levels)
        street = Street(id=0, kind="branch", axis="horizontal", depth=0,
                        start=(0.0, depth + 0.5), end=(float(width), depth + 0.5), width=1.0)
        return CityMap(blocks=(block,), buildings=buildings, streets=(street,),
                       bounds=(0.0, 0.0, float(width), depth + 1.0))

    outcomes = []

    cells = {f"s{i}": (i % 3, i // 3, i // 3) for i in range(9)}
    outcomes.append(
        classify_block_pattern(grid_city(cells), 0, dict.fromkeys(cells, "core")).pattern
        == "single_color"
    )

    cells, packages = {}, {}
    for level in range(3):
        for k in range(3):
            cid = f"l{level}{k}"
            cells[cid] = (k, level, level)
            packages[cid] = f"layer{level}"
    outcomes.append(
        classify_block_pattern(grid_city(cells), 0, packages).pattern == "layered"
    )

    cells, packages = {}, {}
    for r in range(2):
        for c in range(4):
            cid = f"g{r}{c}"
            cells[cid] = (c, r, 0)
            packages[cid] = "west" if c < 2 else "east"
    outcomes.append(
        classify_block_pattern(grid_city(cells), 0, packages).pattern == "subgroups"
    )

    cells, packages = {}, {}
    for r in range(3):
        for c in range(4):
            cid = f"m{r}{c}"
            cells[cid] = (c, r, r)
            packages[cid] = f"pkg{(r * 4 + c) % 6}"
    outcomes.append(
        classify_block_pattern(grid_city(cells), 0, packages).pattern == "mixed"
    )

    _report("pattern-classifier", all(outcomes), f"{sum(outcomes)}/4 fixtures")
