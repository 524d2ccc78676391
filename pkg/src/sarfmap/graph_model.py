"""Dependency-graph ingestion.

Parses the line-oriented member graph format, computes dedication scores
(1/fan-in of the target member), and aggregates member dependencies into a
weighted directed class graph.  All structures are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .canon import fmt_real

MEMBER_KINDS = ("method", "field")
DEPENDENCY_KINDS = ("call", "field_access", "inheritance", "type_reference")


class GraphParseError(ValueError):
    """Malformed input document; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class GraphValidationError(ValueError):
    """Structurally invalid graph (dangling references, duplicates, ...)."""


@dataclass(frozen=True)
class Member:
    """A method or field belonging to a class."""

    id: str
    owner_class: str
    kind: str


@dataclass(frozen=True)
class ClassEntity:
    """A class (or source file); the unit rendered as a building."""

    id: str
    display_name: str
    package: str = ""


@dataclass(frozen=True)
class MemberDependency:
    source: str
    target: str
    kind: str


@dataclass(frozen=True)
class ClassDependency:
    """Pre-weighted class-level edge (``cdep`` record)."""

    source: str
    target: str
    weight: float


@dataclass(frozen=True)
class MemberGraph:
    """Member-level multigraph as read from an input document.

    ``classes``, ``members`` and ``deps`` are stored sorted by id so that
    two graphs with the same content compare equal regardless of record
    order in the source document.
    """

    classes: tuple[ClassEntity, ...]
    members: tuple[Member, ...]
    deps: tuple[MemberDependency, ...]
    class_deps: tuple[ClassDependency, ...] = ()

    def classes_by_id(self) -> dict[str, ClassEntity]:
        return {c.id: c for c in self.classes}

    def members_by_id(self) -> dict[str, Member]:
        return {m.id: m for m in self.members}

    @property
    def pre_weighted(self) -> bool:
        return bool(self.class_deps)


@dataclass(frozen=True)
class ClassGraph:
    """Weighted directed class graph.

    ``edges`` maps ``(source, target)`` to the summed dedication score.
    There are no self-edges and every stored weight is positive.
    """

    nodes: dict[str, ClassEntity]
    edges: dict[tuple[str, str], float]
    s_out: dict[str, float] = field(repr=False, default_factory=dict)
    s_in: dict[str, float] = field(repr=False, default_factory=dict)
    total_weight: float = 0.0

    def successors(self) -> dict[str, dict[str, float]]:
        """Adjacency view: node -> {successor: weight}."""
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (s, t), w in self.edges.items():
            adj[s][t] = w
        return adj

    def predecessors(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (s, t), w in self.edges.items():
            adj[t][s] = w
        return adj

    def restricted_to(self, ids) -> "ClassGraph":
        """Subgraph induced by ``ids``; strengths recomputed within it."""
        keep = set(ids)
        nodes = {i: e for i, e in self.nodes.items() if i in keep}
        edges = {
            (s, t): w for (s, t), w in self.edges.items() if s in keep and t in keep
        }
        return class_graph(nodes.values(), edges)


def class_graph(entities, edge_weights: dict[tuple[str, str], float]) -> ClassGraph:
    """Build a :class:`ClassGraph`, validating and recomputing strengths."""
    nodes = {e.id: e for e in sorted(entities, key=lambda e: e.id)}
    edges: dict[tuple[str, str], float] = {}
    for (s, t) in sorted(edge_weights):
        w = edge_weights[(s, t)]
        if s == t:
            raise GraphValidationError(f"self-edge on class {s!r}")
        if s not in nodes or t not in nodes:
            raise GraphValidationError(f"edge ({s!r}, {t!r}) references unknown class")
        if not math.isfinite(w) or w <= 0:
            raise GraphValidationError(f"edge ({s!r}, {t!r}) has non-positive weight {w}")
        edges[(s, t)] = w
    s_out = {n: 0.0 for n in nodes}
    s_in = {n: 0.0 for n in nodes}
    total = 0.0
    for (s, t), w in edges.items():
        s_out[s] += w
        s_in[t] += w
        total += w
    return ClassGraph(nodes=nodes, edges=edges, s_out=s_out, s_in=s_in, total_weight=total)


def parse_member_graph(document: str) -> MemberGraph:
    """Parse the line-oriented graph format.

    Records: ``class <id> <display_name> [<package>]``,
    ``member <id> <owner_class_id> <method|field>``,
    ``dep <source_member> <target_member> <kind>`` and the pre-weighted
    shortcut ``cdep <source_class> <target_class> <weight>``.
    ``#`` starts a comment line.  ``dep`` and ``cdep`` records cannot be
    mixed in one document.
    """
    classes: dict[str, ClassEntity] = {}
    members: dict[str, Member] = {}
    deps: list[MemberDependency] = []
    cdeps: dict[tuple[str, str], float] = {}

    for line_no, raw in enumerate(document.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        record, args = fields[0], fields[1:]
        if record == "class":
            if len(args) not in (2, 3):
                raise GraphParseError(line_no, f"class record needs 2 or 3 fields, got {len(args)}")
            cid, display = args[0], args[1]
            package = args[2] if len(args) == 3 else ""
            if cid in classes:
                raise GraphParseError(line_no, f"duplicate class id {cid!r}")
            classes[cid] = ClassEntity(id=cid, display_name=display, package=package)
        elif record == "member":
            if len(args) != 3:
                raise GraphParseError(line_no, f"member record needs 3 fields, got {len(args)}")
            mid, owner, kind = args
            if mid in members:
                raise GraphParseError(line_no, f"duplicate member id {mid!r}")
            if kind not in MEMBER_KINDS:
                raise GraphParseError(line_no, f"unknown member kind {kind!r}")
            members[mid] = Member(id=mid, owner_class=owner, kind=kind)
        elif record == "dep":
            if len(args) != 3:
                raise GraphParseError(line_no, f"dep record needs 3 fields, got {len(args)}")
            src, tgt, kind = args
            if kind not in DEPENDENCY_KINDS:
                raise GraphParseError(line_no, f"unknown dependency kind {kind!r}")
            if src == tgt and kind != "call":
                raise GraphParseError(
                    line_no, f"self-dependency on {src!r} only permitted for recursive calls"
                )
            deps.append(MemberDependency(source=src, target=tgt, kind=kind))
        elif record == "cdep":
            if len(args) != 3:
                raise GraphParseError(line_no, f"cdep record needs 3 fields, got {len(args)}")
            src, tgt = args[0], args[1]
            try:
                weight = float(args[2])
            except ValueError:
                raise GraphParseError(line_no, f"cdep weight {args[2]!r} is not a number") from None
            if not math.isfinite(weight) or weight <= 0:
                raise GraphParseError(line_no, f"cdep weight must be positive, got {args[2]}")
            if src == tgt:
                raise GraphParseError(line_no, f"cdep self-edge on {src!r}")
            cdeps[(src, tgt)] = cdeps.get((src, tgt), 0.0) + weight
        else:
            raise GraphParseError(line_no, f"unknown record kind {record!r}")

    if deps and cdeps:
        raise GraphValidationError("document mixes member-level 'dep' and pre-weighted 'cdep' records")

    for m in members.values():
        if m.owner_class not in classes:
            raise GraphValidationError(f"member {m.id!r} owned by undeclared class {m.owner_class!r}")
    for d in deps:
        for endpoint in (d.source, d.target):
            if endpoint not in members:
                raise GraphValidationError(f"dependency references undeclared member {endpoint!r}")
    for (s, t) in cdeps:
        for endpoint in (s, t):
            if endpoint not in classes:
                raise GraphValidationError(f"cdep references undeclared class {endpoint!r}")

    return MemberGraph(
        classes=tuple(sorted(classes.values(), key=lambda c: c.id)),
        members=tuple(sorted(members.values(), key=lambda m: m.id)),
        deps=tuple(sorted(deps, key=lambda d: (d.source, d.target, d.kind))),
        class_deps=tuple(
            ClassDependency(s, t, w) for (s, t), w in sorted(cdeps.items())
        ),
    )


def write_member_graph(graph: MemberGraph) -> str:
    """Serialize a member graph back to the line format (canonical order)."""
    lines: list[str] = []
    for c in graph.classes:
        if c.package:
            lines.append(f"class {c.id} {c.display_name} {c.package}")
        else:
            lines.append(f"class {c.id} {c.display_name}")
    for m in graph.members:
        lines.append(f"member {m.id} {m.owner_class} {m.kind}")
    for d in graph.deps:
        lines.append(f"dep {d.source} {d.target} {d.kind}")
    for cd in graph.class_deps:
        lines.append(f"cdep {cd.source} {cd.target} {fmt_real(cd.weight)}")
    return "\n".join(lines) + ("\n" if lines else "")


def member_fan_in(graph: MemberGraph) -> dict[str, int]:
    """Fan-in per member: the number of distinct members depending on it."""
    sources: dict[str, set[str]] = {}
    for d in graph.deps:
        sources.setdefault(d.target, set()).add(d.source)
    return {target: len(srcs) for target, srcs in sources.items()}


def dedication_score(target_member: str, graph: MemberGraph) -> float:
    """Dedication score of any dependency onto ``target_member``: 1/fan-in.

    A member depended on by a single other member is fully dedicated to it
    (score 1.0); widely used members get proportionally lower scores.
    """
    fan_in = member_fan_in(graph).get(target_member, 0)
    if fan_in == 0:
        raise GraphValidationError(
            f"member {target_member!r} has no incoming dependencies; dedication undefined"
        )
    return 1.0 / fan_in


def aggregate_to_class_graph(
    graph: MemberGraph, kind_weights: dict[str, float] | None = None
) -> ClassGraph:
    """Sum member-level dedication scores into class-level edge weights.

    Duplicate member dependencies (same source and target) are counted once,
    so the incoming scores of any member sum to at most 1.  Intra-class
    dependencies are dropped.  ``kind_weights`` optionally scales each
    dependency kind's contribution (all 1.0 by default).

    Pre-weighted graphs (``cdep`` records) bypass dedication scoring and use
    the stored weights directly.
    """
    if graph.pre_weighted:
        return class_graph(
            graph.classes, {(d.source, d.target): d.weight for d in graph.class_deps}
        )

    multipliers = dict.fromkeys(DEPENDENCY_KINDS, 1.0)
    if kind_weights:
        multipliers.update(kind_weights)

    owners = {m.id: m.owner_class for m in graph.members}
    fan_in = member_fan_in(graph)
    # Distinct (source, target) pairs; a pair carrying several kinds uses the
    # largest configured multiplier.
    pair_mult: dict[tuple[str, str], float] = {}
    for d in graph.deps:
        key = (d.source, d.target)
        m = multipliers[d.kind]
        pair_mult[key] = max(pair_mult.get(key, 0.0), m)

    weights: dict[tuple[str, str], float] = {}
    for (src, tgt), mult in sorted(pair_mult.items()):
        src_class, tgt_class = owners[src], owners[tgt]
        if src_class == tgt_class:
            continue
        score = mult / fan_in[tgt]
        if score <= 0:
            continue
        key = (src_class, tgt_class)
        weights[key] = weights.get(key, 0.0) + score

    return class_graph(graph.classes, weights)
