"""End-to-end pipeline: graph text in, map document + SVG + reports out.

The pipeline is fully deterministic: the same input text and configuration
produce byte-identical documents and SVG on every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import annotate as ann
from .block_layout import LayoutConfig, greedy_level_decomposition, optimize_depth
from .canon import content_digest
from .clustering import agglomerate, cut_dendrogram, dendrogram_to_text, modularity
from .feature_tree import build_feature_tree
from .graph_model import aggregate_to_class_graph, parse_member_graph
from .render import RenderOptions, document_dict, dumps_document, render_svg
from .street_layout import StreetConfig, layout_streets, place_separators, total_link_energy


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    layout: LayoutConfig = LayoutConfig()
    street: StreetConfig = StreetConfig()
    annotate: ann.AnnotateConfig = ann.AnnotateConfig()
    render: RenderOptions = RenderOptions()
    bindings: tuple[str, ...] = ()  # channel=attribute[:transform]
    kind_weights: dict[str, float] | None = None  # per-dependency-kind multipliers
    max_cluster_warn: int = 200
    contraction_epsilon: float = 0.01
    verbosity: int = 0
    # the pipeline draws no randomness anywhere; kept as an explicit contract
    random_free: bool = True


@dataclass(frozen=True)
class ClusterResult:
    graph: object
    dendrogram: object
    partition: object
    q: float
    report: dict
    dendrogram_text: str


@dataclass(frozen=True)
class PipelineResult:
    document: dict
    document_bytes: bytes
    svg: str
    city: object
    cluster_report: dict
    pattern_report: list
    warnings: list = field(default_factory=list)


def cluster_graph(graph_text: str, config: RunConfig = RunConfig()) -> ClusterResult:
    """Steps 1-2: parse, weight, agglomerate and cut."""
    member_graph = parse_member_graph(graph_text)
    graph = aggregate_to_class_graph(member_graph, kind_weights=config.kind_weights)
    if not graph.nodes:
        raise PipelineError("empty graph: no classes in input")
    dendrogram = agglomerate(graph)
    partition = cut_dendrogram(dendrogram, graph)
    q = modularity(graph, partition) if graph.total_weight > 0 else 0.0
    clusters = partition.clusters()
    report = {
        "q": q,
        "cluster_count": len(clusters),
        "class_count": len(graph.nodes),
        "total_weight": graph.total_weight,
        "clusters": [
            {"id": i, "size": len(members), "classes": members}
            for i, members in enumerate(clusters)
        ],
    }
    return ClusterResult(
        graph=graph,
        dendrogram=dendrogram,
        partition=partition,
        q=q,
        report=report,
        dendrogram_text=dendrogram_to_text(dendrogram),
    )


def run_pipeline(
    graph_text: str,
    config: RunConfig = RunConfig(),
    overlay_csv: str | None = None,
) -> PipelineResult:
    """Run all five steps and assemble the document, SVG and reports."""
    warnings: list[str] = []
    clustered = cluster_graph(graph_text, config)
    graph = clustered.graph
    partition = clustered.partition

    clusters = partition.clusters()
    for i, members in enumerate(clusters):
        if len(members) > config.max_cluster_warn:
            warnings.append(
                f"cluster {i} has {len(members)} classes "
                f"(over the {config.max_cluster_warn}-class threshold); "
                "consider reviewing its granularity"
            )

    tree = build_feature_tree(
        clustered.dendrogram, partition, contraction_epsilon=config.contraction_epsilon
    )

    blocks = {}
    for i, members in enumerate(clusters):
        subgraph = graph.restricted_to(members)
        decomposition = greedy_level_decomposition(subgraph)
        blocks[i] = optimize_depth(decomposition.levels, subgraph, config.layout, cluster=i)

    city = layout_streets(tree, blocks, graph, config.street)
    city = place_separators(city, config.street)

    links = ann.route_links(city, graph, config.annotate)
    keywords = ann.extract_keywords(city, graph.nodes, config.annotate)
    city = replace(city, links=links, keywords=keywords)

    channels = {"package": ann.package_channel(graph.nodes)}
    if overlay_csv:
        for name, raw in sorted(ann.parse_overlay_csv(overlay_csv).items()):
            channels[name] = ann.infer_channel(name, raw)
    bindings = [ann.parse_binding(spec) for spec in config.bindings]
    if not any(b.attribute == "building_color" for b in bindings):
        bindings.insert(0, ann.Binding(channel="package", attribute="building_color"))
    for binding in bindings:
        if binding.channel not in channels:
            raise PipelineError(
                f"binding references unknown channel {binding.channel!r}; "
                f"available: {', '.join(sorted(channels))}"
            )
    city = ann.bind_overlay(city, ann.OverlaySet(channels=channels, bindings=tuple(bindings)))

    packages = {cid: e.package or "(root)" for cid, e in graph.nodes.items()}
    patterns = ann.classify_all_patterns(city, packages, config.annotate)
    pattern_report = [
        {
            "block": p.block,
            "pattern": p.pattern,
            "dominant_packages": list(p.dominant_packages),
        }
        for p in patterns
    ]

    params = {
        "tie_penalty_a": config.layout.tie_penalty_a,
        "balance_b": config.layout.balance_b,
        "target_aspect": config.layout.target_aspect,
        "street_width": config.street.street_width,
        "separator_width": config.street.separator_width,
        "cell": config.street.cell,
        "contraction_epsilon": config.contraction_epsilon,
        "keywords_per_block": config.annotate.keywords_per_block,
        "link_width_scale": config.annotate.link_width_scale,
        "link_elevation_unit": config.annotate.link_elevation_unit,
    }
    reports = {
        "clusters": clustered.report,
        "patterns": pattern_report,
        "energy_history": list(city.energy_history),
        "final_energy": total_link_energy(city, graph),
        "warnings": warnings,
    }
    document = document_dict(
        city, digest=content_digest(graph_text), params=params, reports=reports
    )
    svg = render_svg(document, config.render)
    return PipelineResult(
        document=document,
        document_bytes=dumps_document(document),
        svg=svg,
        city=city,
        cluster_report=clustered.report,
        pattern_report=pattern_report,
        warnings=warnings,
    )
