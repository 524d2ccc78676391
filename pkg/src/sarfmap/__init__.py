"""City-map visualization of software dependency graphs.

Pipeline: parse a dependency graph, weight it by dedication scores, find
feature clusters by directed weighted modularity, lay the classes of each
cluster out as a grid-aligned city block by dependency level, place blocks
along a street hierarchy, annotate (keywords, links, overlays), and emit a
canonical ``.sarfmap`` document plus SVG.
"""

from .block_layout import (
    BlockLayout,
    LayoutConfig,
    Level,
    arrange_horizontal,
    greedy_level_decomposition,
    layout_block,
    optimize_depth,
)
from .clustering import (
    Dendrogram,
    Partition,
    agglomerate,
    cut_dendrogram,
    modularity,
)
from .feature_tree import FeatureTree, build_feature_tree
from .graph_model import (
    ClassGraph,
    MemberGraph,
    aggregate_to_class_graph,
    dedication_score,
    parse_member_graph,
    write_member_graph,
)
from .pipeline import PipelineResult, RunConfig, run_pipeline
from .render import RenderOptions, parse_map_document, render_svg, write_map_document
from .street_layout import CityMap, StreetConfig, layout_streets, place_separators

__version__ = "0.1.0"

__all__ = [
    "BlockLayout",
    "CityMap",
    "ClassGraph",
    "Dendrogram",
    "FeatureTree",
    "LayoutConfig",
    "Level",
    "MemberGraph",
    "Partition",
    "PipelineResult",
    "RenderOptions",
    "RunConfig",
    "StreetConfig",
    "agglomerate",
    "aggregate_to_class_graph",
    "arrange_horizontal",
    "build_feature_tree",
    "cut_dendrogram",
    "dedication_score",
    "greedy_level_decomposition",
    "layout_block",
    "layout_streets",
    "modularity",
    "optimize_depth",
    "parse_map_document",
    "parse_member_graph",
    "place_separators",
    "render_svg",
    "run_pipeline",
    "write_map_document",
    "write_member_graph",
]
