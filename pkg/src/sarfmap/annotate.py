"""Information overlays on the blank map.

Adds tf-idf keywords (blocks are the documents), package-pattern
classification of blocks, dependency-link geometry routed over the street
hierarchy, and bindings of per-class property channels to visual
attributes.  None of these touch blank-map geometry.
"""

from __future__ import annotations

import colorsys
import math
import re
from dataclasses import dataclass, replace

from .graph_model import ClassEntity, ClassGraph
from .street_layout import BuildingSite, CityMap, PlacedBlock

PATTERN_SINGLE = "single_color"
PATTERN_LAYERED = "layered"
PATTERN_SUBGROUPS = "subgroups"
PATTERN_MIXED = "mixed"

# Visual attributes a channel may bind to; the grid position of a building
# is deliberately absent and cannot be bound.
BINDABLE_ATTRIBUTES = (
    "building_color",
    "building_height",
    "building_shape",
    "building_brightness",
    "building_ornament",
    "ground_color",
    "ground_fire",
    "link_color",
    "link_thickness",
    "link_height",
)
_POSITION_ALIASES = {"position", "grid_position", "building_position", "x", "y", "col", "row"}

TRANSFORMS = ("identity", "sqrt")

DEFAULT_COLOR = "#9e9e9e"


class OverlayBindingError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotateConfig:
    keywords_per_block: int = 5
    min_token_length: int = 2
    label_nudge_attempts: int = 8
    single_color_share: float = 0.95
    layered_share: float = 0.80
    subgroup_share: float = 0.25
    link_width_scale: float = 2.0  # stroke px per unit of dependency weight
    link_elevation_unit: float = 0.25


@dataclass(frozen=True)
class KeywordLabel:
    word: str
    block: int
    anchor_class: str
    anchor: tuple[float, float]
    weight: float  # tf-idf
    density: float
    tier: int


@dataclass(frozen=True)
class LinkGeometry:
    source: str
    target: str
    points: tuple[tuple[float, float, float], ...]  # x, y, elevation
    weight: float
    width: float
    source_color: str = "#2e7d32"
    target_color: str = "#c62828"


@dataclass(frozen=True)
class BlockPattern:
    block: int
    pattern: str
    dominant_packages: tuple[str, ...]


@dataclass(frozen=True)
class Channel:
    name: str
    kind: str  # "categorical" | "scalar" | "flag"
    values: dict[str, object]


@dataclass(frozen=True)
class Binding:
    channel: str
    attribute: str
    transform: str = "identity"


@dataclass(frozen=True)
class OverlaySet:
    channels: dict[str, Channel]
    bindings: tuple[Binding, ...]
    # optional user palette per categorical channel; generated colors fill
    # any category it does not cover
    palettes: dict[str, dict[str, str]] | None = None


@dataclass(frozen=True)
class OverlayData:
    """Resolved overlay state stored on the annotated map."""

    channels: dict[str, Channel]
    bindings: tuple[Binding, ...]
    attributes: dict[str, dict[str, object]]  # attribute -> class -> value
    palettes: dict[str, dict[str, str]]  # channel -> category -> color


# --- keyword extraction -------------------------------------------------

_TOKEN_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]+|[a-z]+")


def tokenize_identifier(name: str) -> list[str]:
    """Split an identifier on punctuation, digit and camel-case boundaries."""
    return [t.lower() for t in _TOKEN_RE.findall(name)]


def _class_tokens(entity: ClassEntity, min_length: int) -> set[str]:
    words = set(tokenize_identifier(entity.display_name))
    for segment in entity.package.split("."):
        words.update(tokenize_identifier(segment))
    return {w for w in words if len(w) >= min_length}


def extract_keywords(
    city: CityMap,
    classes: dict[str, ClassEntity],
    config: AnnotateConfig = AnnotateConfig(),
) -> tuple[KeywordLabel, ...]:
    """Select characteristic words per block and anchor them over buildings.

    tf is the fraction of the block's classes containing the word, idf is
    ln(#blocks / #blocks containing it).  A word is anchored on the building
    whose 3x3 grid neighborhood carries the most occurrences (the densest
    spot), and each block keeps its top words by that local density.
    Overlapping labels are nudged apart; a label that still overlaps after
    the configured attempts is dropped.
    """
    by_block: dict[int, list[BuildingSite]] = {}
    for b in city.buildings:
        by_block.setdefault(b.cluster, []).append(b)
    block_count = len(by_block)
    if block_count == 0:
        return ()

    tokens = {cid: _class_tokens(entity, config.min_token_length) for cid, entity in classes.items()}
    block_words: dict[int, dict[str, int]] = {}
    for block, members in sorted(by_block.items()):
        counts: dict[str, int] = {}
        for site in members:
            for w in tokens.get(site.class_id, ()):
                counts[w] = counts.get(w, 0) + 1
        block_words[block] = counts
    doc_freq: dict[str, int] = {}
    for counts in block_words.values():
        for w in counts:
            doc_freq[w] = doc_freq.get(w, 0) + 1

    candidates: list[KeywordLabel] = []
    for block, members in sorted(by_block.items()):
        counts = block_words[block]
        size = len(members)
        grid = {(m.col, m.row): m for m in members}
        scored: list[tuple[float, str, BuildingSite, float]] = []
        for word in sorted(counts):
            idf = math.log(block_count / doc_freq[word])
            if idf <= 0.0:
                continue
            tfidf = (counts[word] / size) * idf
            best_site: BuildingSite | None = None
            best_density = -1.0
            for site in sorted(members, key=lambda m: m.class_id):
                if word not in tokens.get(site.class_id, ()):
                    continue
                nearby = 0
                for dc in (-1, 0, 1):
                    for dr in (-1, 0, 1):
                        n = grid.get((site.col + dc, site.row + dr))
                        if n is not None and word in tokens.get(n.class_id, ()):
                            nearby += 1
                density = tfidf * nearby / 9.0
                if density > best_density:
                    best_density = density
                    best_site = site
            if best_site is None or best_density <= 0.0:
                continue
            scored.append((best_density, word, best_site, tfidf))
        scored.sort(key=lambda s: (-s[0], s[1]))
        for rank, (density, word, site, tfidf) in enumerate(
            scored[: config.keywords_per_block]
        ):
            tier = 3 if rank == 0 else (2 if rank <= 2 else 1)
            candidates.append(
                KeywordLabel(
                    word=word,
                    block=block,
                    anchor_class=site.class_id,
                    anchor=(site.x, site.y),
                    weight=tfidf,
                    density=density,
                    tier=tier,
                )
            )

    return _resolve_label_overlaps(candidates, config)


def _label_box(label: KeywordLabel) -> tuple[float, float, float, float]:
    size = 0.5 + 0.3 * label.tier
    w = 0.32 * size * max(len(label.word), 1)
    h = 0.6 * size
    x, y = label.anchor
    return (x - w / 2, y - h / 2, x + w / 2, y + h / 2)


def _boxes_overlap(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


_NUDGES = ((0, -1), (0, 1), (1, 0), (-1, 0), (1, -1), (-1, -1), (1, 1), (-1, 1))


def _resolve_label_overlaps(
    candidates: list[KeywordLabel], config: AnnotateConfig
) -> tuple[KeywordLabel, ...]:
    placed: list[KeywordLabel] = []
    boxes: list[tuple[float, float, float, float]] = []
    for label in sorted(candidates, key=lambda l: (-l.density, l.block, l.word)):
        chosen = None
        for attempt in range(config.label_nudge_attempts + 1):
            if attempt == 0:
                moved = label
            else:
                dx, dy = _NUDGES[attempt - 1]
                step = 0.8
                moved = replace(
                    label, anchor=(label.anchor[0] + dx * step, label.anchor[1] + dy * step)
                )
            box = _label_box(moved)
            if not any(_boxes_overlap(box, other) for other in boxes):
                chosen = moved
                boxes.append(box)
                break
        if chosen is not None:
            placed.append(chosen)
    placed.sort(key=lambda l: (l.block, -l.density, l.word))
    return tuple(placed)


# --- block patterns ------------------------------------------------------

def classify_block_pattern(
    city: CityMap,
    cluster: int,
    packages: dict[str, str],
    config: AnnotateConfig = AnnotateConfig(),
) -> BlockPattern:
    """Classify how packages distribute over one block's grid.

    Decision order: single-color (one package dominates), layered (levels
    carry contiguous package bands), subgroups (several spatially connected
    package regions), otherwise mixed.
    """
    members = [b for b in city.buildings if b.cluster == cluster]
    if not members:
        raise ValueError(f"no buildings in block {cluster}")
    n = len(members)
    shares: dict[str, int] = {}
    for b in members:
        pkg = packages.get(b.class_id, "")
        shares[pkg] = shares.get(pkg, 0) + 1
    ranked = sorted(shares.items(), key=lambda kv: (-kv[1], kv[0]))
    dominant = tuple(p for p, _count in ranked[:4])

    if ranked[0][1] / n >= config.single_color_share:
        return BlockPattern(block=cluster, pattern=PATTERN_SINGLE, dominant_packages=dominant[:1])

    # layered: majority package per level, bands contiguous, high coverage
    levels: dict[int, list[BuildingSite]] = {}
    for b in members:
        levels.setdefault(b.level, []).append(b)
    majority: dict[int, str] = {}
    for lvl, sites in sorted(levels.items()):
        counts: dict[str, int] = {}
        for s in sites:
            pkg = packages.get(s.class_id, "")
            counts[pkg] = counts.get(pkg, 0) + 1
        majority[lvl] = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    band_seq = [majority[lvl] for lvl in sorted(majority)]
    bands = [band_seq[0]]
    for pkg in band_seq[1:]:
        if pkg != bands[-1]:
            bands.append(pkg)
    contiguous = len(bands) == len(set(bands))
    covered = sum(
        1 for b in members if packages.get(b.class_id, "") == majority[b.level]
    )
    if contiguous and len(bands) >= 2 and covered / n >= config.layered_share:
        return BlockPattern(
            block=cluster, pattern=PATTERN_LAYERED, dominant_packages=tuple(dict.fromkeys(bands))
        )

    # subgroups: at least two packages, each big enough and spatially connected
    majors = [p for p, count in ranked if count / n >= config.subgroup_share]
    if len(majors) >= 2 and all(
        _is_connected([b for b in members if packages.get(b.class_id, "") == p])
        for p in majors
    ):
        return BlockPattern(
            block=cluster, pattern=PATTERN_SUBGROUPS, dominant_packages=tuple(sorted(majors))
        )

    return BlockPattern(block=cluster, pattern=PATTERN_MIXED, dominant_packages=dominant)


def _is_connected(sites: list[BuildingSite]) -> bool:
    if not sites:
        return False
    cells = {(s.col, s.row) for s in sites}
    seen = set()
    stack = [next(iter(sorted(cells)))]
    while stack:
        c, r = stack.pop()
        if (c, r) in seen:
            continue
        seen.add((c, r))
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if (c + dc, r + dr) in cells and (c + dc, r + dr) not in seen:
                stack.append((c + dc, r + dr))
    return len(seen) == len(cells)


def classify_all_patterns(
    city: CityMap, packages: dict[str, str], config: AnnotateConfig = AnnotateConfig()
) -> tuple[BlockPattern, ...]:
    return tuple(
        classify_block_pattern(city, block.cluster, packages, config)
        for block in city.blocks
    )


# --- dependency link routing ---------------------------------------------

def route_links(
    city: CityMap,
    graph: ClassGraph,
    config: AnnotateConfig = AnnotateConfig(),
) -> tuple[LinkGeometry, ...]:
    """Geometry for every class dependency.

    Intra-block links connect the two buildings directly at ground level.
    Inter-block links pass over the streets on the tree path between the
    two blocks, one control point per street, lifted proportionally to the
    tree distance, which bundles links sharing street corridors.
    """
    sites = city.building_by_class()
    streets = {s.id: s for s in city.streets}
    block_street = {b.cluster: b.street for b in city.blocks}

    def street_chain(cluster: int) -> list[int]:
        chain: list[int] = []
        sid = block_street.get(cluster)
        while sid is not None:
            chain.append(sid)
            sid = streets[sid].parent
        chain.reverse()  # root first
        return chain

    chains = {b.cluster: street_chain(b.cluster) for b in city.blocks}

    links: list[LinkGeometry] = []
    for (src, tgt) in sorted(graph.edges):
        w = graph.edges[(src, tgt)]
        a, b = sites[src], sites[tgt]
        width = w * config.link_width_scale
        if a.cluster == b.cluster:
            points = ((a.x, a.y, 0.0), (b.x, b.y, 0.0))
        else:
            ca, cb = chains[a.cluster], chains[b.cluster]
            shared = 0
            while shared < len(ca) and shared < len(cb) and ca[shared] == cb[shared]:
                shared += 1
            path = list(reversed(ca[shared - 1 :])) + cb[shared:] if shared else ca[::-1] + cb
            # tree distance: building -> block street ... -> building
            distance = (len(ca) - shared) + (len(cb) - shared) + 2
            elevation = config.link_elevation_unit * distance
            mid = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
            control = [
                (*_closest_on_street(streets[sid], mid), elevation) for sid in path
            ]
            points = ((a.x, a.y, 0.0), *control, (b.x, b.y, 0.0))
        links.append(
            LinkGeometry(source=src, target=tgt, points=points, weight=w, width=width)
        )
    return tuple(links)


def _closest_on_street(street, point) -> tuple[float, float]:
    px, py = point
    (x0, y0), (x1, y1) = street.start, street.end
    if street.axis == "horizontal":
        return (min(max(px, min(x0, x1)), max(x0, x1)), y0)
    return (x0, min(max(py, min(y0, y1)), max(y0, y1)))


# --- overlays --------------------------------------------------------------

def parse_overlay_csv(text: str) -> dict[str, dict[str, str]]:
    """Parse ``class_id,channel,value`` records into channel value maps."""
    values: dict[str, dict[str, str]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise OverlayBindingError(
                f"overlay line {line_no}: expected 'class_id,channel,value', got {raw!r}"
            )
        class_id, channel, value = parts
        values.setdefault(channel, {})[class_id] = value
    return values


def infer_channel(name: str, raw: dict[str, str]) -> Channel:
    """Type a channel from its raw values: flag, scalar, else categorical."""
    lowered = {v.lower() for v in raw.values()}
    if lowered and lowered <= {"true", "false", "yes", "no"}:
        return Channel(
            name=name,
            kind="flag",
            values={k: v.lower() in ("true", "yes") for k, v in raw.items()},
        )
    try:
        return Channel(
            name=name, kind="scalar", values={k: float(v) for k, v in raw.items()}
        )
    except ValueError:
        return Channel(name=name, kind="categorical", values=dict(raw))


def categorical_palette(categories) -> dict[str, str]:
    """Stable palette: hues spread over sorted categories, so near names get
    near colors."""
    ordered = sorted(set(categories))
    n = max(len(ordered), 1)
    palette = {}
    for i, cat in enumerate(ordered):
        r, g, b = colorsys.hsv_to_rgb(i / n, 0.55, 0.82)
        palette[cat] = f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"
    return palette


def parse_binding(spec: str) -> Binding:
    """Parse ``channel=attribute[:transform]`` binding syntax."""
    if "=" not in spec:
        raise OverlayBindingError(f"binding {spec!r} must look like channel=attribute[:transform]")
    channel, rest = spec.split("=", 1)
    transform = "identity"
    attribute = rest
    if ":" in rest:
        attribute, transform = rest.split(":", 1)
    if transform not in TRANSFORMS:
        raise OverlayBindingError(f"unknown transform {transform!r} (use one of {TRANSFORMS})")
    return Binding(channel=channel.strip(), attribute=attribute.strip(), transform=transform)


def bind_overlay(city: CityMap, overlays: OverlaySet) -> CityMap:
    """Resolve channel bindings into per-class visual attribute values.

    Geometry is untouched: the returned map differs only in its ``overlays``
    field.  Classes without a value fall back to the attribute default at
    render time.
    """
    attributes: dict[str, dict[str, object]] = {}
    palettes: dict[str, dict[str, str]] = {}
    for binding in overlays.bindings:
        if binding.attribute in _POSITION_ALIASES:
            raise OverlayBindingError(
                "the grid position of a building cannot be bound to a channel"
            )
        if binding.attribute not in BINDABLE_ATTRIBUTES:
            raise OverlayBindingError(
                f"unknown attribute {binding.attribute!r}; bindable: {', '.join(BINDABLE_ATTRIBUTES)}"
            )
        channel = overlays.channels.get(binding.channel)
        if channel is None:
            raise OverlayBindingError(
                f"unknown channel {binding.channel!r}; available: {', '.join(sorted(overlays.channels))}"
            )
        resolved: dict[str, object] = {}
        if channel.kind == "categorical":
            palette = palettes.get(binding.channel)
            if palette is None:
                palette = categorical_palette(channel.values.values())
                if overlays.palettes and binding.channel in overlays.palettes:
                    palette.update(overlays.palettes[binding.channel])
                palettes[binding.channel] = palette
            for class_id in sorted(channel.values):
                resolved[class_id] = palette[channel.values[class_id]]
        elif channel.kind == "scalar":
            for class_id in sorted(channel.values):
                value = float(channel.values[class_id])
                if binding.transform == "sqrt":
                    if value < 0:
                        raise OverlayBindingError(
                            f"sqrt transform on negative value for class {class_id!r}"
                        )
                    value = math.sqrt(value)
                resolved[class_id] = value
        else:  # flag
            for class_id in sorted(channel.values):
                resolved[class_id] = bool(channel.values[class_id])
        attributes[binding.attribute] = resolved

    data = OverlayData(
        channels=dict(sorted(overlays.channels.items())),
        bindings=overlays.bindings,
        attributes=attributes,
        palettes=palettes,
    )
    return replace(city, overlays=data)


def package_channel(classes: dict[str, ClassEntity]) -> Channel:
    """The built-in categorical channel carrying each class's package."""
    return Channel(
        name="package",
        kind="categorical",
        values={cid: entity.package or "(root)" for cid, entity in sorted(classes.items())},
    )
