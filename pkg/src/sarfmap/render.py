"""Map document serialization and static SVG rendering.

The map document (extension ``.sarfmap``) is a canonical JSON tree: keys
sorted, reals at 9 significant digits, arrays ordered by id.  Serializing,
re-parsing and serializing again yields identical bytes, which is what makes
whole pipeline runs byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .canon import canonical_dumps, fmt_real
from .annotate import categorical_palette
from .street_layout import CityMap

SCHEMA = "sarfmap/1"


class UnknownChannelError(ValueError):
    def __init__(self, channel: str, available):
        super().__init__(
            f"unknown overlay channel {channel!r}; available: {', '.join(sorted(available)) or '(none)'}"
        )
        self.channel = channel


def blank_map_dict(city: CityMap) -> dict:
    """Geometry-only section of the document (the invariant blank map)."""
    return {
        "bounds": list(city.bounds),
        "cell_size": city.cell_size,
        "blocks": [
            {
                "cluster": b.cluster,
                "origin": list(b.origin),
                "width": b.width,
                "depth": b.depth,
                "street": b.street,
                "levels": b.levels,
            }
            for b in sorted(city.blocks, key=lambda b: b.cluster)
        ],
        "buildings": [
            {
                "class": b.class_id,
                "cluster": b.cluster,
                "col": b.col,
                "row": b.row,
                "level": b.level,
                "x": b.x,
                "y": b.y,
            }
            for b in sorted(city.buildings, key=lambda b: b.class_id)
        ],
        "streets": [
            {
                "id": s.id,
                "kind": s.kind,
                "axis": s.axis,
                "depth": s.depth,
                "start": list(s.start),
                "end": list(s.end),
                "width": s.width,
                "parent": s.parent,
            }
            for s in sorted(city.streets, key=lambda s: s.id)
        ],
    }


def blank_map_bytes(city: CityMap) -> bytes:
    return canonical_dumps(blank_map_dict(city)).encode("utf-8")


def _annotations_dict(city: CityMap) -> dict:
    links = [
        {
            "source": l.source,
            "target": l.target,
            "points": [list(p) for p in l.points],
            "weight": l.weight,
            "width": l.width,
            "source_color": l.source_color,
            "target_color": l.target_color,
        }
        for l in sorted(city.links, key=lambda l: (l.source, l.target))
    ]
    keywords = [
        {
            "word": k.word,
            "block": k.block,
            "anchor_class": k.anchor_class,
            "anchor": list(k.anchor),
            "weight": k.weight,
            "density": k.density,
            "tier": k.tier,
        }
        for k in city.keywords
    ]
    overlays: dict = {"channels": {}, "bindings": [], "attributes": {}, "palettes": {}}
    if city.overlays is not None:
        data = city.overlays
        overlays["channels"] = {
            name: {"kind": ch.kind, "values": dict(sorted(ch.values.items()))}
            for name, ch in sorted(data.channels.items())
        }
        overlays["bindings"] = [
            {"channel": b.channel, "attribute": b.attribute, "transform": b.transform}
            for b in data.bindings
        ]
        overlays["attributes"] = {
            attr: dict(sorted(values.items()))
            for attr, values in sorted(data.attributes.items())
        }
        overlays["palettes"] = {
            ch: dict(sorted(p.items())) for ch, p in sorted(data.palettes.items())
        }
    return {"links": links, "keywords": keywords, "overlays": overlays}


def document_dict(
    city: CityMap,
    digest: str,
    params: dict | None = None,
    reports: dict | None = None,
) -> dict:
    return {
        "schema": SCHEMA,
        "digest": digest,
        "params": params or {},
        "blank": blank_map_dict(city),
        "annotations": _annotations_dict(city),
        "reports": reports or {},
    }


def write_map_document(
    city: CityMap,
    digest: str,
    params: dict | None = None,
    reports: dict | None = None,
) -> bytes:
    """Serialize the annotated map canonically (UTF-8, trailing newline)."""
    doc = document_dict(city, digest, params, reports)
    return (canonical_dumps(doc) + "\n").encode("utf-8")


def dumps_document(doc: dict) -> bytes:
    """Canonical bytes of an already-assembled document tree."""
    return (canonical_dumps(doc) + "\n").encode("utf-8")


def parse_map_document(data: bytes | str) -> dict:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    doc = json.loads(text)
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise ValueError(f"not a {SCHEMA} document")
    return doc


@dataclass(frozen=True)
class RenderOptions:
    px_per_cell: float = 12.0
    margin_cells: float = 2.0
    fixed_height: bool = False
    color_channel: str | None = None
    show_links: bool = True
    show_keywords: bool = True
    show_legend: bool = True


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _shade(hex_color: str, factor: float) -> str:
    """Scale an ``#rrggbb`` color's brightness by ``factor`` (clamped)."""
    r = int(hex_color[1:3], 16)
    g = int(hex_color[3:5], 16)
    b = int(hex_color[5:7], 16)
    f = max(0.0, min(factor, 1.6))
    return "#%02x%02x%02x" % tuple(min(255, int(round(c * f))) for c in (r, g, b))


def render_svg(doc: dict, options: RenderOptions = RenderOptions()) -> str:
    """Top-down orthographic SVG of a map document.

    Buildings are filled cells, streets are bands (separators lighter),
    keywords are text sized by tier and links are green-to-red gradient
    paths.  Output is deterministic for a given document and options.
    """
    blank = doc["blank"]
    annotations = doc.get("annotations", {})
    overlays = annotations.get("overlays", {})
    scale = options.px_per_cell
    cell = blank["cell_size"]
    x0, y0, x1, y1 = blank["bounds"]
    pad = options.margin_cells * cell

    def px(wx: float, wy: float) -> tuple[float, float]:
        return ((wx - x0 + pad) * scale, (wy - y0 + pad) * scale)

    colors, legend = _building_colors(blank, overlays, options)
    heights = overlays.get("attributes", {}).get("building_height", {})
    brightness = overlays.get("attributes", {}).get("building_brightness", {})
    max_height = max((float(v) for v in heights.values()), default=0.0)

    width_px = (x1 - x0 + 2 * pad) * scale
    height_px = (y1 - y0 + 2 * pad) * scale
    legend_px = 130.0 if options.show_legend and legend else 0.0

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{fmt_real(width_px + legend_px)}" height="{fmt_real(height_px)}" '
        f'viewBox="0 0 {fmt_real(width_px + legend_px)} {fmt_real(height_px)}">'
    )
    out.append(f'<rect fill="#f4f1ea" width="{fmt_real(width_px + legend_px)}" height="{fmt_real(height_px)}"/>')

    links = annotations.get("links", []) if options.show_links else []
    if links:
        out.append("<defs>")
        for i, link in enumerate(links):
            sx, sy = px(link["points"][0][0], link["points"][0][1])
            tx, ty = px(link["points"][-1][0], link["points"][-1][1])
            if (sx, sy) == (tx, ty):
                tx += 0.01  # zero-length gradients are undefined in SVG
            out.append(
                f'<linearGradient id="lg{i}" gradientUnits="userSpaceOnUse" '
                f'x1="{fmt_real(sx)}" y1="{fmt_real(sy)}" x2="{fmt_real(tx)}" y2="{fmt_real(ty)}">'
                f'<stop offset="0" stop-color="{link["source_color"]}"/>'
                f'<stop offset="1" stop-color="{link["target_color"]}"/>'
                "</linearGradient>"
            )
        out.append("</defs>")

    # ground: block bases with per-level brightness stepping (the slope)
    out.append('<g class="blocks">')
    block_levels = {b["cluster"]: b for b in blank["blocks"]}
    rows_by_block: dict[int, dict[int, int]] = {}
    for b in blank["buildings"]:
        rows_by_block.setdefault(b["cluster"], {})[b["row"]] = min(
            rows_by_block.get(b["cluster"], {}).get(b["row"], b["level"]), b["level"]
        )
    for block in blank["blocks"]:
        bx, by = px(block["origin"][0], block["origin"][1])
        bw = block["width"] * cell * scale
        bh = block["depth"] * cell * scale
        out.append(
            f'<rect class="block" x="{fmt_real(bx)}" y="{fmt_real(by)}" '
            f'width="{fmt_real(bw)}" height="{fmt_real(bh)}" fill="#ddd5c4"/>'
        )
        levels = max(block["levels"], 1)
        row_levels = rows_by_block.get(block["cluster"], {})
        for row in sorted(row_levels):
            level = row_levels[row]
            shade = _shade("#ddd5c4", 1.08 - 0.16 * (level / max(levels - 1, 1) if levels > 1 else 0))
            ry = by + row * cell * scale
            out.append(
                f'<rect class="block-level" x="{fmt_real(bx)}" y="{fmt_real(ry)}" '
                f'width="{fmt_real(bw)}" height="{fmt_real(cell * scale)}" fill="{shade}"/>'
            )
    out.append("</g>")

    out.append('<g class="streets">')
    for street in blank["streets"]:
        sx0, sy0 = px(street["start"][0], street["start"][1])
        sx1, sy1 = px(street["end"][0], street["end"][1])
        w = street["width"] * scale
        # deeper streets render narrower inside their band
        visual = w * max(0.45, 1.0 - 0.12 * street["depth"])
        fill = "#b9c4cf" if street["kind"] == "separator" else "#9aa4ae"
        css = f'street street-{street["kind"]}'
        if street["axis"] == "horizontal":
            out.append(
                f'<rect class="{css}" x="{fmt_real(min(sx0, sx1))}" y="{fmt_real(sy0 - visual / 2)}" '
                f'width="{fmt_real(abs(sx1 - sx0))}" height="{fmt_real(visual)}" fill="{fill}"/>'
            )
        else:
            out.append(
                f'<rect class="{css}" x="{fmt_real(sx0 - visual / 2)}" y="{fmt_real(min(sy0, sy1))}" '
                f'width="{fmt_real(visual)}" height="{fmt_real(abs(sy1 - sy0))}" fill="{fill}"/>'
            )
    out.append("</g>")

    out.append('<g class="buildings">')
    for b in blank["buildings"]:
        cx, cy = px(b["x"], b["y"])
        side = 0.7 * cell * scale
        if not options.fixed_height and max_height > 0:
            h = float(heights.get(b["class"], 0.0))
            side = (0.45 + 0.35 * (h / max_height)) * cell * scale
        fill = colors.get(b["class"], "#9e9e9e")
        bright = brightness.get(b["class"])
        if bright is not None:
            fill = _shade(fill, 0.6 + 0.8 * max(0.0, min(float(bright), 1.0)))
        out.append(
            f'<rect class="building" data-class="{_esc(b["class"])}" '
            f'x="{fmt_real(cx - side / 2)}" y="{fmt_real(cy - side / 2)}" '
            f'width="{fmt_real(side)}" height="{fmt_real(side)}" fill="{fill}"/>'
        )
    out.append("</g>")

    if links:
        out.append('<g class="links" fill="none">')
        for i, link in enumerate(links):
            pts = [px(p[0], p[1]) for p in link["points"]]
            d = f"M {fmt_real(pts[0][0])} {fmt_real(pts[0][1])}"
            if len(pts) == 2:
                mx = (pts[0][0] + pts[1][0]) / 2
                my = (pts[0][1] + pts[1][1]) / 2 - 0.4 * cell * scale
                d += f" Q {fmt_real(mx)} {fmt_real(my)} {fmt_real(pts[1][0])} {fmt_real(pts[1][1])}"
            else:
                for p in pts[1:]:
                    d += f" L {fmt_real(p[0])} {fmt_real(p[1])}"
            out.append(
                f'<path class="link" d="{d}" stroke="url(#lg{i})" '
                f'stroke-width="{fmt_real(max(link["width"], 0.3))}" stroke-opacity="0.55"/>'
            )
        out.append("</g>")

    if options.show_keywords:
        out.append('<g class="keywords" font-family="sans-serif" fill="#3a3a3a">')
        for k in annotations.get("keywords", []):
            kx, ky = px(k["anchor"][0], k["anchor"][1])
            size = (0.5 + 0.3 * k["tier"]) * cell * scale * 0.6
            out.append(
                f'<text class="keyword" x="{fmt_real(kx)}" y="{fmt_real(ky)}" '
                f'font-size="{fmt_real(size)}" text-anchor="middle">{_esc(k["word"])}</text>'
            )
        out.append("</g>")

    if options.show_legend and legend:
        out.append('<g class="legend" font-family="sans-serif" font-size="10">')
        lx = width_px + 8
        for i, (label, color) in enumerate(legend):
            ly = 14 + i * 16
            out.append(
                f'<rect x="{fmt_real(lx)}" y="{fmt_real(ly)}" width="10" height="10" fill="{color}"/>'
            )
            out.append(
                f'<text x="{fmt_real(lx + 14)}" y="{fmt_real(ly + 9)}">{_esc(label)}</text>'
            )
        out.append("</g>")

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _building_colors(blank: dict, overlays: dict, options: RenderOptions):
    """Fill color per class plus the legend entries."""
    channels = overlays.get("channels", {})
    if options.color_channel is not None:
        if options.color_channel not in channels:
            raise UnknownChannelError(options.color_channel, channels)
        channel = channels[options.color_channel]
        values = channel["values"]
        if channel["kind"] == "categorical":
            palette = categorical_palette(values.values())
            colors = {cid: palette[v] for cid, v in values.items()}
            legend = sorted(palette.items())
        else:
            numeric = {cid: float(v) for cid, v in values.items()}
            top = max(numeric.values(), default=1.0) or 1.0
            colors = {cid: _shade("#c62828", 0.35 + 0.65 * v / top) for cid, v in sorted(numeric.items())}
            legend = [(f"{options.color_channel} (scaled)", "#c62828")]
        return colors, legend[:16]

    attribute_colors = overlays.get("attributes", {}).get("building_color", {})
    colors = dict(sorted(attribute_colors.items()))
    legend = []
    for channel_name, palette in sorted(overlays.get("palettes", {}).items()):
        binding_attrs = {
            b["channel"]: b["attribute"] for b in overlays.get("bindings", [])
        }
        if binding_attrs.get(channel_name) == "building_color":
            legend = sorted(palette.items())
    return colors, legend[:16]
