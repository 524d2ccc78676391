// Viewer state: camera, selection, link filter and overlay switching.
// The loaded document is never mutated; switching overlays only recomputes
// the attribute maps fed to the scene builder.

import { MapDocument, linkAdjacency } from "./document.js";

export type LinkFilter = "all" | "selected-in" | "selected-out" | "selected-both";

export type Transform = "identity" | "sqrt";

export class OverlayError extends Error {}

export interface Camera {
  panX: number;
  panY: number;
  zoom: number;
  tilt: number; // 0 = straight top-down, 1 = maximum lean
}

const BINDABLE = new Set([
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
]);
const POSITION_ALIASES = new Set(["position", "grid_position", "building_position", "x", "y", "col", "row"]);

export function resolveBinding(
  doc: MapDocument,
  channelName: string,
  attribute: string,
  transform: Transform,
): Record<string, string | number | boolean> {
  if (POSITION_ALIASES.has(attribute)) {
    throw new OverlayError("the grid position of a building cannot be bound");
  }
  if (!BINDABLE.has(attribute)) {
    throw new OverlayError(`unknown attribute ${attribute}`);
  }
  const channel = doc.annotations.overlays.channels[channelName];
  if (!channel) {
    const known = Object.keys(doc.annotations.overlays.channels).sort().join(", ");
    throw new OverlayError(`unknown channel ${channelName}; available: ${known}`);
  }
  const resolved: Record<string, string | number | boolean> = {};
  if (channel.kind === "categorical") {
    const palette =
      doc.annotations.overlays.palettes[channelName] ?? buildPalette(channel.values);
    for (const [classId, value] of Object.entries(channel.values)) {
      resolved[classId] = palette[String(value)] ?? "#9e9e9e";
    }
  } else if (channel.kind === "scalar") {
    for (const [classId, value] of Object.entries(channel.values)) {
      let v = Number(value);
      if (transform === "sqrt") {
        if (v < 0) throw new OverlayError(`sqrt of negative value for ${classId}`);
        v = Math.sqrt(v);
      }
      resolved[classId] = v;
    }
  } else {
    for (const [classId, value] of Object.entries(channel.values)) {
      resolved[classId] = value === true;
    }
  }
  return resolved;
}

// Hue-spread palette over sorted categories (near names, near colors).
export function buildPalette(values: Record<string, unknown>): Record<string, string> {
  const categories = Array.from(new Set(Object.values(values).map(String))).sort();
  const palette: Record<string, string> = {};
  const n = Math.max(categories.length, 1);
  categories.forEach((cat, i) => {
    palette[cat] = hsvHex(i / n, 0.55, 0.82);
  });
  return palette;
}

function hsvHex(h: number, s: number, v: number): string {
  const i = Math.floor(h * 6);
  const f = h * 6 - i;
  const p = v * (1 - s);
  const q = v * (1 - f * s);
  const t = v * (1 - (1 - f) * s);
  const [r, g, b] = [
    [v, t, p], [q, v, p], [p, v, t], [p, q, v], [t, p, v], [v, p, q],
  ][i % 6];
  const hex = (x: number) => Math.round(x * 255).toString(16).padStart(2, "0");
  return `#${hex(r)}${hex(g)}${hex(b)}`;
}

export class ViewerState {
  readonly doc: MapDocument;
  camera: Camera = { panX: 0, panY: 0, zoom: 1, tilt: 0.5 };
  filter: LinkFilter = "all";
  selected: string | null = null;
  notices: string[] = [];
  private adjacency;
  private attributes: Record<string, Record<string, string | number | boolean>>;

  constructor(doc: MapDocument) {
    this.doc = doc;
    this.adjacency = linkAdjacency(doc);
    // start from the attribute maps resolved by the map maker
    this.attributes = { ...doc.annotations.overlays.attributes };
  }

  activeAttributes(): Record<string, Record<string, string | number | boolean>> {
    return this.attributes;
  }

  // Select a building; returns the set of highlighted link indices
  // (exactly the document adjacency of the class).
  select(classId: string): Set<number> {
    if (!this.adjacency.has(classId)) {
      this.notices.push(`no such class: ${classId}`);
      return this.highlighted();
    }
    this.selected = classId;
    return this.highlighted();
  }

  clearSelection(): void {
    this.selected = null;
  }

  highlighted(): Set<number> {
    if (this.selected === null) return new Set();
    const entry = this.adjacency.get(this.selected)!;
    switch (this.filter) {
      case "selected-in":
        return new Set(entry.incoming);
      case "selected-out":
        return new Set(entry.outgoing);
      default:
        return new Set([...entry.incoming, ...entry.outgoing]);
    }
  }

  setFilter(filter: LinkFilter): void {
    this.filter = filter;
  }

  // Re-bind a channel to an attribute; geometry is untouched.  On error
  // the previous state is kept.
  switchOverlay(channelName: string, attribute: string, transform: Transform = "identity"): void {
    const resolved = resolveBinding(this.doc, channelName, attribute, transform);
    this.attributes = { ...this.attributes, [attribute]: resolved };
  }

  clearAttribute(attribute: string): void {
    const next = { ...this.attributes };
    delete next[attribute];
    this.attributes = next;
  }
}
