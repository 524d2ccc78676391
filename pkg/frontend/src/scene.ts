// Scene model: what gets drawn, derived from a map document plus the
// active overlay bindings.  Geometry (footprints, streets, terrain steps)
// comes only from the blank map and never changes when overlays switch.

import { MapDocument } from "./document.js";

export const DEFAULT_COLOR = "#9e9e9e";
export const LEVEL_RISE = 0.35; // world units of terrain per level step
export const HEIGHT_SCALE = 0.6; // world units per bound height unit
export const BASE_HEIGHT = 0.8;

export interface SceneBuilding {
  classId: string;
  cluster: number;
  // footprint in world units
  x: number;
  y: number;
  size: number;
  elevation: number; // terrain step from the level slope
  height: number; // extrusion, possibly driven by a bound channel
  color: string;
  brightness: number; // 0..1 multiplier
  ornament: boolean;
}

export interface SceneStreet {
  id: number;
  kind: string;
  rect: [number, number, number, number];
}

export interface SceneBlock {
  cluster: number;
  rect: [number, number, number, number];
  levels: number;
}

export interface SceneLink {
  index: number;
  points: [number, number, number][];
  width: number;
  sourceColor: string;
  targetColor: string;
}

export interface SceneKeyword {
  word: string;
  x: number;
  y: number;
  tier: number;
}

export interface Scene {
  bounds: [number, number, number, number];
  cellSize: number;
  blocks: SceneBlock[];
  buildings: SceneBuilding[];
  streets: SceneStreet[];
  links: SceneLink[];
  keywords: SceneKeyword[];
}

function streetRect(s: { axis: string; start: [number, number]; end: [number, number]; width: number }):
  [number, number, number, number] {
  const half = s.width / 2;
  if (s.axis === "horizontal") {
    return [Math.min(s.start[0], s.end[0]), s.start[1] - half, Math.max(s.start[0], s.end[0]), s.start[1] + half];
  }
  return [s.start[0] - half, Math.min(s.start[1], s.end[1]), s.start[0] + half, Math.max(s.start[1], s.end[1])];
}

export function buildScene(
  doc: MapDocument,
  attributes: Record<string, Record<string, string | number | boolean>>,
): Scene {
  const blank = doc.blank;
  const maxLevel = new Map<number, number>();
  for (const block of blank.blocks) {
    maxLevel.set(block.cluster, block.levels - 1);
  }
  const heights = attributes["building_height"] ?? {};
  const colors = attributes["building_color"] ?? {};
  const brightness = attributes["building_brightness"] ?? {};
  const ornaments = attributes["building_ornament"] ?? {};
  let heightTop = 0;
  for (const v of Object.values(heights)) {
    heightTop = Math.max(heightTop, Number(v));
  }

  const buildings: SceneBuilding[] = blank.buildings.map((b) => {
    const bound = heights[b.class];
    const height =
      bound === undefined || heightTop <= 0
        ? BASE_HEIGHT
        : BASE_HEIGHT + HEIGHT_SCALE * Number(bound);
    const bright = brightness[b.class];
    return {
      classId: b.class,
      cluster: b.cluster,
      x: b.x,
      y: b.y,
      size: 0.72 * blank.cell_size,
      elevation: ((maxLevel.get(b.cluster) ?? 0) - b.level) * LEVEL_RISE,
      height,
      color: typeof colors[b.class] === "string" ? (colors[b.class] as string) : DEFAULT_COLOR,
      brightness: bright === undefined ? 1.0 : Math.max(0, Math.min(1, Number(bright))),
      ornament: ornaments[b.class] === true,
    };
  });

  return {
    bounds: blank.bounds,
    cellSize: blank.cell_size,
    blocks: blank.blocks.map((b) => ({
      cluster: b.cluster,
      rect: [b.origin[0], b.origin[1], b.origin[0] + b.width * blank.cell_size,
             b.origin[1] + b.depth * blank.cell_size] as [number, number, number, number],
      levels: b.levels,
    })),
    buildings,
    streets: blank.streets.map((s) => ({ id: s.id, kind: s.kind, rect: streetRect(s) })),
    links: doc.annotations.links.map((l, index) => ({
      index,
      points: l.points,
      width: l.width,
      sourceColor: l.source_color,
      targetColor: l.target_color,
    })),
    keywords: doc.annotations.keywords.map((k) => ({
      word: k.word,
      x: k.anchor[0],
      y: k.anchor[1],
      tier: k.tier,
    })),
  };
}

// Canonical string of everything positional in a scene.  Overlay switches
// must leave this byte-identical (the blank map is the shared mental model).
export function geometrySnapshot(scene: Scene): string {
  return JSON.stringify({
    bounds: scene.bounds,
    cell: scene.cellSize,
    blocks: scene.blocks.map((b) => [b.cluster, b.rect, b.levels]),
    buildings: scene.buildings.map((b) => [b.classId, b.x, b.y, b.size, b.elevation]),
    streets: scene.streets.map((s) => [s.id, s.kind, s.rect]),
    links: scene.links.map((l) => l.points),
    keywords: scene.keywords.map((k) => [k.word, k.x, k.y]),
  });
}

export function entityCounts(scene: Scene): Record<string, number> {
  return {
    blocks: scene.blocks.length,
    buildings: scene.buildings.length,
    streets: scene.streets.length,
    links: scene.links.length,
    keywords: scene.keywords.length,
  };
}
