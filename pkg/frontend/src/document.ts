// Map document model: parsing and validation of .sarfmap JSON.
// Loading is atomic: parseDocument either returns a fully validated
// document or throws, never a partial object.

export const SCHEMA = "sarfmap/1";

export class DocumentError extends Error {}

export interface BlockRec {
  cluster: number;
  origin: [number, number];
  width: number;
  depth: number;
  street: number | null;
  levels: number;
}

export interface BuildingRec {
  class: string;
  cluster: number;
  col: number;
  row: number;
  level: number;
  x: number;
  y: number;
}

export interface StreetRec {
  id: number;
  kind: "branch" | "separator";
  axis: "horizontal" | "vertical";
  depth: number;
  start: [number, number];
  end: [number, number];
  width: number;
  parent: number | null;
}

export interface LinkRec {
  source: string;
  target: string;
  points: [number, number, number][];
  weight: number;
  width: number;
  source_color: string;
  target_color: string;
}

export interface KeywordRec {
  word: string;
  block: number;
  anchor_class: string;
  anchor: [number, number];
  weight: number;
  density: number;
  tier: number;
}

export interface ChannelRec {
  kind: "categorical" | "scalar" | "flag";
  values: Record<string, string | number | boolean>;
}

export interface BindingRec {
  channel: string;
  attribute: string;
  transform: "identity" | "sqrt";
}

export interface OverlaysRec {
  channels: Record<string, ChannelRec>;
  bindings: BindingRec[];
  attributes: Record<string, Record<string, string | number | boolean>>;
  palettes: Record<string, Record<string, string>>;
}

export interface MapDocument {
  schema: string;
  digest: string;
  params: Record<string, unknown>;
  blank: {
    bounds: [number, number, number, number];
    cell_size: number;
    blocks: BlockRec[];
    buildings: BuildingRec[];
    streets: StreetRec[];
  };
  annotations: {
    links: LinkRec[];
    keywords: KeywordRec[];
    overlays: OverlaysRec;
  };
  reports: Record<string, unknown>;
}

function fail(message: string): never {
  throw new DocumentError(message);
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function checkPoint(v: unknown, what: string): void {
  if (!Array.isArray(v) || v.length !== 2 || !v.every(isFiniteNumber)) {
    fail(`${what} is not a 2d point`);
  }
}

export function parseDocument(text: string): MapDocument {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    fail(`not valid JSON: ${(err as Error).message}`);
  }
  const doc = raw as MapDocument;
  if (typeof doc !== "object" || doc === null) fail("document is not an object");
  if (doc.schema !== SCHEMA) fail(`unsupported schema ${String(doc.schema)}`);
  const blank = doc.blank;
  if (!blank || typeof blank !== "object") fail("missing blank map section");
  if (!Array.isArray(blank.bounds) || blank.bounds.length !== 4 || !blank.bounds.every(isFiniteNumber)) {
    fail("blank.bounds is not a 4-tuple");
  }
  if (!isFiniteNumber(blank.cell_size) || blank.cell_size <= 0) fail("bad cell size");
  if (!Array.isArray(blank.blocks) || !Array.isArray(blank.buildings) || !Array.isArray(blank.streets)) {
    fail("blank map arrays missing");
  }

  const clusters = new Set<number>();
  for (const block of blank.blocks) {
    if (!Number.isInteger(block.cluster)) fail("block without cluster id");
    checkPoint(block.origin, "block origin");
    if (!Number.isInteger(block.width) || !Number.isInteger(block.depth)) fail("block size not integral");
    clusters.add(block.cluster);
  }
  const classIds = new Set<string>();
  for (const b of blank.buildings) {
    if (typeof b.class !== "string" || b.class.length === 0) fail("building without class id");
    if (classIds.has(b.class)) fail(`duplicate building ${b.class}`);
    classIds.add(b.class);
    if (!clusters.has(b.cluster)) fail(`building ${b.class} references unknown block`);
    if (![b.col, b.row, b.level].every(Number.isInteger)) fail(`building ${b.class} grid not integral`);
    if (!isFiniteNumber(b.x) || !isFiniteNumber(b.y)) fail(`building ${b.class} has no position`);
  }
  const streetIds = new Set<number>();
  for (const s of blank.streets) {
    if (!Number.isInteger(s.id)) fail("street without id");
    streetIds.add(s.id);
    checkPoint(s.start, `street ${s.id} start`);
    checkPoint(s.end, `street ${s.id} end`);
    if (s.axis !== "horizontal" && s.axis !== "vertical") fail(`street ${s.id} axis`);
  }

  const annotations = doc.annotations ?? fail("missing annotations section");
  if (!Array.isArray(annotations.links) || !Array.isArray(annotations.keywords)) {
    fail("annotation arrays missing");
  }
  for (const link of annotations.links) {
    if (!classIds.has(link.source) || !classIds.has(link.target)) {
      fail(`link ${link.source}->${link.target} references unknown class`);
    }
    if (!Array.isArray(link.points) || link.points.length < 2) fail("link without geometry");
    for (const p of link.points) {
      if (!Array.isArray(p) || p.length !== 3 || !p.every(isFiniteNumber)) fail("bad link point");
    }
  }
  const overlays = annotations.overlays;
  if (!overlays || typeof overlays.channels !== "object") fail("missing overlays section");
  for (const [name, channel] of Object.entries(overlays.channels)) {
    if (!["categorical", "scalar", "flag"].includes(channel.kind)) {
      fail(`channel ${name} has unknown kind ${String(channel.kind)}`);
    }
  }
  return doc;
}

// Adjacency of a class in the document: indices into annotations.links.
export function linkAdjacency(doc: MapDocument): Map<string, { incoming: number[]; outgoing: number[] }> {
  const out = new Map<string, { incoming: number[]; outgoing: number[] }>();
  for (const b of doc.blank.buildings) {
    out.set(b.class, { incoming: [], outgoing: [] });
  }
  doc.annotations.links.forEach((link, index) => {
    out.get(link.source)!.outgoing.push(index);
    out.get(link.target)!.incoming.push(index);
  });
  return out;
}
