// Headless viewer checks against a real pipeline-generated fixture map.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { DocumentError, linkAdjacency, parseDocument } from "../src/document.js";
import { buildScene, entityCounts, geometrySnapshot } from "../src/scene.js";
import { OverlayError, ViewerState } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtureText = readFileSync(join(here, "fixtures", "fixture.sarfmap"), "utf-8");

function freshState(): ViewerState {
  return new ViewerState(parseDocument(fixtureText));
}

describe("document loading", () => {
  it("renders exactly the document's entities", () => {
    const doc = parseDocument(fixtureText);
    const state = new ViewerState(doc);
    const counts = entityCounts(buildScene(doc, state.activeAttributes()));
    expect(counts.buildings).toBe(doc.blank.buildings.length);
    expect(counts.blocks).toBe(doc.blank.blocks.length);
    expect(counts.streets).toBe(doc.blank.streets.length);
    expect(counts.links).toBe(doc.annotations.links.length);
    expect(counts.keywords).toBe(doc.annotations.keywords.length);
  });

  it("puts buildings on stepped terrain from their levels", () => {
    const doc = parseDocument(fixtureText);
    const state = new ViewerState(doc);
    const scene = buildScene(doc, state.activeAttributes());
    const elevations = new Set(scene.buildings.map((b) => b.elevation));
    expect(Math.min(...elevations)).toBe(0);
    expect(elevations.size).toBeGreaterThan(1); // more than one level step
    // within a block, lower level index (north) means higher ground
    const byClass = new Map(scene.buildings.map((b) => [b.classId, b]));
    for (const block of doc.blank.blocks) {
      const members = doc.blank.buildings.filter((b) => b.cluster === block.cluster);
      for (const a of members) {
        for (const b of members) {
          if (a.level < b.level) {
            expect(byClass.get(a.class)!.elevation).toBeGreaterThanOrEqual(
              byClass.get(b.class)!.elevation,
            );
          }
        }
      }
    }
  });

  it("rejects corrupt bytes without a partial scene", () => {
    expect(() => parseDocument("not json at all")).toThrow(DocumentError);
    expect(() => parseDocument('{"schema": "something/9"}')).toThrow(DocumentError);
    const doc = JSON.parse(fixtureText);
    doc.blank.buildings[0].x = "broken";
    expect(() => parseDocument(JSON.stringify(doc))).toThrow(DocumentError);
  });

  it("never mutates the loaded document", () => {
    const doc = parseDocument(fixtureText);
    const before = JSON.stringify(doc);
    const state = new ViewerState(doc);
    state.select(doc.blank.buildings[0].class);
    state.switchOverlay("methods", "building_height", "sqrt");
    state.setFilter("selected-in");
    buildScene(doc, state.activeAttributes());
    expect(JSON.stringify(doc)).toBe(before);
  });
});

describe("link analysis", () => {
  it("highlights exactly the document adjacency of the selected class", () => {
    const state = freshState();
    const doc = state.doc;
    const adjacency = linkAdjacency(doc);
    for (const building of doc.blank.buildings) {
      const got = state.select(building.class);
      const entry = adjacency.get(building.class)!;
      const expected = new Set([...entry.incoming, ...entry.outgoing]);
      expect(got).toEqual(expected);
    }
  });

  it("counts in and out links separately under filters", () => {
    const state = freshState();
    const doc = state.doc;
    // pick a class that has both kinds of links
    const adjacency = linkAdjacency(doc);
    const classId = doc.blank.buildings
      .map((b) => b.class)
      .find((c) => adjacency.get(c)!.incoming.length > 0 && adjacency.get(c)!.outgoing.length > 0)!;
    state.select(classId);
    state.setFilter("selected-in");
    expect(state.highlighted()).toEqual(new Set(adjacency.get(classId)!.incoming));
    state.setFilter("selected-out");
    expect(state.highlighted()).toEqual(new Set(adjacency.get(classId)!.outgoing));
    state.setFilter("selected-both");
    expect(state.highlighted()).toEqual(
      new Set([...adjacency.get(classId)!.incoming, ...adjacency.get(classId)!.outgoing]),
    );
  });

  it("is idempotent on re-selection", () => {
    const state = freshState();
    const classId = state.doc.blank.buildings[3].class;
    const first = state.select(classId);
    const second = state.select(classId);
    expect(second).toEqual(first);
  });

  it("treats unknown ids as a no-op with a notice", () => {
    const state = freshState();
    const classId = state.doc.blank.buildings[0].class;
    const before = state.select(classId);
    const after = state.select("ghost-class");
    expect(after).toEqual(before);
    expect(state.selected).toBe(classId);
    expect(state.notices.some((n) => n.includes("ghost-class"))).toBe(true);
  });
});

describe("overlay switching", () => {
  it("leaves scene geometry byte-identical", () => {
    const state = freshState();
    const doc = state.doc;
    const before = geometrySnapshot(buildScene(doc, state.activeAttributes()));
    state.switchOverlay("methods", "building_color");
    state.switchOverlay("changed", "building_ornament");
    const after = geometrySnapshot(buildScene(doc, state.activeAttributes()));
    expect(after).toBe(before);
  });

  it("drives heights by sqrt-transformed scalars", () => {
    const state = freshState();
    state.switchOverlay("methods", "building_height", "sqrt");
    const heights = state.activeAttributes()["building_height"];
    const raw = state.doc.annotations.overlays.channels["methods"].values;
    for (const [classId, value] of Object.entries(raw)) {
      expect(heights[classId]).toBeCloseTo(Math.sqrt(Number(value)), 9);
    }
  });

  it("rejects unknown channels and keeps state unchanged", () => {
    const state = freshState();
    const before = state.activeAttributes();
    expect(() => state.switchOverlay("nope", "building_color")).toThrow(OverlayError);
    try {
      state.switchOverlay("nope", "building_color");
    } catch (err) {
      expect((err as Error).message).toContain("package");
    }
    expect(state.activeAttributes()).toEqual(before);
  });

  it("rejects binding to the grid position", () => {
    const state = freshState();
    expect(() => state.switchOverlay("methods", "grid_position")).toThrow(OverlayError);
  });

  it("recolors by package with a stable palette", () => {
    const state = freshState();
    state.switchOverlay("package", "building_color");
    const colors = state.activeAttributes()["building_color"];
    const packages = state.doc.annotations.overlays.channels["package"].values;
    const byPackage = new Map<string, Set<string>>();
    for (const [classId, pkg] of Object.entries(packages)) {
      const key = String(pkg);
      if (!byPackage.has(key)) byPackage.set(key, new Set());
      byPackage.get(key)!.add(String(colors[classId]));
    }
    for (const colorSet of byPackage.values()) {
      expect(colorSet.size).toBe(1); // one color per package
    }
    expect(new Set([...byPackage.values()].map((s) => [...s][0])).size).toBe(byPackage.size);
  });
});
