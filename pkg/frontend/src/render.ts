// Canvas painter: top-down 2.5D projection with extruded buildings and
// terrain steps.  Tilt leans the scene by compressing y and lifting
// elevated geometry; zero tilt is a flat map.

import { Scene, SceneBuilding } from "./scene.js";
import { Camera } from "./state.js";

export interface Projection {
  toScreen(x: number, y: number, z: number): [number, number];
  scale: number;
}

export function makeProjection(camera: Camera, width: number, height: number, scene: Scene): Projection {
  const [x0, y0, x1, y1] = scene.bounds;
  const fit = Math.min(width / (x1 - x0 + 4), height / (y1 - y0 + 4));
  const scale = fit * camera.zoom;
  const yCompress = 1 - 0.25 * camera.tilt;
  const lift = 0.9 * camera.tilt;
  const cx = width / 2 + camera.panX;
  const cy = height / 2 + camera.panY;
  const midX = (x0 + x1) / 2;
  const midY = (y0 + y1) / 2;
  return {
    toScreen(x: number, y: number, z: number): [number, number] {
      return [
        cx + (x - midX) * scale,
        cy + (y - midY) * scale * yCompress - z * lift * scale,
      ];
    },
    scale,
  };
}

function shade(hex: string, factor: number): string {
  const r = parseInt(hex.slice(1, 3), 16);
  const g = parseInt(hex.slice(3, 5), 16);
  const b = parseInt(hex.slice(5, 7), 16);
  const f = Math.max(0, Math.min(factor, 1.6));
  const c = (v: number) => Math.max(0, Math.min(255, Math.round(v * f)));
  return `rgb(${c(r)},${c(g)},${c(b)})`;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  camera: Camera,
  highlighted: Set<number>,
  selected: string | null,
  width: number,
  height: number,
): void {
  const proj = makeProjection(camera, width, height, scene);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#f4f1ea";
  ctx.fillRect(0, 0, width, height);

  for (const block of scene.blocks) {
    const [ax, ay] = proj.toScreen(block.rect[0], block.rect[1], 0);
    const [bx, by] = proj.toScreen(block.rect[2], block.rect[3], 0);
    ctx.fillStyle = "#ddd5c4";
    ctx.fillRect(ax, ay, bx - ax, by - ay);
  }

  for (const street of scene.streets) {
    const [ax, ay] = proj.toScreen(street.rect[0], street.rect[1], 0);
    const [bx, by] = proj.toScreen(street.rect[2], street.rect[3], 0);
    ctx.fillStyle = street.kind === "separator" ? "#b9c4cf" : "#9aa4ae";
    ctx.fillRect(ax, ay, bx - ax, by - ay);
  }

  const anyHighlight = highlighted.size > 0;
  for (const link of scene.links) {
    const on = highlighted.has(link.index);
    if (anyHighlight && !on) {
      ctx.strokeStyle = "rgba(120,120,120,0.08)";
    } else {
      ctx.strokeStyle = on ? "rgba(200,60,40,0.9)" : "rgba(90,130,90,0.25)";
    }
    ctx.lineWidth = Math.max(on ? link.width * 1.5 : link.width, 0.5);
    ctx.beginPath();
    link.points.forEach(([x, y, z], i) => {
      const [sx, sy] = proj.toScreen(x, y, z);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.stroke();
  }

  // painter's order: back (small y) first, then by elevation
  const ordered = [...scene.buildings].sort(
    (a, b) => a.y - b.y || a.elevation - b.elevation || (a.classId < b.classId ? -1 : 1),
  );
  for (const b of ordered) {
    drawBuilding(ctx, proj, b, b.classId === selected);
  }

  ctx.textAlign = "center";
  ctx.fillStyle = "#333";
  for (const k of scene.keywords) {
    const [sx, sy] = proj.toScreen(k.x, k.y, 1.6);
    ctx.font = `${Math.max(9, (7 + 3 * k.tier) * (proj.scale / 14))}px sans-serif`;
    ctx.fillText(k.word, sx, sy);
  }
}

function drawBuilding(
  ctx: CanvasRenderingContext2D,
  proj: Projection,
  b: SceneBuilding,
  isSelected: boolean,
): void {
  const half = b.size / 2;
  const base = b.elevation;
  const top = b.elevation + b.height;
  const [ax, ay] = proj.toScreen(b.x - half, b.y - half, top);
  const [bx, by] = proj.toScreen(b.x + half, b.y + half, top);
  const [gx0, gy0] = proj.toScreen(b.x - half, b.y + half, base);
  const [gx1, gy1] = proj.toScreen(b.x + half, b.y + half, base);
  const color = shade(b.color, 0.6 + 0.8 * b.brightness);

  // south face of the extrusion
  ctx.fillStyle = shade(b.color, 0.45 + 0.5 * b.brightness);
  ctx.beginPath();
  ctx.moveTo(ax, by);
  ctx.lineTo(bx, by);
  ctx.lineTo(gx1, gy1);
  ctx.lineTo(gx0, gy0);
  ctx.closePath();
  ctx.fill();

  // roof
  ctx.fillStyle = color;
  ctx.fillRect(ax, ay, bx - ax, by - ay);
  if (isSelected) {
    ctx.strokeStyle = "#1348c2";
    ctx.lineWidth = 2;
    ctx.strokeRect(ax, ay, bx - ax, by - ay);
  }
  if (b.ornament) {
    ctx.fillStyle = "#c62828";
    const [mx, my] = proj.toScreen(b.x, b.y, b.elevation + b.height);
    ctx.beginPath();
    ctx.arc(mx, my, Math.max(2, proj.scale * 0.12), 0, Math.PI * 2);
    ctx.fill();
  }
}

// Hit test in screen space against building roofs; nearest roof wins.
export function hitTest(
  scene: Scene,
  camera: Camera,
  width: number,
  height: number,
  px: number,
  py: number,
): string | null {
  const proj = makeProjection(camera, width, height, scene);
  let found: string | null = null;
  for (const b of scene.buildings) {
    const half = b.size / 2;
    const top = b.elevation + b.height;
    const [ax, ay] = proj.toScreen(b.x - half, b.y - half, top);
    const [bx, by] = proj.toScreen(b.x + half, b.y + half, top);
    if (px >= ax && px <= bx && py >= ay && py <= by) {
      found = b.classId; // later draws win, consistent with painter order
    }
  }
  return found;
}
