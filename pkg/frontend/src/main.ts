// Browser entry point: fetch the served map document (or open a local
// file), then wire canvas interaction and the overlay controls.

import { MapDocument, parseDocument } from "./document.js";
import { buildScene, entityCounts } from "./scene.js";
import { drawScene, hitTest } from "./render.js";
import { LinkFilter, OverlayError, ViewerState } from "./state.js";

const canvas = document.getElementById("city") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const status = document.getElementById("status")!;
const channelSelect = document.getElementById("channel") as HTMLSelectElement;
const attributeSelect = document.getElementById("attribute") as HTMLSelectElement;
const sqrtToggle = document.getElementById("sqrt") as HTMLInputElement;
const fileInput = document.getElementById("file") as HTMLInputElement;

let state: ViewerState | null = null;

function notify(message: string): void {
  status.textContent = message;
}

function redraw(): void {
  if (!state) return;
  const scene = buildScene(state.doc, state.activeAttributes());
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  drawScene(ctx, scene, state.camera, state.highlighted(), state.selected,
            canvas.width, canvas.height);
}

function load(text: string): void {
  try {
    const doc: MapDocument = parseDocument(text);
    state = new ViewerState(doc);
    const counts = entityCounts(buildScene(doc, state.activeAttributes()));
    notify(
      `loaded: ${counts.buildings} buildings, ${counts.blocks} blocks, ` +
      `${counts.links} links, ${counts.keywords} keywords`,
    );
    channelSelect.innerHTML = "";
    for (const name of Object.keys(doc.annotations.overlays.channels).sort()) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      channelSelect.appendChild(option);
    }
    redraw();
  } catch (err) {
    state = null;
    notify(`load error: ${(err as Error).message}`);
  }
}

async function boot(): Promise<void> {
  try {
    const response = await fetch("/document");
    if (!response.ok) throw new Error(`${response.status}`);
    load(await response.text());
  } catch {
    notify("no served document; open a .sarfmap file below");
  }
}

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  file.text().then(load);
});

let dragging = false;
let lastX = 0;
let lastY = 0;
let moved = false;

canvas.addEventListener("mousedown", (e) => {
  dragging = true;
  moved = false;
  lastX = e.offsetX;
  lastY = e.offsetY;
});
canvas.addEventListener("mousemove", (e) => {
  if (!dragging || !state) return;
  state.camera.panX += e.offsetX - lastX;
  state.camera.panY += e.offsetY - lastY;
  lastX = e.offsetX;
  lastY = e.offsetY;
  moved = true;
  redraw();
});
canvas.addEventListener("mouseup", (e) => {
  dragging = false;
  if (moved || !state) return;
  const scene = buildScene(state.doc, state.activeAttributes());
  const hit = hitTest(scene, state.camera, canvas.width, canvas.height, e.offsetX, e.offsetY);
  if (hit) {
    const links = state.select(hit);
    notify(`${hit}: ${links.size} links highlighted`);
  } else {
    state.clearSelection();
    notify("selection cleared");
  }
  redraw();
});
canvas.addEventListener("wheel", (e) => {
  if (!state) return;
  e.preventDefault();
  const factor = e.deltaY < 0 ? 1.12 : 1 / 1.12;
  state.camera.zoom = Math.min(Math.max(state.camera.zoom * factor, 0.2), 12);
  redraw();
});

const tiltSlider = document.getElementById("tilt") as HTMLInputElement;
tiltSlider.addEventListener("input", () => {
  if (!state) return;
  state.camera.tilt = Number(tiltSlider.value) / 100;
  redraw();
});

for (const radio of document.querySelectorAll<HTMLInputElement>("input[name=linkfilter]")) {
  radio.addEventListener("change", () => {
    if (!state) return;
    state.setFilter(radio.value as LinkFilter);
    redraw();
  });
}

document.getElementById("apply")!.addEventListener("click", () => {
  if (!state) return;
  try {
    state.switchOverlay(
      channelSelect.value,
      attributeSelect.value,
      sqrtToggle.checked ? "sqrt" : "identity",
    );
    notify(`bound ${channelSelect.value} to ${attributeSelect.value}`);
    redraw();
  } catch (err) {
    if (err instanceof OverlayError) notify(`binding rejected: ${err.message}`);
    else throw err;
  }
});

boot();
