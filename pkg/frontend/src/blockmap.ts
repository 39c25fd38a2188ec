// Two-attribute block map: the partition projected onto a plane, drawn as
// SVG rectangles shaded by noisy density. Clicking a rectangle hands its
// exact index ranges back to the caller, which is how the explore loop
// (see a region, query that region) closes.

import type { BlockRect, BlocksResponse } from "./api";

const SVG_NS = "http://www.w3.org/2000/svg";

export type RectBox = { x: number; y: number; w: number; h: number };

// Ranges are inclusive bin-index pairs, so a rect spanning [s, e] covers
// e - s + 1 cells.
export function rectBox(
  rect: BlockRect,
  xSize: number,
  ySize: number,
  width: number,
  height: number,
): RectBox {
  const cw = width / xSize;
  const ch = height / ySize;
  return {
    x: rect.x[0] * cw,
    y: rect.y[0] * ch,
    w: (rect.x[1] - rect.x[0] + 1) * cw,
    h: (rect.y[1] - rect.y[0] + 1) * ch,
  };
}

export type DensityScale = {
  min: number;
  max: number;
  fill(density: number): string;
};

export function densityScale(rects: BlockRect[]): DensityScale {
  let min = Infinity;
  let max = -Infinity;
  for (const r of rects) {
    if (r.density < min) min = r.density;
    if (r.density > max) max = r.density;
  }
  if (rects.length === 0) {
    min = 0;
    max = 0;
  }
  const span = max - min;
  return {
    min,
    max,
    fill(density: number): string {
      // Single shared density (or a single rect) still gets a visible mid tone.
      const t = span > 0 ? (density - min) / span : 0.5;
      const light = 92 - 62 * t;
      return `hsl(215, 65%, ${light.toFixed(1)}%)`;
    },
  };
}

export type PickHandler = (x: [number, number], y: [number, number]) => void;

export function renderBlockMap(
  host: HTMLElement,
  blocks: BlocksResponse,
  onPick: PickHandler,
  width = 640,
  height = 420,
): SVGSVGElement {
  host.textContent = "";
  const scale = densityScale(blocks.rectangles);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "blockmap");
  for (const rect of blocks.rectangles) {
    const box = rectBox(rect, blocks.x_size, blocks.y_size, width, height);
    const el = document.createElementNS(SVG_NS, "rect");
    el.setAttribute("x", String(box.x));
    el.setAttribute("y", String(box.y));
    el.setAttribute("width", String(box.w));
    el.setAttribute("height", String(box.h));
    el.setAttribute("fill", scale.fill(rect.density));
    el.setAttribute("class", "blockmap-rect");
    // The exact served ranges ride along on the element; the click handler
    // reads these rather than inverting pixel coordinates.
    el.dataset.x0 = String(rect.x[0]);
    el.dataset.x1 = String(rect.x[1]);
    el.dataset.y0 = String(rect.y[0]);
    el.dataset.y1 = String(rect.y[1]);
    el.dataset.density = String(rect.density);
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent =
      `${blocks.attr_x} ${rect.x[0]}..${rect.x[1]} × ` +
      `${blocks.attr_y} ${rect.y[0]}..${rect.y[1]} — ` +
      `density ${rect.density.toPrecision(4)} (${rect.blocks} block${rect.blocks === 1 ? "" : "s"})`;
    el.appendChild(tip);
    el.addEventListener("click", () => {
      onPick([rect.x[0], rect.x[1]], [rect.y[0], rect.y[1]]);
    });
    svg.appendChild(el);
  }
  host.appendChild(svg);
  host.appendChild(renderLegend(scale));
  return svg;
}

function renderLegend(scale: DensityScale): HTMLElement {
  const legend = document.createElement("div");
  legend.className = "blockmap-legend";
  legend.dataset.min = String(scale.min);
  legend.dataset.max = String(scale.max);

  const lo = document.createElement("span");
  lo.className = "legend-swatch";
  lo.style.background = scale.fill(scale.min);
  const hi = document.createElement("span");
  hi.className = "legend-swatch";
  hi.style.background = scale.fill(scale.max);

  const label = document.createElement("span");
  label.textContent = `density ${scale.min.toPrecision(4)} .. ${scale.max.toPrecision(4)}`;

  legend.append(lo, label, hi);
  return legend;
}
