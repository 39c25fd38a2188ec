import { expect, test, vi } from "vitest";

import type { BlocksResponse } from "../src/api";
import { densityScale, rectBox, renderBlockMap } from "../src/blockmap";

const twoRects: BlocksResponse = {
  attr_x: "age",
  attr_y: "city",
  x_size: 8,
  y_size: 4,
  rectangles: [
    { x: [0, 3], y: [0, 3], density: 0.5, blocks: 1 },
    { x: [4, 7], y: [0, 3], density: 4.25, blocks: 3 },
  ],
};

test("a rect spanning the whole domain fills the plane", () => {
  const box = rectBox({ x: [0, 7], y: [0, 3], density: 1, blocks: 1 }, 8, 4, 640, 420);
  expect(box).toEqual({ x: 0, y: 0, w: 640, h: 420 });
});

test("inclusive ranges map to abutting pixel boxes", () => {
  const [a, b] = twoRects.rectangles;
  const boxA = rectBox(a, 8, 4, 640, 420);
  const boxB = rectBox(b, 8, 4, 640, 420);
  expect(boxA.w).toBe(320);
  expect(boxA.x + boxA.w).toBe(boxB.x);
  expect(boxB.x + boxB.w).toBe(640);
});

test("density scale endpoints are the served extremes", () => {
  const scale = densityScale(twoRects.rectangles);
  expect(scale.min).toBe(0.5);
  expect(scale.max).toBe(4.25);
});

test("denser rectangles are darker", () => {
  const scale = densityScale(twoRects.rectangles);
  const lightness = (fill: string) => Number(/ ([\d.]+)%\)$/.exec(fill)![1]);
  expect(lightness(scale.fill(4.25))).toBeLessThan(lightness(scale.fill(0.5)));
});

test("a single shared density still renders a finite tone", () => {
  const scale = densityScale([{ x: [0, 7], y: [0, 3], density: 2, blocks: 1 }]);
  expect(scale.fill(2)).toMatch(/^hsl\(/);
  expect(scale.fill(2)).not.toContain("NaN");
});

test("render draws one rect per served rectangle", () => {
  const host = document.createElement("div");
  renderBlockMap(host, twoRects, () => {});
  expect(host.querySelectorAll("rect")).toHaveLength(2);
  expect(host.querySelectorAll("svg")).toHaveLength(1);
});

test("a single-block view renders one full-plane rectangle", () => {
  const host = document.createElement("div");
  const one: BlocksResponse = {
    ...twoRects,
    rectangles: [{ x: [0, 7], y: [0, 3], density: 1.5, blocks: 1 }],
  };
  renderBlockMap(host, one, () => {}, 640, 420);
  const rects = host.querySelectorAll("rect");
  expect(rects).toHaveLength(1);
  expect(rects[0].getAttribute("width")).toBe("640");
  expect(rects[0].getAttribute("height")).toBe("420");
});

test("clicking a rectangle reports its exact served ranges", () => {
  const host = document.createElement("div");
  const onPick = vi.fn();
  renderBlockMap(host, twoRects, onPick);
  const rects = host.querySelectorAll("rect");
  rects[1].dispatchEvent(new MouseEvent("click", { bubbles: true }));
  expect(onPick).toHaveBeenCalledTimes(1);
  expect(onPick).toHaveBeenCalledWith([4, 7], [0, 3]);
});

test("legend endpoints match the served densities exactly", () => {
  const host = document.createElement("div");
  renderBlockMap(host, twoRects, () => {});
  const legend = host.querySelector<HTMLElement>(".blockmap-legend")!;
  expect(legend.dataset.min).toBe("0.5");
  expect(legend.dataset.max).toBe("4.25");
  expect(legend.textContent).toContain("0.5");
  expect(legend.textContent).toContain("4.25");
});

test("hover titles carry range and density", () => {
  const host = document.createElement("div");
  renderBlockMap(host, twoRects, () => {});
  const title = host.querySelectorAll("rect")[1].querySelector("title")!;
  expect(title.textContent).toContain("age 4..7");
  expect(title.textContent).toContain("city 0..3");
  expect(title.textContent).toContain("4.250");
  expect(title.textContent).toContain("3 blocks");
});
