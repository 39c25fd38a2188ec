import { describe, expect, test } from "vitest";

import type { QueryResponse, SchemaResponse } from "../src/api";
import {
  History,
  carryDraft,
  diffEntries,
  draftProblems,
  fullDraft,
  setRange,
  toRequest,
} from "../src/state";

const schema: SchemaResponse = {
  attributes: [
    {
      name: "age",
      kind: "numeric",
      size: 8,
      bin_edges: [18, 24, 30, 36, 42, 48, 54, 60, 66],
    },
    {
      name: "city",
      kind: "categorical",
      size: 4,
      categories: ["ams", "ber", "cdg", "dub"],
    },
  ],
  blocks: 5,
  engine_version: "test",
  params: {},
};

const someResponse: QueryResponse = {
  answer: 10.5,
  theta_min: 0,
  theta_max: 20,
  mu: 0.05,
  blocks_touched: 2,
  elapsed_ms: 0.5,
};

test("full draft spans every attribute", () => {
  const draft = fullDraft(schema);
  expect(draft.ranges.age).toEqual({ lo: 0, hi: 7 });
  expect(draft.ranges.city).toEqual({ lo: 0, hi: 3 });
  expect(draft.mu).toBe(0.05);
});

test("set range replaces the pair", () => {
  const draft = fullDraft(schema);
  setRange(draft, "age", 2, 5);
  expect(draft.ranges.age).toEqual({ lo: 2, hi: 5 });
});

describe("draft validation mirrors the service", () => {
  test("a full draft is sendable", () => {
    expect(draftProblems(schema, fullDraft(schema))).toEqual([]);
  });

  test.each([
    [{ lo: 1.5, hi: 3 }, "bin indices"],
    [{ lo: -1, hi: 3 }, "outside"],
    [{ lo: 0, hi: 8 }, "outside"],
    [{ lo: 5, hi: 2 }, "lo exceeds hi"],
  ])("bad age range %o is reported", (range, needle) => {
    const draft = fullDraft(schema);
    draft.ranges.age = range;
    const problems = draftProblems(schema, draft);
    expect(problems).toHaveLength(1);
    expect(problems[0]).toContain("age");
    expect(problems[0]).toContain(needle);
  });

  test("missing attribute and bad mu are reported", () => {
    const draft = fullDraft(schema);
    delete draft.ranges.city;
    draft.mu = 1.0;
    const problems = draftProblems(schema, draft);
    expect(problems.some((p) => p.includes("city"))).toBe(true);
    expect(problems.some((p) => p.includes("μ"))).toBe(true);
  });
});

test("request body keys follow schema order regardless of edit order", () => {
  const draft = fullDraft(schema);
  setRange(draft, "city", 1, 2);
  setRange(draft, "age", 2, 5);
  const req = toRequest(schema, draft);
  expect(Object.keys(req.ranges)).toEqual(["age", "city"]);
  expect(req).toEqual({
    ranges: { age: { lo: 2, hi: 5 }, city: { lo: 1, hi: 2 } },
    mu: 0.05,
    xi: 1.0,
    by_value: false,
  });
});

describe("draft survives a schema reload", () => {
  test("valid ranges and mu are carried", () => {
    const draft = fullDraft(schema);
    setRange(draft, "age", 2, 5);
    draft.mu = 0.2;
    const carried = carryDraft(schema, draft);
    expect(carried.ranges.age).toEqual({ lo: 2, hi: 5 });
    expect(carried.mu).toBe(0.2);
  });

  test("a range that no longer fits resets to the full span", () => {
    const draft = fullDraft(schema);
    setRange(draft, "age", 2, 7);
    const shrunk: SchemaResponse = {
      ...schema,
      attributes: [
        {
          name: "age",
          kind: "numeric",
          size: 4,
          bin_edges: [18, 24, 30, 36, 42],
        },
        schema.attributes[1],
      ],
    };
    const carried = carryDraft(shrunk, draft);
    expect(carried.ranges.age).toEqual({ lo: 0, hi: 3 });
  });
});

describe("history", () => {
  test("appends are ordered and append-only", () => {
    const h = new History();
    const draft = fullDraft(schema);
    const a = h.append(toRequest(schema, draft), someResponse);
    const b = h.append(toRequest(schema, draft), someResponse);
    expect(a.id).toBeLessThan(b.id);
    expect(h.entries.map((e) => e.id)).toEqual([a.id, b.id]);
  });

  test("pinning toggles and filters", () => {
    const h = new History();
    const draft = fullDraft(schema);
    const a = h.append(toRequest(schema, draft), someResponse);
    h.append(toRequest(schema, draft), someResponse);
    h.togglePin(a.id);
    expect(h.pinned().map((e) => e.id)).toEqual([a.id]);
    h.togglePin(a.id);
    expect(h.pinned()).toEqual([]);
  });
});

test("diff between entries lists changed inputs only", () => {
  const h = new History();
  const d1 = fullDraft(schema);
  setRange(d1, "age", 2, 5);
  const d2 = fullDraft(schema);
  setRange(d2, "age", 1, 3);
  d2.mu = 0.2;
  const a = h.append(toRequest(schema, d1), someResponse);
  const b = h.append(toRequest(schema, d2), someResponse);
  const diff = diffEntries(a, b);
  expect(diff).toContain("age: 2..5 → 1..3");
  expect(diff.some((d) => d.startsWith("μ"))).toBe(true);
  expect(diff.some((d) => d.startsWith("city"))).toBe(false);
  expect(diffEntries(a, a)).toEqual([]);
});
