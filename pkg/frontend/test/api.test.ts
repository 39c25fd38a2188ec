import { afterEach, expect, test, vi } from "vitest";

import { ApiError, Client, queryBody } from "../src/api";
import type { QueryRequest } from "../src/api";

function jsonResponse(data: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: status === 200 ? "OK" : "ERR",
    json: async () => data,
  } as unknown as Response;
}

function textResponse(status: number, statusText: string): Response {
  return {
    ok: false,
    status,
    statusText,
    json: async () => {
      throw new Error("not json");
    },
  } as unknown as Response;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

const req: QueryRequest = {
  ranges: { age: { lo: 2, hi: 5 }, city: { lo: 1, hi: 2 } },
  mu: 0.2,
  xi: 1.0,
  by_value: false,
};

test("query body serialization is stable and explicit", () => {
  expect(queryBody(req)).toBe(
    '{"ranges":{"age":{"lo":2,"hi":5},"city":{"lo":1,"hi":2}},"mu":0.2,"xi":1,"by_value":false}',
  );
});

test("schema() GETs /schema", async () => {
  const fetchMock = vi.fn(async () => jsonResponse({ attributes: [] }));
  vi.stubGlobal("fetch", fetchMock);
  const got = await new Client("http://x").schema();
  expect(got).toEqual({ attributes: [] });
  expect(fetchMock).toHaveBeenCalledWith("http://x/schema", {
    headers: { Accept: "application/json" },
  });
});

test("query() POSTs the exact body bytes", async () => {
  const fetchMock = vi.fn(async () => jsonResponse({ answer: 1 }));
  vi.stubGlobal("fetch", fetchMock);
  await new Client("").query(req);
  const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
  expect(url).toBe("/query");
  expect(init.method).toBe("POST");
  expect(init.body).toBe(queryBody(req));
  expect((init.headers as Record<string, string>)["Content-Type"]).toBe(
    "application/json",
  );
});

test("query() passes the abort signal through", async () => {
  const fetchMock = vi.fn(async () => jsonResponse({ answer: 1 }));
  vi.stubGlobal("fetch", fetchMock);
  const controller = new AbortController();
  await new Client("").query(req, controller.signal);
  const [, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
  expect(init.signal).toBe(controller.signal);
});

test("blocks() encodes attribute names", async () => {
  const fetchMock = vi.fn(async () => jsonResponse({ rectangles: [] }));
  vi.stubGlobal("fetch", fetchMock);
  await new Client("").blocks("zip code", "city");
  const [url] = fetchMock.mock.calls[0] as unknown as [string];
  expect(url).toBe("/blocks?attr_x=zip+code&attr_y=city");
});

test("a string detail becomes the error message", async () => {
  vi.stubGlobal(
    "fetch",
    vi.fn(async () => jsonResponse({ detail: "mu must lie strictly between 0 and 1" }, 400)),
  );
  const err = await new Client("").schema().catch((e) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect(err.status).toBe(400);
  expect(err.detail).toBe("mu must lie strictly between 0 and 1");
});

test("field-error details are preserved as data", async () => {
  const detail = [{ loc: ["body", "ranges", "age", "hi"], msg: "Field required" }];
  vi.stubGlobal("fetch", vi.fn(async () => jsonResponse({ detail }, 400)));
  const err = await new Client("").query(req).catch((e) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect(err.detail).toEqual(detail);
});

test("a non-JSON error body falls back to the status text", async () => {
  vi.stubGlobal("fetch", vi.fn(async () => textResponse(502, "Bad Gateway")));
  const err = await new Client("").schema().catch((e) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect(err.status).toBe(502);
  expect(err.detail).toBe("Bad Gateway");
});
