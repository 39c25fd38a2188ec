// Typed client for the view service. Three endpoints, JSON in and out.
// Every number the app displays comes out of these response types; the UI
// never computes counts or bounds itself.

export type NumericAttr = {
  name: string;
  kind: "numeric";
  size: number;
  bin_edges: number[];
};

export type CategoricalAttr = {
  name: string;
  kind: "categorical";
  size: number;
  categories: string[];
};

export type Attribute = NumericAttr | CategoricalAttr;

export type SchemaResponse = {
  attributes: Attribute[];
  blocks: number;
  engine_version: string;
  params: Record<string, number>;
};

export type RangeBody = { lo: number; hi: number };

export type QueryRequest = {
  ranges: Record<string, RangeBody>;
  mu: number;
  xi: number;
  by_value: boolean;
};

export type QueryResponse = {
  answer: number;
  theta_min: number;
  theta_max: number;
  mu: number;
  blocks_touched: number;
  elapsed_ms: number;
};

export type BlockRect = {
  x: [number, number];
  y: [number, number];
  density: number;
  blocks: number;
};

export type BlocksResponse = {
  attr_x: string;
  attr_y: string;
  x_size: number;
  y_size: number;
  rectangles: BlockRect[];
};

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }
}

// The request body is serialized in exactly one place so that a test (or a
// curious user) can replay the same bytes against the service directly.
export function queryBody(req: QueryRequest): string {
  return JSON.stringify(req);
}

async function asJson<T>(r: Response): Promise<T> {
  if (!r.ok) {
    let detail: unknown = r.statusText;
    try {
      const body = (await r.json()) as { detail?: unknown };
      if (body && body.detail !== undefined) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(r.status, detail);
  }
  return r.json() as Promise<T>;
}

export class Client {
  constructor(readonly base: string) {}

  schema(): Promise<SchemaResponse> {
    return fetch(`${this.base}/schema`, {
      headers: { Accept: "application/json" },
    }).then((r) => asJson<SchemaResponse>(r));
  }

  query(req: QueryRequest, signal?: AbortSignal): Promise<QueryResponse> {
    return fetch(`${this.base}/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: queryBody(req),
      signal,
    }).then((r) => asJson<QueryResponse>(r));
  }

  blocks(attrX: string, attrY: string): Promise<BlocksResponse> {
    const qs = new URLSearchParams({ attr_x: attrX, attr_y: attrY });
    return fetch(`${this.base}/blocks?${qs}`, {
      headers: { Accept: "application/json" },
    }).then((r) => asJson<BlocksResponse>(r));
  }
}
