// Session state: the query draft being composed and the append-only history
// of submitted queries. Draft validation mirrors what the service enforces
// so mistakes surface before a request goes out.

import type {
  Attribute,
  QueryRequest,
  QueryResponse,
  SchemaResponse,
} from "./api";

export type DraftRange = { lo: number; hi: number };

export type QueryDraft = {
  ranges: Record<string, DraftRange>;
  mu: number;
};

export const MU_CHOICES = [0.01, 0.05, 0.1, 0.2];

export function fullDraft(schema: SchemaResponse): QueryDraft {
  const ranges: Record<string, DraftRange> = {};
  for (const a of schema.attributes) {
    ranges[a.name] = { lo: 0, hi: a.size - 1 };
  }
  return { ranges, mu: 0.05 };
}

// Keep whatever the user already composed when the schema is refetched, as
// long as the attribute still exists with the same extent.
export function carryDraft(schema: SchemaResponse, old: QueryDraft): QueryDraft {
  const next = fullDraft(schema);
  next.mu = old.mu;
  for (const a of schema.attributes) {
    const prev = old.ranges[a.name];
    if (prev && prev.lo >= 0 && prev.hi < a.size && prev.lo <= prev.hi) {
      next.ranges[a.name] = { ...prev };
    }
  }
  return next;
}

export function setRange(draft: QueryDraft, name: string, lo: number, hi: number): void {
  draft.ranges[name] = { lo, hi };
}

// One message per broken attribute, same rules the service applies: integer
// bin indices, inside the domain, lo not past hi. Empty list means sendable.
export function draftProblems(schema: SchemaResponse, draft: QueryDraft): string[] {
  const problems: string[] = [];
  if (!(draft.mu > 0 && draft.mu < 1)) {
    problems.push(`μ must lie strictly between 0 and 1 (got ${draft.mu})`);
  }
  for (const a of schema.attributes) {
    const r = draft.ranges[a.name];
    if (!r) {
      problems.push(`${a.name}: no range selected`);
      continue;
    }
    if (!Number.isInteger(r.lo) || !Number.isInteger(r.hi)) {
      problems.push(`${a.name}: endpoints must be bin indices`);
    } else if (r.lo < 0 || r.hi >= a.size) {
      problems.push(`${a.name}: range ${r.lo}..${r.hi} outside 0..${a.size - 1}`);
    } else if (r.lo > r.hi) {
      problems.push(`${a.name}: lo exceeds hi`);
    }
  }
  return problems;
}

// Ranges are emitted in schema attribute order so the serialized body is
// stable for a given draft regardless of edit order.
export function toRequest(schema: SchemaResponse, draft: QueryDraft): QueryRequest {
  const ranges: Record<string, { lo: number; hi: number }> = {};
  for (const a of schema.attributes) {
    const r = draft.ranges[a.name];
    ranges[a.name] = { lo: r.lo, hi: r.hi };
  }
  return { ranges, mu: draft.mu, xi: 1.0, by_value: false };
}

export type HistoryEntry = {
  id: number;
  request: QueryRequest;
  response: QueryResponse;
  at: number;
  pinned: boolean;
};

export class History {
  entries: HistoryEntry[] = [];
  private nextId = 1;

  append(request: QueryRequest, response: QueryResponse): HistoryEntry {
    const entry: HistoryEntry = {
      id: this.nextId++,
      request,
      response,
      at: Date.now(),
      pinned: false,
    };
    this.entries.push(entry);
    return entry;
  }

  togglePin(id: number): void {
    const e = this.entries.find((x) => x.id === id);
    if (e) e.pinned = !e.pinned;
  }

  pinned(): HistoryEntry[] {
    return this.entries.filter((e) => e.pinned);
  }
}

// Human-readable differences between two submitted queries, for comparing
// pinned entries. Only inputs are diffed; the cards already show outputs.
export function diffEntries(a: HistoryEntry, b: HistoryEntry): string[] {
  const out: string[] = [];
  const names = new Set([
    ...Object.keys(a.request.ranges),
    ...Object.keys(b.request.ranges),
  ]);
  for (const name of names) {
    const ra = a.request.ranges[name];
    const rb = b.request.ranges[name];
    if (!ra || !rb) {
      out.push(`${name}: only in one query`);
    } else if (ra.lo !== rb.lo || ra.hi !== rb.hi) {
      out.push(`${name}: ${ra.lo}..${ra.hi} → ${rb.lo}..${rb.hi}`);
    }
  }
  if (a.request.mu !== b.request.mu) {
    out.push(`μ: ${a.request.mu} → ${b.request.mu}`);
  }
  return out;
}
