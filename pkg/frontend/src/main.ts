// App wiring: one draft, one in-flight query, an append-only history.
// Everything lives in this tab; pinned queries survive a refresh via
// sessionStorage, unpinned history does not.

import { ApiError, Client } from "./api";
import type { QueryRequest, QueryResponse, SchemaResponse } from "./api";
import { renderBlockMap } from "./blockmap";
import {
  renderCard,
  renderControls,
  renderHistory,
  showBanner,
  showProblems,
  syncControls,
} from "./render";
import {
  History,
  carryDraft,
  draftProblems,
  fullDraft,
  setRange,
  toRequest,
} from "./state";
import type { HistoryEntry, QueryDraft } from "./state";

const PINNED_KEY = "pview-pinned";

export interface App {
  client: Client;
  root: HTMLElement;
  ready: Promise<void>;
  schema: SchemaResponse | null;
  draft: QueryDraft;
  history: History;
  lastRequest: QueryRequest | null;
  pending: Promise<HistoryEntry | null> | null;
  submit(): Promise<HistoryEntry | null>;
  showBlockMap(attrX: string, attrY: string): Promise<void>;
  setRange(name: string, lo: number, hi: number): void;
  reloadSchema(): Promise<void>;
}

export function initApp(root: HTMLElement, base = ""): App {
  const client = new Client(base);
  const history = new History();

  root.innerHTML = `
    <div class="banner-slot"></div>
    <header>
      <h1>pview explorer</h1>
      <span class="view-info"></span>
      <button class="reload">reload schema</button>
    </header>
    <div class="controls"></div>
    <div class="problems-slot"></div>
    <button class="submit">query</button>
    <div class="result-slot"></div>
    <section class="map-section">
      <label>block map</label>
      <select class="map-x"></select>
      <select class="map-y"></select>
      <button class="map-load">show</button>
      <span class="map-hint"></span>
      <div class="map-host"></div>
    </section>
    <section class="history-slot"></section>
  `;
  const slot = (sel: string) => root.querySelector<HTMLElement>(sel)!;
  const bannerSlot = slot(".banner-slot");
  const controlsHost = slot(".controls");
  const problemsSlot = slot(".problems-slot");
  const resultSlot = slot(".result-slot");
  const historySlot = slot(".history-slot");
  const mapHost = slot(".map-host");
  const mapX = root.querySelector<HTMLSelectElement>(".map-x")!;
  const mapY = root.querySelector<HTMLSelectElement>(".map-y")!;
  const mapLoad = root.querySelector<HTMLButtonElement>(".map-load")!;

  let inFlight: AbortController | null = null;

  const app: App = {
    client,
    root,
    schema: null,
    draft: { ranges: {}, mu: 0.05 },
    history,
    lastRequest: null,
    pending: null,
    ready: Promise.resolve(),
    submit,
    showBlockMap,
    setRange(name, lo, hi) {
      setRange(app.draft, name, lo, hi);
      if (app.schema) syncControls(controlsHost, app.schema, app.draft);
    },
    reloadSchema,
  };

  const cardActions = {
    onRerun(entry: HistoryEntry) {
      for (const [name, r] of Object.entries(entry.request.ranges)) {
        setRange(app.draft, name, r.lo, r.hi);
      }
      app.draft.mu = entry.request.mu;
      if (app.schema) syncControls(controlsHost, app.schema, app.draft);
      app.pending = submit();
    },
    onPin(entry: HistoryEntry) {
      history.togglePin(entry.id);
      savePinned();
      renderHistory(historySlot, history.entries, cardActions);
    },
  };

  function savePinned(): void {
    try {
      const keep = history
        .pinned()
        .map((e) => ({ request: e.request, response: e.response, at: e.at }));
      sessionStorage.setItem(PINNED_KEY, JSON.stringify(keep));
    } catch {
      // storage unavailable; pins just become tab-local
    }
  }

  function restorePinned(): void {
    try {
      const raw = sessionStorage.getItem(PINNED_KEY);
      if (!raw) return;
      const kept = JSON.parse(raw) as {
        request: QueryRequest;
        response: QueryResponse;
      }[];
      for (const k of kept) {
        const e = history.append(k.request, k.response);
        e.pinned = true;
      }
    } catch {
      // malformed or unavailable storage; start clean
    }
  }

  async function reloadSchema(): Promise<void> {
    bannerSlot.textContent = "";
    let schema: SchemaResponse;
    try {
      schema = await client.schema();
    } catch (err) {
      showBanner(
        bannerSlot,
        `cannot reach the view service: ${err instanceof Error ? err.message : err}`,
        () => void reloadSchema(),
      );
      return;
    }
    // A reload must not clobber what the user composed.
    app.draft = app.schema ? carryDraft(schema, app.draft) : fullDraft(schema);
    app.schema = schema;
    slot(".view-info").textContent =
      `${schema.blocks} blocks · engine ${schema.engine_version}`;
    renderControls(
      controlsHost,
      schema,
      app.draft,
      (name, lo, hi) => setRange(app.draft, name, lo, hi),
      (mu) => {
        app.draft.mu = mu;
      },
    );
    renderMapPickers(schema);
  }

  function renderMapPickers(schema: SchemaResponse): void {
    mapX.textContent = "";
    mapY.textContent = "";
    const names = schema.attributes.map((a) => a.name);
    for (const sel of [mapX, mapY]) {
      for (const n of names) {
        const opt = document.createElement("option");
        opt.value = n;
        opt.textContent = n;
        sel.appendChild(opt);
      }
    }
    const single = names.length < 2;
    mapX.disabled = single;
    mapY.disabled = single;
    mapLoad.disabled = single;
    slot(".map-hint").textContent = single
      ? "needs at least two attributes"
      : "";
    if (!single) {
      mapX.value = names[0];
      mapY.value = names[1];
    }
  }

  async function submit(): Promise<HistoryEntry | null> {
    if (!app.schema) return null;
    const problems = draftProblems(app.schema, app.draft);
    showProblems(problemsSlot, problems);
    if (problems.length) return null;

    // One query in flight per draft: a resubmit cancels its predecessor.
    inFlight?.abort();
    const controller = new AbortController();
    inFlight = controller;

    const request = toRequest(app.schema, app.draft);
    app.lastRequest = request;
    let response: QueryResponse;
    try {
      response = await client.query(request, controller.signal);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return null;
      if (err instanceof ApiError) {
        showProblems(problemsSlot, describeApiError(err));
        return null;
      }
      showBanner(
        bannerSlot,
        `query failed: ${err instanceof Error ? err.message : err}`,
      );
      return null;
    }
    if (inFlight !== controller) return null;
    inFlight = null;

    const entry = history.append(request, response);
    resultSlot.textContent = "";
    resultSlot.appendChild(renderCard(entry, cardActions));
    renderHistory(historySlot, history.entries, cardActions);
    return entry;
  }

  async function showBlockMap(attrX: string, attrY: string): Promise<void> {
    let blocks;
    try {
      blocks = await client.blocks(attrX, attrY);
    } catch (err) {
      showBanner(
        bannerSlot,
        `block map failed: ${err instanceof Error ? err.message : err}`,
      );
      return;
    }
    renderBlockMap(mapHost, blocks, (xr, yr) => {
      // The explore loop: a clicked rectangle becomes the next draft.
      setRange(app.draft, attrX, xr[0], xr[1]);
      setRange(app.draft, attrY, yr[0], yr[1]);
      if (app.schema) syncControls(controlsHost, app.schema, app.draft);
    });
  }

  slot(".submit").addEventListener("click", () => {
    app.pending = submit();
  });
  slot(".reload").addEventListener("click", () => void reloadSchema());
  mapLoad.addEventListener("click", () => {
    void showBlockMap(mapX.value, mapY.value);
  });

  restorePinned();
  app.ready = reloadSchema().then(() => {
    if (history.entries.length) {
      renderHistory(historySlot, history.entries, cardActions);
    }
  });
  return app;
}

function describeApiError(err: ApiError): string[] {
  // FastAPI sends either a plain-string detail or a list of field errors.
  if (typeof err.detail === "string") return [err.detail];
  if (Array.isArray(err.detail)) {
    return err.detail.map((d) => {
      const loc = Array.isArray(d.loc) ? d.loc.join(".") : String(d.loc);
      return `${loc}: ${d.msg}`;
    });
  }
  return [err.message];
}

const autoRoot = typeof document !== "undefined" && document.getElementById("app");
if (autoRoot) {
  const api = new URLSearchParams(location.search).get("api") ?? "";
  initApp(autoRoot, api);
}
