// DOM builders for the three surfaces: the per-attribute range controls,
// the result card, and the history rail. Numbers shown on cards are service
// response fields, formatted only; each card also carries the exact values
// in data attributes so nothing is lost to rounding.

import type { Attribute, NumericAttr, SchemaResponse } from "./api";
import type { HistoryEntry, QueryDraft } from "./state";
import { MU_CHOICES, diffEntries } from "./state";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const fmt = (x: number) => x.toFixed(3);

// Bins are half-open except the last, which closes the domain.
function binLabel(a: NumericAttr, lo: number, hi: number): string {
  const left = a.bin_edges[lo];
  const right = a.bin_edges[hi + 1];
  const closer = hi === a.size - 1 ? "]" : ")";
  return `[${left}, ${right}${closer}`;
}

export type RangeChange = (name: string, lo: number, hi: number) => void;

export function renderControls(
  host: HTMLElement,
  schema: SchemaResponse,
  draft: QueryDraft,
  onRange: RangeChange,
  onMu: (mu: number) => void,
): void {
  host.textContent = "";
  for (const a of schema.attributes) {
    host.appendChild(
      a.kind === "numeric"
        ? numericControl(a, draft, onRange)
        : categoricalControl(a, draft, onRange),
    );
  }
  host.appendChild(muControl(draft, onMu));
}

function numericControl(
  a: NumericAttr,
  draft: QueryDraft,
  onRange: RangeChange,
): HTMLElement {
  const wrap = el("div", "control");
  wrap.dataset.attr = a.name;
  wrap.appendChild(el("label", "control-name", a.name));

  const lo = el("input", "lo");
  lo.type = "range";
  lo.min = "0";
  lo.max = String(a.size - 1);
  lo.step = "1";
  const hi = el("input", "hi");
  hi.type = "range";
  hi.min = "0";
  hi.max = String(a.size - 1);
  hi.step = "1";

  const label = el("span", "range-label");
  const sync = () => {
    const r = draft.ranges[a.name];
    lo.value = String(r.lo);
    hi.value = String(r.hi);
    const text = `bins ${r.lo}..${r.hi} = ${binLabel(a, r.lo, r.hi)}`;
    label.textContent = text;
    lo.title = text;
    hi.title = text;
  };
  const changed = () => {
    let l = Number(lo.value);
    let h = Number(hi.value);
    // Sliders can cross; keep the pair ordered rather than erroring.
    if (l > h) [l, h] = [h, l];
    onRange(a.name, l, h);
    sync();
  };
  lo.addEventListener("input", changed);
  hi.addEventListener("input", changed);
  sync();

  wrap.append(lo, hi, label);
  return wrap;
}

function categoricalControl(
  a: Attribute & { kind: "categorical" },
  draft: QueryDraft,
  onRange: RangeChange,
): HTMLElement {
  const wrap = el("div", "control");
  wrap.dataset.attr = a.name;
  wrap.appendChild(el("label", "control-name", a.name));

  const select = el("select") as HTMLSelectElement;
  select.multiple = true;
  select.size = Math.min(a.categories.length, 6);
  a.categories.forEach((c, i) => {
    const opt = document.createElement("option");
    opt.value = String(i);
    opt.textContent = c;
    select.appendChild(opt);
  });

  const label = el("span", "range-label");
  const sync = () => {
    const r = draft.ranges[a.name];
    for (const opt of Array.from(select.options)) {
      const i = Number(opt.value);
      opt.selected = i >= r.lo && i <= r.hi;
    }
    label.textContent = `${a.categories[r.lo]}..${a.categories[r.hi]}`;
  };
  select.addEventListener("change", () => {
    const picked = Array.from(select.options)
      .filter((o) => o.selected)
      .map((o) => Number(o.value));
    // Categories are ordered, and blocks cover contiguous index spans, so a
    // scattered selection collapses to its span. Nothing picked means the
    // whole attribute.
    const lo = picked.length ? Math.min(...picked) : 0;
    const hi = picked.length ? Math.max(...picked) : a.size - 1;
    onRange(a.name, lo, hi);
    sync();
  });
  sync();

  wrap.append(select, label);
  return wrap;
}

function muControl(draft: QueryDraft, onMu: (mu: number) => void): HTMLElement {
  const wrap = el("div", "control control-mu");
  wrap.dataset.attr = "__mu__";
  wrap.appendChild(el("label", "control-name", "μ"));
  const select = el("select", "mu-select") as HTMLSelectElement;
  for (const mu of MU_CHOICES) {
    const opt = document.createElement("option");
    opt.value = String(mu);
    opt.textContent = `${mu} (${pct(mu)} confidence)`;
    select.appendChild(opt);
  }
  select.value = String(draft.mu);
  select.addEventListener("change", () => onMu(Number(select.value)));
  wrap.appendChild(select);
  return wrap;
}

// Push draft values back into existing controls after a programmatic change
// (block-map click, history re-run). Rebuilding would drop focus state.
export function syncControls(host: HTMLElement, schema: SchemaResponse, draft: QueryDraft): void {
  for (const a of schema.attributes) {
    const wrap = host.querySelector<HTMLElement>(`[data-attr="${a.name}"]`);
    if (!wrap) continue;
    const r = draft.ranges[a.name];
    if (a.kind === "numeric") {
      const lo = wrap.querySelector<HTMLInputElement>("input.lo");
      const hi = wrap.querySelector<HTMLInputElement>("input.hi");
      const label = wrap.querySelector<HTMLElement>(".range-label");
      if (lo) lo.value = String(r.lo);
      if (hi) hi.value = String(r.hi);
      if (label) label.textContent = `bins ${r.lo}..${r.hi} = ${binLabel(a, r.lo, r.hi)}`;
    } else {
      const select = wrap.querySelector<HTMLSelectElement>("select");
      const label = wrap.querySelector<HTMLElement>(".range-label");
      if (select) {
        for (const opt of Array.from(select.options)) {
          const i = Number(opt.value);
          opt.selected = i >= r.lo && i <= r.hi;
        }
      }
      if (label) label.textContent = `${a.categories[r.lo]}..${a.categories[r.hi]}`;
    }
  }
  const mu = host.querySelector<HTMLSelectElement>(".mu-select");
  if (mu) mu.value = String(draft.mu);
}

const pct = (mu: number) => `${(100 * (1 - mu)).toFixed(0)}%`;

function rangesSummary(entry: HistoryEntry): string {
  return Object.entries(entry.request.ranges)
    .map(([name, r]) => `${name}=${r.lo}..${r.hi}`)
    .join("  ");
}

export type CardActions = {
  onRerun?: (entry: HistoryEntry) => void;
  onPin?: (entry: HistoryEntry) => void;
};

export function renderCard(entry: HistoryEntry, actions: CardActions = {}): HTMLElement {
  const res = entry.response;
  const card = el("div", "card");
  card.dataset.entryId = String(entry.id);
  card.dataset.answer = String(res.answer);
  card.dataset.thetaMin = String(res.theta_min);
  card.dataset.thetaMax = String(res.theta_max);
  card.dataset.blocksTouched = String(res.blocks_touched);

  card.appendChild(el("div", "card-ranges", rangesSummary(entry)));
  const answer = el("div", "card-answer", fmt(res.answer));
  answer.title = String(res.answer);
  card.appendChild(answer);

  // The error bar spans [theta_min, theta_max] on the card's own scale;
  // uncertainty is always drawn, there is no way to hide it.
  const bar = el("div", "theta-bar");
  const fillFrom = res.theta_max > 0 ? (100 * res.theta_min) / res.theta_max : 0;
  const fill = el("span", "theta-fill");
  fill.style.left = `${fillFrom}%`;
  fill.style.width = `${100 - fillFrom}%`;
  bar.appendChild(fill);
  card.appendChild(bar);
  card.appendChild(
    el(
      "div",
      "card-theta",
      `absolute error in [${fmt(res.theta_min)}, ${fmt(res.theta_max)}] ` +
        `with probability ≥ ${pct(res.mu)}`,
    ),
  );
  card.appendChild(
    el(
      "div",
      "card-meta",
      `${res.blocks_touched} block${res.blocks_touched === 1 ? "" : "s"} touched · ` +
        `${res.elapsed_ms.toFixed(2)} ms`,
    ),
  );

  const row = el("div", "card-actions");
  if (actions.onRerun) {
    const b = el("button", "rerun", "re-run");
    b.addEventListener("click", () => actions.onRerun!(entry));
    row.appendChild(b);
  }
  if (actions.onPin) {
    const b = el("button", "pin", entry.pinned ? "unpin" : "pin");
    b.addEventListener("click", () => actions.onPin!(entry));
    row.appendChild(b);
  }
  card.appendChild(row);
  return card;
}

export function renderHistory(
  host: HTMLElement,
  entries: HistoryEntry[],
  actions: CardActions,
): void {
  host.textContent = "";
  const pinned = entries.filter((e) => e.pinned);
  if (pinned.length >= 2) {
    const compare = el("div", "compare");
    compare.appendChild(el("h3", undefined, "pinned"));
    const row = el("div", "compare-row");
    for (const e of pinned) row.appendChild(renderCard(e, actions));
    compare.appendChild(row);
    const diffs = diffEntries(pinned[0], pinned[1]);
    const list = el("ul", "compare-diff");
    for (const d of diffs.length ? diffs : ["identical inputs"]) {
      list.appendChild(el("li", undefined, d));
    }
    compare.appendChild(list);
    host.appendChild(compare);
  }
  const rail = el("div", "history-rail");
  for (const e of [...entries].reverse()) {
    rail.appendChild(renderCard(e, actions));
  }
  host.appendChild(rail);
}

export function showBanner(host: HTMLElement, message: string, onRetry?: () => void): void {
  host.textContent = "";
  const banner = el("div", "banner", message);
  if (onRetry) {
    const b = el("button", undefined, "retry");
    b.addEventListener("click", onRetry);
    banner.appendChild(b);
  }
  host.appendChild(banner);
}

export function showProblems(host: HTMLElement, problems: string[]): void {
  host.textContent = "";
  if (!problems.length) return;
  const list = el("ul", "problems");
  for (const p of problems) list.appendChild(el("li", undefined, p));
  host.appendChild(list);
}
