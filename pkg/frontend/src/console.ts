/** Browser wiring: panels, result grid, inspector drawer, tree explorer.
 *
 * All vector composition happens server-side; this layer only builds
 * QuerySpecs (spec.ts), calls the JSON API (api.ts) and renders.
 */

import { ApiClient, ApiRequestError } from "./api.js";
import { buildQuerySpec, canSubmit, MAX_WEIGHT, MIN_WEIGHT, WEIGHT_STEP } from "./spec.js";
import {
  addContextPick,
  addLike,
  emptySession,
  removeContextPick,
  restoreSession,
  serializeSession,
  type SessionState,
} from "./state.js";
import { RENDER_CAP, TreeExplorer } from "./tree.js";
import type { DocumentRecord, QuerySpec, Template, TermInput, WalkParamsInput } from "./types.js";

const api = new ApiClient("");
const docCache = new Map<string, DocumentRecord>();

const WALK_PARAMS: WalkParamsInput = { layers: 3, children: 3, neighbours: 20, seed: 0 };

let state: SessionState = emptySession();
let pendingChips: TermInput[] = [];
let inFlight: AbortController | null = null;
let renderCap = RENDER_CAP;

const explorer = new TreeExplorer((start, params) => api.walk(start, params), WALK_PARAMS);

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

function setState(next: SessionState): void {
  state = next;
  window.location.hash = serializeSession(state);
  renderFields();
  renderChipsAndPicks();
}

// -- refinement panel ----------------------------------------------------

function fieldRow(
  group: "more" | "less",
  index: number,
  field: { text: string; weight: number },
): HTMLElement {
  const row = document.createElement("div");
  row.className = "field-row";

  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = group === "more" ? "more of this…" : "less of this…";
  input.value = field.text;
  input.addEventListener("input", () => {
    state[group][index]!.text = input.value;
    syncSubmit();
    window.location.hash = serializeSession(state);
  });

  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = String(MIN_WEIGHT);
  slider.max = String(MAX_WEIGHT);
  slider.step = String(WEIGHT_STEP);
  slider.value = String(field.weight);
  const readout = document.createElement("span");
  readout.className = "weight-readout";
  readout.textContent = field.weight.toFixed(1);
  slider.addEventListener("input", () => {
    state[group][index]!.weight = Number(slider.value);
    readout.textContent = Number(slider.value).toFixed(1);
    syncSubmit();
    window.location.hash = serializeSession(state);
  });

  const remove = document.createElement("button");
  remove.textContent = "×";
  remove.title = "remove this field";
  remove.addEventListener("click", () => {
    state[group].splice(index, 1);
    setState({ ...state });
    syncSubmit();
  });

  row.append(input, slider, readout, remove);
  return row;
}

function renderFields(): void {
  const moreBox = $("more-fields");
  const lessBox = $("less-fields");
  moreBox.replaceChildren(...state.more.map((f, i) => fieldRow("more", i, f)));
  lessBox.replaceChildren(...state.less.map((f, i) => fieldRow("less", i, f)));
  syncSubmit();
}

function syncSubmit(): void {
  ($("submit-search") as HTMLButtonElement).disabled = !canSubmit(state);
}

// -- template selector ---------------------------------------------------

async function loadTemplates(): Promise<void> {
  const select = $("template-select") as HTMLSelectElement;
  const retry = $("template-retry") as HTMLButtonElement;
  try {
    const templates: Template[] = await api.templates();
    select.replaceChildren();
    const none = document.createElement("option");
    none.value = "";
    none.textContent = "none (raw query)";
    select.append(none);
    for (const tpl of templates) {
      const option = document.createElement("option");
      option.value = tpl.id;
      option.textContent = `${tpl.id} — ${tpl.description}`;
      option.title = tpl.pattern;
      select.append(option);
    }
    select.value = state.template ?? "";
    select.disabled = false;
    retry.hidden = true;
  } catch {
    select.disabled = true;
    retry.hidden = false;
  }
}

// -- search --------------------------------------------------------------

async function runSearch(): Promise<void> {
  if (!canSubmit(state)) return;
  // One search in flight at a time; a resubmit supersedes the previous one.
  inFlight?.abort();
  inFlight = new AbortController();
  clearInlineError();
  let spec: QuerySpec;
  try {
    spec = buildQuerySpec(state);
  } catch (err) {
    showInlineError(String(err));
    return;
  }
  try {
    const resp = await api.search(spec, true, inFlight.signal);
    state.lastHits = resp.hits;
    renderHits();
    renderTrace(resp.trace ?? null, resp.compiled_query_norm);
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") return;
    if (err instanceof ApiRequestError && err.code === "degenerate_query") {
      showInlineError(
        "Your positive and negative terms cancel out — soften a 'less of this' weight or add a positive field.",
      );
      return;
    }
    showInlineError(err instanceof Error ? err.message : String(err));
  }
}

function showInlineError(message: string): void {
  const box = $("query-error");
  box.textContent = message;
  box.hidden = false;
}

function clearInlineError(): void {
  $("query-error").hidden = true;
}

async function docFor(id: string): Promise<DocumentRecord | null> {
  const cached = docCache.get(id);
  if (cached !== undefined) return cached;
  try {
    const doc = await api.document(id);
    docCache.set(id, doc);
    return doc;
  } catch {
    return null;
  }
}

async function renderHits(): Promise<void> {
  const grid = $("results-grid");
  grid.replaceChildren();
  if (state.lastHits.length === 0) {
    const empty = document.createElement("p");
    empty.className = "muted";
    empty.textContent = "no results";
    grid.append(empty);
    return;
  }
  for (const hit of state.lastHits) {
    const tile = document.createElement("div");
    tile.className = "tile";
    const doc = await docFor(hit.id);

    const media = document.createElement("div");
    media.className = "tile-media";
    if (doc?.media_ref) {
      const img = document.createElement("img");
      img.src = doc.media_ref;
      img.alt = doc.title;
      media.append(img);
    } else {
      media.textContent = "◳";
    }

    const title = document.createElement("div");
    title.className = "tile-title";
    title.textContent = doc?.title || hit.id;

    const score = document.createElement("div");
    score.className = "tile-score";
    score.textContent = `#${hit.rank} · ${hit.score.toFixed(4)}`;

    const actions = document.createElement("div");
    actions.className = "tile-actions";
    const contextBtn = document.createElement("button");
    contextBtn.textContent = "more like this";
    contextBtn.title = "blend this item into my next search";
    contextBtn.addEventListener("click", () => setState(addContextPick(state, hit.id)));
    const likeBtn = document.createElement("button");
    likeBtn.textContent = state.liked.includes(hit.id) ? "♥ liked" : "♡ like";
    likeBtn.addEventListener("click", () => {
      setState(addLike(state, hit.id));
      likeBtn.textContent = "♥ liked";
    });
    const walkBtn = document.createElement("button");
    walkBtn.textContent = "walk";
    walkBtn.title = "explore outward from this item";
    walkBtn.addEventListener("click", () => void startWalk({ doc_id: hit.id }));
    actions.append(contextBtn, likeBtn, walkBtn);

    tile.append(media, title, score, actions);
    grid.append(tile);
  }
}

function renderTrace(trace: unknown, norm: number): void {
  const drawer = $("trace-drawer");
  if (trace === null || trace === undefined) {
    drawer.textContent = "no trace";
    return;
  }
  drawer.textContent = JSON.stringify({ compiled_query_norm: norm, trace }, null, 2);
}

// -- context picks, likes, expansion chips --------------------------------

function renderChipsAndPicks(): void {
  const picksBox = $("context-picks");
  picksBox.replaceChildren();
  for (const id of state.contextPicks) {
    const chip = document.createElement("span");
    chip.className = "chip context-chip";
    chip.textContent = id;
    const x = document.createElement("button");
    x.textContent = "×";
    x.addEventListener("click", () => setState(removeContextPick(state, id)));
    chip.append(x);
    picksBox.append(chip);
  }

  $("liked-count").textContent = String(state.liked.length);
  ($("suggest-terms") as HTMLButtonElement).disabled = state.liked.length === 0;

  const chipBox = $("expansion-chips");
  chipBox.replaceChildren();
  for (const [i, chip] of pendingChips.entries()) {
    const el = document.createElement("span");
    el.className = "chip suggestion-chip";
    el.textContent = `${chip.text} (${chip.weight})`;
    const apply = document.createElement("button");
    apply.textContent = "+";
    apply.title = "apply as an ordinary term";
    apply.addEventListener("click", () => {
      state.more.push({ text: chip.text, weight: chip.weight });
      pendingChips.splice(i, 1);
      setState({ ...state });
    });
    const drop = document.createElement("button");
    drop.textContent = "×";
    drop.addEventListener("click", () => {
      pendingChips.splice(i, 1);
      renderChipsAndPicks();
    });
    el.append(apply, drop);
    chipBox.append(el);
  }
}

async function suggestTerms(): Promise<void> {
  const notice = $("expansion-notice");
  notice.textContent = "";
  let spec: QuerySpec;
  try {
    spec = buildQuerySpec(state);
  } catch (err) {
    showInlineError(String(err));
    return;
  }
  try {
    const resp = await api.expand(spec, state.liked);
    const known = new Set(spec.terms.map((t) => t.text));
    pendingChips = resp.query_spec.terms.filter((t) => !known.has(t.text));
    if (pendingChips.length === 0) notice.textContent = "no new suggestions";
    renderChipsAndPicks();
  } catch (err) {
    if (err instanceof ApiRequestError && err.code === "provider_unavailable") {
      notice.textContent = "suggestion provider unavailable — try again later";
      return;
    }
    notice.textContent = err instanceof Error ? err.message : String(err);
  }
}

// -- tree explorer ---------------------------------------------------------

async function startWalk(start: Parameters<typeof explorer.walkFrom>[0]): Promise<void> {
  try {
    await explorer.walkFrom(start);
    renderCap = RENDER_CAP;
    renderTree();
  } catch (err) {
    $("tree-error").textContent = err instanceof Error ? err.message : String(err);
  }
}

function renderTree(): void {
  const svg = $("tree-svg");
  const { nodes, truncated } = explorer.layout(renderCap);
  svg.replaceChildren();
  $("tree-error").textContent = "";

  const byDepth = new Map<number, number[]>();
  nodes.forEach((node, i) => {
    const row = byDepth.get(node.depth) ?? [];
    row.push(i);
    byDepth.set(node.depth, row);
  });
  const xGap = 150;
  const yGap = 44;
  const positions = new Map<number, { x: number; y: number }>();
  for (const [depth, row] of byDepth) {
    row.forEach((nodeIndex, slot) => {
      positions.set(nodeIndex, { x: 40 + depth * xGap, y: 30 + slot * yGap });
    });
  }

  const ns = "http://www.w3.org/2000/svg";
  for (const [i, node] of nodes.entries()) {
    if (node.parent < 0) continue;
    const from = positions.get(node.parent)!;
    const to = positions.get(i)!;
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y));
    line.setAttribute("class", "tree-edge");
    svg.append(line);
  }
  for (const [i, node] of nodes.entries()) {
    const pos = positions.get(i)!;
    const group = document.createElementNS(ns, "g");
    group.setAttribute("transform", `translate(${pos.x}, ${pos.y})`);
    const circle = document.createElementNS(ns, "circle");
    circle.setAttribute("r", "7");
    circle.setAttribute("class", node.docId === null ? "tree-node synthetic" : "tree-node");
    const label = document.createElementNS(ns, "text");
    label.setAttribute("x", "11");
    label.setAttribute("y", "4");
    label.textContent = node.docId ?? "(query)";
    if (node.docId !== null) {
      const docId = node.docId;
      group.addEventListener("click", () => {
        void explorer
          .reRoot(docId)
          .then(() => {
            renderCap = RENDER_CAP;
            renderTree();
          })
          .catch((err: unknown) => {
            $("tree-error").textContent = err instanceof Error ? err.message : String(err);
          });
      });
      group.setAttribute("class", "clickable");
    }
    group.append(circle, label);
    svg.append(group);
  }

  const maxDepth = Math.max(0, ...nodes.map((n) => n.depth));
  const maxRow = Math.max(1, ...[...byDepth.values()].map((row) => row.length));
  svg.setAttribute("viewBox", `0 0 ${80 + (maxDepth + 1) * xGap} ${60 + maxRow * yGap}`);

  ($("tree-back") as HTMLButtonElement).disabled = !explorer.canGoBack();
  $("tree-stats").textContent =
    `${explorer.nodeCount()} nodes (structural cap ${explorer.geometricBound()})`;
  ($("tree-expand-more") as HTMLButtonElement).hidden = !truncated;
}

// -- boot ------------------------------------------------------------------

function boot(): void {
  const hash = window.location.hash.replace(/^#/, "");
  if (hash !== "") {
    try {
      state = restoreSession(hash);
    } catch {
      state = emptySession();
    }
  }
  renderFields();
  renderChipsAndPicks();
  void loadTemplates();

  $("add-more").addEventListener("click", () => {
    state.more.push({ text: "", weight: 1.0 });
    setState({ ...state });
  });
  $("add-less").addEventListener("click", () => {
    state.less.push({ text: "", weight: 1.0 });
    setState({ ...state });
  });
  ($("template-select") as HTMLSelectElement).addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    setState({ ...state, template: value === "" ? null : value });
    void runSearch();
  });
  $("template-retry").addEventListener("click", () => void loadTemplates());
  $("submit-search").addEventListener("click", () => void runSearch());
  $("suggest-terms").addEventListener("click", () => void suggestTerms());
  $("walk-from-search").addEventListener("click", () => {
    if (!canSubmit(state)) return;
    void startWalk({ query_spec: buildQuerySpec(state) });
  });
  $("tree-back").addEventListener("click", () => {
    void explorer
      .back()
      .then(() => renderTree())
      .catch(() => undefined);
  });
  $("tree-expand-more").addEventListener("click", () => {
    renderCap += RENDER_CAP;
    renderTree();
  });
  $("toggle-trace").addEventListener("click", () => {
    const drawer = $("trace-drawer");
    drawer.hidden = !drawer.hidden;
  });
}

document.addEventListener("DOMContentLoaded", boot);
