/** Session state for the console, serializable to a URL-safe string.
 *
 * The serialized form covers everything that defines the query session
 * (refinement fields, template, context picks, likes, k). Derived results
 * (last hits, last tree) are runtime caches and intentionally excluded:
 * restoring a shared URL re-runs the search against live data.
 */

import type { SearchHit, TreeNode } from "./types.js";

export interface RefinementField {
  text: string;
  /** Slider range [0, 2]; 0 means "field absent" when the spec is built. */
  weight: number;
}

export interface SessionState {
  more: RefinementField[];
  less: RefinementField[];
  template: string | null;
  contextPicks: string[];
  liked: string[];
  k: number;
  lastHits: SearchHit[];
  lastTree: TreeNode | null;
}

export function emptySession(): SessionState {
  return {
    more: [{ text: "", weight: 1.0 }],
    less: [],
    template: null,
    contextPicks: [],
    liked: [],
    k: 20,
    lastHits: [],
    lastTree: null,
  };
}

interface Snapshot {
  v: 1;
  m: [string, number][];
  l: [string, number][];
  t: string | null;
  c: string[];
  lk: string[];
  k: number;
}

function toBase64Url(text: string): string {
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  for (const byte of bytes) {
    binary += String.fromCharCode(byte);
  }
  return btoa(binary).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
}

function fromBase64Url(encoded: string): string {
  const b64 = encoded.replace(/-/g, "+").replace(/_/g, "/");
  const binary = atob(b64 + "=".repeat((4 - (b64.length % 4)) % 4));
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    bytes[i] = binary.charCodeAt(i);
  }
  return new TextDecoder().decode(bytes);
}

export function serializeSession(state: SessionState): string {
  const snapshot: Snapshot = {
    v: 1,
    m: state.more.map((f) => [f.text, f.weight]),
    l: state.less.map((f) => [f.text, f.weight]),
    t: state.template,
    c: [...state.contextPicks],
    lk: [...state.liked],
    k: state.k,
  };
  return toBase64Url(JSON.stringify(snapshot));
}

export function restoreSession(encoded: string): SessionState {
  let snapshot: Snapshot;
  try {
    snapshot = JSON.parse(fromBase64Url(encoded)) as Snapshot;
  } catch {
    throw new Error("unreadable session string");
  }
  if (snapshot.v !== 1) {
    throw new Error(`unsupported session version ${String(snapshot.v)}`);
  }
  return {
    more: snapshot.m.map(([text, weight]) => ({ text, weight })),
    less: snapshot.l.map(([text, weight]) => ({ text, weight })),
    template: snapshot.t,
    contextPicks: [...snapshot.c],
    liked: [...snapshot.lk],
    k: snapshot.k,
    lastHits: [],
    lastTree: null,
  };
}

/** Add a liked id, preserving set semantics and first-seen order. */
export function addLike(state: SessionState, docId: string): SessionState {
  if (state.liked.includes(docId)) return state;
  return { ...state, liked: [...state.liked, docId] };
}

export function addContextPick(state: SessionState, docId: string): SessionState {
  if (state.contextPicks.includes(docId)) return state;
  return { ...state, contextPicks: [...state.contextPicks, docId] };
}

export function removeContextPick(state: SessionState, docId: string): SessionState {
  return { ...state, contextPicks: state.contextPicks.filter((id) => id !== docId) };
}
