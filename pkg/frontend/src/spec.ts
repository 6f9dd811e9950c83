/** Builds service QuerySpecs from console state.
 *
 * This is the only place the console constructs a spec, so the contract
 * tests can cover every UI-reachable shape. No vector math happens here or
 * anywhere else client-side; composition is the server's job.
 */

import type { SessionState } from "./state.js";
import type { QuerySpec, TermInput } from "./types.js";

export const MIN_WEIGHT = 0;
export const MAX_WEIGHT = 2;
export const WEIGHT_STEP = 0.1;
export const MAX_K = 200;

function activeTerms(state: SessionState): { more: TermInput[]; less: TermInput[] } {
  // A field with an empty text or a zero weight is treated as absent.
  const keep = (fields: { text: string; weight: number }[]) =>
    fields.filter((f) => f.text.trim() !== "" && f.weight > 0);
  return {
    more: keep(state.more).map((f) => ({
      text: f.text.trim(),
      weight: clampWeight(f.weight),
      polarity: "more" as const,
    })),
    less: keep(state.less).map((f) => ({
      text: f.text.trim(),
      weight: clampWeight(f.weight),
      polarity: "less" as const,
    })),
  };
}

function clampWeight(weight: number): number {
  const bounded = Math.min(MAX_WEIGHT, Math.max(MIN_WEIGHT, weight));
  // Sliders step by 0.1; round away float residue like 0.30000000000000004.
  return Math.round(bounded * 10) / 10;
}

/** Submit is possible only with at least one live positive field. */
export function canSubmit(state: SessionState): boolean {
  return activeTerms(state).more.length > 0;
}

export function buildQuerySpec(state: SessionState): QuerySpec {
  const { more, less } = activeTerms(state);
  if (more.length === 0) {
    throw new Error("at least one 'more of this' field is required");
  }
  return {
    terms: [...more, ...less],
    template: state.template,
    context_items: state.contextPicks.map((docId) => ({ doc_id: docId, weight: 1.0 })),
    demote_quality: false,
    demote_weight: null,
    k: Math.min(MAX_K, Math.max(1, Math.round(state.k))),
    filter: null,
  };
}
