/** Wire types mirroring the service's published JSON schemas. */

export type Polarity = "more" | "less";

export interface TermInput {
  text: string;
  weight: number;
  polarity: Polarity;
}

export interface ContextItemInput {
  doc_id?: string;
  image?: string;
  weight: number;
}

export interface QuerySpec {
  terms: TermInput[];
  template: string | null;
  context_items: ContextItemInput[];
  demote_quality: boolean;
  demote_weight: number | null;
  k: number;
  filter: Record<string, string> | null;
}

export interface SearchHit {
  id: string;
  score: number;
  rank: number;
}

export interface TraceTerm {
  text: string;
  rendered: string;
  weight: number;
  polarity: Polarity;
}

export interface Trace {
  template: string | null;
  terms: TraceTerm[];
  demotion: { text: string; weight: number } | null;
  context: { kind: string; ref: string; weight: number; scaled_weight: number }[];
  context_alpha: number | null;
}

export interface SearchResponse {
  hits: SearchHit[];
  compiled_query_norm: number;
  trace?: Trace;
}

export interface TreeNode {
  vector?: number[];
  doc_id: string | null;
  children: TreeNode[];
}

export interface WalkResponse {
  tree: TreeNode;
}

export interface WalkParamsInput {
  layers: number;
  children: number;
  neighbours: number;
  seed: number;
}

export type WalkStart =
  | { doc_id: string }
  | { vector: number[] }
  | { query_spec: QuerySpec };

export interface Template {
  id: string;
  pattern: string;
  description: string;
}

export interface DocumentRecord {
  id: string;
  title: string;
  media_ref: string | null;
  metadata: Record<string, string>;
  vector: number[];
}

export interface HealthResponse {
  status: string;
  dimension: number;
  doc_count: number;
}

export interface ApiErrorBody {
  code:
    | "bad_request"
    | "not_found"
    | "dimension_mismatch"
    | "degenerate_query"
    | "provider_unavailable"
    | "internal";
  message: string;
  detail?: unknown;
}
