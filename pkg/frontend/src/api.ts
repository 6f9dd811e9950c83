/** Typed client for the service JSON API. fetch is injectable for tests. */

import type {
  ApiErrorBody,
  DocumentRecord,
  HealthResponse,
  QuerySpec,
  SearchResponse,
  Template,
  WalkParamsInput,
  WalkResponse,
  WalkStart,
} from "./types.js";

export class ApiRequestError extends Error {
  readonly code: ApiErrorBody["code"];
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiRequestError";
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const init: RequestInit = { method, signal };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    const parsed = text === "" ? null : (JSON.parse(text) as unknown);
    if (!resp.ok) {
      const error = (parsed ?? { code: "internal", message: `HTTP ${resp.status}` }) as ApiErrorBody;
      throw new ApiRequestError(resp.status, error);
    }
    return parsed as T;
  }

  search(spec: QuerySpec, debug = false, signal?: AbortSignal): Promise<SearchResponse> {
    return this.request("POST", `/v1/search?debug=${debug ? 1 : 0}`, spec, signal);
  }

  templates(): Promise<Template[]> {
    return this.request("GET", "/v1/templates");
  }

  expand(spec: QuerySpec, likedIds: string[]): Promise<{ query_spec: QuerySpec }> {
    return this.request("POST", "/v1/expand", { query_spec: spec, liked_ids: likedIds });
  }

  walk(
    start: WalkStart,
    params: WalkParamsInput,
    includeRootVector = false,
  ): Promise<WalkResponse> {
    return this.request("POST", "/v1/walk", {
      start,
      params,
      include_root_vector: includeRootVector,
    });
  }

  document(id: string): Promise<DocumentRecord> {
    return this.request("GET", `/v1/documents/${encodeURIComponent(id)}`);
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/v1/healthz");
  }
}
