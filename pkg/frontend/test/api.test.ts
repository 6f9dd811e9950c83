import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError } from "../src/api.js";
import type { QuerySpec } from "../src/types.js";

const SPEC: QuerySpec = {
  terms: [{ text: "chair", weight: 1, polarity: "more" }],
  template: null,
  context_items: [],
  demote_quality: false,
  demote_weight: null,
  k: 20,
  filter: null,
};

function stubFetch(status: number, body: unknown) {
  const seen: { url: string; init?: RequestInit }[] = [];
  const fetchFn = (url: string, init?: RequestInit) => {
    seen.push({ url, init });
    return Promise.resolve(
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      }),
    );
  };
  return { seen, fetchFn };
}

describe("request shapes", () => {
  it("search posts the spec to /v1/search with the debug flag", async () => {
    const { seen, fetchFn } = stubFetch(200, { hits: [], compiled_query_norm: 1.0 });
    const client = new ApiClient("http://svc", fetchFn);
    await client.search(SPEC, true);
    expect(seen[0]!.url).toBe("http://svc/v1/search?debug=1");
    expect(JSON.parse(seen[0]!.init!.body as string)).toEqual(SPEC);
  });

  it("expand wraps spec and liked ids", async () => {
    const { seen, fetchFn } = stubFetch(200, { query_spec: SPEC });
    const client = new ApiClient("http://svc", fetchFn);
    await client.expand(SPEC, ["a", "b"]);
    expect(JSON.parse(seen[0]!.init!.body as string)).toEqual({
      query_spec: SPEC,
      liked_ids: ["a", "b"],
    });
  });

  it("walk posts start, params and the root-vector flag", async () => {
    const { seen, fetchFn } = stubFetch(200, { tree: { doc_id: "x", children: [] } });
    const client = new ApiClient("http://svc", fetchFn);
    await client.walk({ doc_id: "x" }, { layers: 2, children: 1, neighbours: 3, seed: 5 });
    expect(JSON.parse(seen[0]!.init!.body as string)).toEqual({
      start: { doc_id: "x" },
      params: { layers: 2, children: 1, neighbours: 3, seed: 5 },
      include_root_vector: false,
    });
  });

  it("document ids are URL-encoded", async () => {
    const { seen, fetchFn } = stubFetch(200, {
      id: "a/b", title: "", media_ref: null, metadata: {}, vector: [1],
    });
    const client = new ApiClient("", fetchFn);
    await client.document("a/b");
    expect(seen[0]!.url).toBe("/v1/documents/a%2Fb");
  });
});

describe("error surface", () => {
  it("maps API error bodies onto typed errors", async () => {
    const { fetchFn } = stubFetch(422, {
      code: "degenerate_query",
      message: "terms cancel out",
    });
    const client = new ApiClient("", fetchFn);
    const error = await client.search(SPEC).catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiRequestError);
    expect((error as ApiRequestError).code).toBe("degenerate_query");
    expect((error as ApiRequestError).status).toBe(422);
    expect((error as ApiRequestError).message).toBe("terms cancel out");
  });
});
