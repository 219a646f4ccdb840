import { describe, expect, it, vi } from "vitest";

import { ApiClient, ServiceError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("posts the documented expand body", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      expect(String(url)).toBe("/expand");
      expect(init?.method).toBe("POST");
      expect(JSON.parse(String(init?.body))).toEqual({
        seed: ["a", "b"],
        top_n: 7,
        method: "mlp",
      });
      return jsonResponse({
        method: "mlp", seed: ["a", "b"], unresolved: [], candidates: [],
      });
    });
    const client = new ApiClient("", fetchFn as typeof fetch);
    const out = await client.expand(["a", "b"], 7, "mlp");
    expect(out.candidates).toEqual([]);
    expect(fetchFn).toHaveBeenCalledOnce();
  });

  it("raises ServiceError with unresolved terms on 422", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ detail: "no seed resolvable", unresolved: ["zzz"] }, 422),
    );
    const client = new ApiClient("", fetchFn as typeof fetch);
    const err = await client.expand(["zzz"], 5, "mlp").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(422);
    expect(err.unresolved).toEqual(["zzz"]);
  });

  it("builds vocab query strings", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL) => {
      expect(String(url)).toBe("/vocab?prefix=ne&limit=8");
      return jsonResponse({ terms: [{ term: "new york", frequency: 9 }] });
    });
    const client = new ApiClient("", fetchFn as typeof fetch);
    const out = await client.vocab("ne");
    expect(out.terms[0].term).toBe("new york");
  });

  it("propagates network failures", async () => {
    const fetchFn = vi.fn(async () => {
      throw new TypeError("fetch failed");
    });
    const client = new ApiClient("", fetchFn as typeof fetch);
    await expect(client.meta()).rejects.toThrow("fetch failed");
  });
});
