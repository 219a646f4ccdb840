/** Thin typed client for the expansion service. */

import type { ExpandResponse, MetaResponse, VocabResponse } from "./types.js";

export class ServiceError extends Error {
  constructor(
    public status: number,
    message: string,
    public unresolved: string[] = [],
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = `service error ${resp.status}`;
      let unresolved: string[] = [];
      try {
        const body = (await resp.json()) as {
          detail?: string;
          unresolved?: string[];
        };
        if (body.detail) detail = body.detail;
        if (body.unresolved) unresolved = body.unresolved;
      } catch {
        /* non-JSON error body */
      }
      throw new ServiceError(resp.status, detail, unresolved);
    }
    return (await resp.json()) as T;
  }

  expand(
    seed: string[],
    topN: number,
    method: string,
    signal?: AbortSignal,
  ): Promise<ExpandResponse> {
    return this.request<ExpandResponse>("/expand", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ seed, top_n: topN, method }),
      signal,
    });
  }

  vocab(prefix: string, limit = 8): Promise<VocabResponse> {
    const params = new URLSearchParams({ prefix, limit: String(limit) });
    return this.request<VocabResponse>(`/vocab?${params}`);
  }

  meta(): Promise<MetaResponse> {
    return this.request<MetaResponse>("/meta");
  }
}
