/** Application wiring: one session, at most one in-flight expansion. */

import { ApiClient, ServiceError } from "./api.js";
import {
  SessionState,
  addSeed,
  canAddSeed,
  checkInvariants,
  decodeSession,
  encodeSession,
  initialState,
  promote,
  accept,
  reject,
  removeSeed,
  setResponse,
} from "./state.js";
import {
  Handlers,
  renderBanner,
  renderResults,
  renderSeedChips,
  renderSuggestions,
  renderUnresolved,
} from "./ui.js";

export interface AppElements {
  seedInput: HTMLInputElement;
  suggestions: HTMLElement;
  chips: HTMLElement;
  expandButton: HTMLButtonElement;
  methodSelect: HTMLSelectElement;
  topNInput: HTMLInputElement;
  results: HTMLElement;
  banner: HTMLElement;
  unresolved: HTMLElement;
}

export class App {
  state: SessionState;
  /** Last expansion promise; lets callers (and tests) await completion. */
  lastExpand: Promise<void> | null = null;
  private inflight: AbortController | null = null;
  private typeaheadTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private elements: AppElements,
    private client: ApiClient,
    private onUrlChange: (hash: string) => void = () => {},
  ) {
    this.state = initialState();
  }

  /** Restore a shared session from a URL hash, then refresh the view. */
  restore(hash: string): void {
    this.state = decodeSession(hash);
    this.render();
  }

  private update(next: SessionState): void {
    checkInvariants(next);
    this.state = next;
    this.onUrlChange(encodeSession(next));
    this.render();
  }

  private handlers(): Handlers {
    return {
      onRemoveSeed: (term) => this.update(removeSeed(this.state, term)),
      onPromote: (term) => {
        this.update(promote(this.state, term));
        this.lastExpand = this.expand();
      },
      onAccept: (term) => this.update(accept(this.state, term)),
      onReject: (term) => this.update(reject(this.state, term)),
    };
  }

  render(): void {
    const els = this.elements;
    renderSeedChips(els.chips, this.state, this.handlers());
    renderResults(els.results, this.state, this.handlers());
    renderUnresolved(els.unresolved, this.state.response);
    els.expandButton.disabled = this.state.seeds.length === 0;
    els.methodSelect.value = this.state.method;
    els.topNInput.value = String(this.state.topN);
  }

  commitSeed(term: string): void {
    if (!canAddSeed(this.state, term)) return;
    this.update(addSeed(this.state, term));
    this.elements.seedInput.value = "";
    renderSuggestions(this.elements.suggestions, [], new Set(), () => {});
  }

  async typeahead(prefix: string): Promise<void> {
    if (prefix.trim().length < 1) {
      renderSuggestions(this.elements.suggestions, [], new Set(), () => {});
      return;
    }
    try {
      const response = await this.client.vocab(prefix.trim());
      renderSuggestions(
        this.elements.suggestions,
        response.terms,
        new Set(this.state.seeds),
        (term) => this.commitSeed(term),
      );
    } catch {
      renderSuggestions(this.elements.suggestions, [], new Set(), () => {});
    }
  }

  /** Issue an expansion; a newer request supersedes any in-flight one. */
  async expand(): Promise<void> {
    if (this.state.seeds.length === 0) return;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    renderBanner(this.elements.banner, "info", "Expanding…");
    try {
      const response = await this.client.expand(
        this.state.seeds,
        this.state.topN,
        this.state.method,
        controller.signal,
      );
      if (this.inflight !== controller) return; // superseded
      renderBanner(this.elements.banner, "none");
      this.update(setResponse(this.state, response));
    } catch (err) {
      if (controller.signal.aborted) return;
      if (err instanceof ServiceError) {
        const extra = err.unresolved.length
          ? ` (unresolved: ${err.unresolved.join(", ")})`
          : "";
        renderBanner(this.elements.banner, "error", err.message + extra);
      } else {
        renderBanner(this.elements.banner, "error",
          "Service unreachable; seeds kept.");
      }
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  bind(): void {
    const els = this.elements;
    els.seedInput.addEventListener("input", () => {
      if (this.typeaheadTimer) clearTimeout(this.typeaheadTimer);
      this.typeaheadTimer = setTimeout(
        () => void this.typeahead(els.seedInput.value), 120);
    });
    els.seedInput.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") {
        ev.preventDefault();
        this.commitSeed(els.seedInput.value);
      }
    });
    els.expandButton.addEventListener("click", () => {
      this.lastExpand = this.expand();
    });
    els.methodSelect.addEventListener("change", () => {
      this.update({ ...this.state, method: els.methodSelect.value });
    });
    els.topNInput.addEventListener("change", () => {
      const n = parseInt(els.topNInput.value, 10);
      if (Number.isFinite(n) && n >= 1) {
        this.update({ ...this.state, topN: n });
      }
    });
  }
}

export function collectElements(root: Document): AppElements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  return {
    seedInput: byId<HTMLInputElement>("seed-input"),
    suggestions: byId("suggestions"),
    chips: byId("chips"),
    expandButton: byId<HTMLButtonElement>("expand-button"),
    methodSelect: byId<HTMLSelectElement>("method-select"),
    topNInput: byId<HTMLInputElement>("topn-input"),
    results: byId("results"),
    banner: byId("banner"),
    unresolved: byId("unresolved"),
  };
}

export async function bootstrap(root: Document, baseUrl = ""): Promise<App> {
  const client = new ApiClient(baseUrl);
  const app = new App(collectElements(root), client, (hash) => {
    root.defaultView?.history.replaceState(null, "", `#${hash}`);
  });
  app.bind();
  app.restore(root.defaultView?.location.hash ?? "");
  try {
    const meta = await client.meta();
    const select = root.getElementById("method-select") as HTMLSelectElement;
    select.replaceChildren();
    for (const method of meta.methods) {
      const option = root.createElement("option");
      option.value = method;
      option.textContent = method;
      select.appendChild(option);
    }
    select.value = meta.methods.includes(app.state.method)
      ? app.state.method
      : meta.methods[0];
  } catch {
    renderBanner(
      root.getElementById("banner") as HTMLElement,
      "error",
      "Service unreachable; inputs preserved.",
    );
  }
  return app;
}

declare global {
  interface Window {
    __setxpandTest?: boolean;
  }
}

if (
  typeof window !== "undefined" &&
  !window.__setxpandTest &&
  document.getElementById("seed-input") !== null
) {
  void bootstrap(document);
}
