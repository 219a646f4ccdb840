/** DOM rendering. No framework: build elements, replace containers. */

import type { Candidate, ExpandResponse, VocabEntry } from "./types.js";
import { FEATURE_LABELS } from "./types.js";
import type { SessionState } from "./state.js";
import { visibleCandidates } from "./state.js";

export const FEATURE_DECIMALS = 4;

export function formatFeature(value: number): string {
  return value.toFixed(FEATURE_DECIMALS);
}

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

export interface Handlers {
  onRemoveSeed(term: string): void;
  onPromote(term: string): void;
  onAccept(term: string): void;
  onReject(term: string): void;
}

export function renderSeedChips(
  container: HTMLElement,
  state: SessionState,
  handlers: Handlers,
): void {
  container.replaceChildren();
  for (const term of state.seeds) {
    const chip = el("span", "chip", term);
    chip.dataset.term = term;
    const x = el("button", "chip-remove", "×");
    x.title = `remove ${term}`;
    x.addEventListener("click", () => handlers.onRemoveSeed(term));
    chip.appendChild(x);
    container.appendChild(chip);
  }
}

export function renderSuggestions(
  container: HTMLElement,
  entries: VocabEntry[],
  disabled: Set<string>,
  onPick: (term: string) => void,
): void {
  container.replaceChildren();
  container.hidden = entries.length === 0;
  for (const entry of entries) {
    const row = el("div", "suggestion", entry.term);
    row.dataset.term = entry.term;
    const freq = el("span", "suggestion-freq", String(entry.frequency));
    row.appendChild(freq);
    if (disabled.has(entry.term)) {
      row.classList.add("suggestion-disabled");
    } else {
      row.addEventListener("mousedown", (ev) => {
        ev.preventDefault();
        onPick(entry.term);
      });
    }
    container.appendChild(row);
  }
}

function featureBars(candidate: Candidate, columnMax: number[]): HTMLElement {
  const cell = el("div", "bars");
  candidate.features.forEach((value, i) => {
    const bar = el("div", "bar");
    bar.title = `${FEATURE_LABELS[i]} = ${formatFeature(value)}`;
    bar.dataset.value = formatFeature(value);
    bar.dataset.column = FEATURE_LABELS[i];
    const fill = el("div", "bar-fill");
    const scale = columnMax[i] > 0 ? value / columnMax[i] : 0;
    fill.style.height = `${Math.round(100 * Math.min(1, scale))}%`;
    bar.appendChild(fill);
    cell.appendChild(bar);
  });
  return cell;
}

export function renderResults(
  container: HTMLElement,
  state: SessionState,
  handlers: Handlers,
): void {
  container.replaceChildren();
  const rows = visibleCandidates(state);
  if (!state.response) {
    container.appendChild(el("p", "placeholder",
      "Add seed terms and press Expand."));
    return;
  }
  if (rows.length === 0) {
    container.appendChild(el("p", "placeholder", "No candidates."));
    return;
  }
  const columnMax = FEATURE_LABELS.map((_, i) =>
    Math.max(...rows.map((c) => c.features[i])),
  );
  const table = el("table", "results");
  const head = el("tr");
  for (const title of ["#", "term", "score", "evidence", ""]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);

  rows.forEach((candidate, index) => {
    const tr = el("tr");
    tr.dataset.term = candidate.term;
    if (state.rejected.includes(candidate.term)) tr.classList.add("rejected");
    if (state.accepted.includes(candidate.term)) tr.classList.add("accepted");

    tr.appendChild(el("td", "rank", String(index + 1)));
    tr.appendChild(el("td", "term", candidate.term));
    tr.appendChild(el("td", "score", candidate.score.toFixed(4)));
    const bars = el("td", "evidence");
    bars.appendChild(featureBars(candidate, columnMax));
    tr.appendChild(bars);

    const actions = el("td", "actions");
    const promoteBtn = el("button", "promote", "+seed");
    promoteBtn.title = "promote to seed set and re-expand";
    promoteBtn.addEventListener("click", () =>
      handlers.onPromote(candidate.term));
    const acceptBtn = el("button", "accept", "✓");
    acceptBtn.addEventListener("click", () =>
      handlers.onAccept(candidate.term));
    const rejectBtn = el("button", "reject", "✗");
    rejectBtn.addEventListener("click", () =>
      handlers.onReject(candidate.term));
    actions.append(promoteBtn, acceptBtn, rejectBtn);
    tr.appendChild(actions);
    table.appendChild(tr);
  });
  container.appendChild(table);
}

export function renderBanner(
  container: HTMLElement,
  kind: "error" | "info" | "none",
  message = "",
): void {
  container.replaceChildren();
  container.hidden = kind === "none";
  if (kind !== "none") {
    container.appendChild(el("div", `banner banner-${kind}`, message));
  }
}

export function renderUnresolved(
  container: HTMLElement,
  response: ExpandResponse | null,
): void {
  container.replaceChildren();
  const names = response?.unresolved ?? [];
  container.hidden = names.length === 0;
  if (names.length > 0) {
    container.appendChild(
      el("div", "banner banner-warn",
        `Unresolved seed terms: ${names.join(", ")}`),
    );
  }
}
