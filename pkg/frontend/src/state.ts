/** Session state and its pure transitions.
 *
 * All UI state lives here (and mirrored in the URL hash for sharing);
 * the server is never mutated. Invariants: seed terms are unique,
 * accepted and rejected sets never intersect, and promoting a term
 * removes it from both result bookkeeping sets.
 */

import type { ExpandResponse } from "./types.js";

export interface SessionState {
  seeds: string[];
  method: string;
  topN: number;
  accepted: string[];
  rejected: string[];
  response: ExpandResponse | null;
}

export function initialState(): SessionState {
  return {
    seeds: [],
    method: "mlp",
    topN: 20,
    accepted: [],
    rejected: [],
    response: null,
  };
}

export function canAddSeed(state: SessionState, term: string): boolean {
  const t = term.trim();
  return t.length > 0 && !state.seeds.includes(t);
}

export function addSeed(state: SessionState, term: string): SessionState {
  if (!canAddSeed(state, term)) return state;
  return { ...state, seeds: [...state.seeds, term.trim()] };
}

export function removeSeed(state: SessionState, term: string): SessionState {
  return { ...state, seeds: state.seeds.filter((s) => s !== term) };
}

export function setResponse(
  state: SessionState,
  response: ExpandResponse,
): SessionState {
  return { ...state, response };
}

/** Promote a candidate into the seed set; it leaves the accept/reject
 *  bookkeeping and will disappear from the table on the next expansion. */
export function promote(state: SessionState, term: string): SessionState {
  const next = addSeed(state, term);
  return {
    ...next,
    accepted: state.accepted.filter((t) => t !== term),
    rejected: state.rejected.filter((t) => t !== term),
  };
}

export function reject(state: SessionState, term: string): SessionState {
  if (state.rejected.includes(term)) {
    return { ...state, rejected: state.rejected.filter((t) => t !== term) };
  }
  return {
    ...state,
    rejected: [...state.rejected, term],
    accepted: state.accepted.filter((t) => t !== term),
  };
}

export function accept(state: SessionState, term: string): SessionState {
  if (state.accepted.includes(term)) {
    return { ...state, accepted: state.accepted.filter((t) => t !== term) };
  }
  return {
    ...state,
    accepted: [...state.accepted, term],
    rejected: state.rejected.filter((t) => t !== term),
  };
}

export function checkInvariants(state: SessionState): void {
  if (new Set(state.seeds).size !== state.seeds.length) {
    throw new Error("duplicate seed terms");
  }
  const overlap = state.accepted.filter((t) => state.rejected.includes(t));
  if (overlap.length > 0) {
    throw new Error(`accepted and rejected overlap: ${overlap}`);
  }
}

/** Rows for the results table: rejected terms sink to the bottom. */
export function visibleCandidates(state: SessionState) {
  if (!state.response) return [];
  const rows = state.response.candidates.filter(
    (c) => !state.seeds.includes(c.term),
  );
  const kept = rows.filter((c) => !state.rejected.includes(c.term));
  const sunk = rows.filter((c) => state.rejected.includes(c.term));
  return [...kept, ...sunk];
}

// --- URL-hash session encoding ------------------------------------------

export function encodeSession(state: SessionState): string {
  const payload = {
    s: state.seeds,
    m: state.method,
    n: state.topN,
    a: state.accepted,
    r: state.rejected,
  };
  return encodeURIComponent(JSON.stringify(payload));
}

export function decodeSession(hash: string): SessionState {
  const state = initialState();
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return state;
  try {
    const payload = JSON.parse(decodeURIComponent(raw)) as {
      s?: string[];
      m?: string;
      n?: number;
      a?: string[];
      r?: string[];
    };
    if (Array.isArray(payload.s)) {
      state.seeds = [...new Set(payload.s.filter((t) => t.trim()))];
    }
    if (typeof payload.m === "string") state.method = payload.m;
    if (typeof payload.n === "number" && payload.n >= 1) {
      state.topN = Math.floor(payload.n);
    }
    if (Array.isArray(payload.a)) state.accepted = payload.a;
    if (Array.isArray(payload.r)) {
      state.rejected = payload.r.filter((t) => !state.accepted.includes(t));
    }
  } catch {
    return initialState();
  }
  return state;
}
