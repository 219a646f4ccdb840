/** Wire types of the expansion service. */

export interface Candidate {
  term: string;
  score: number;
  /** Ten softmax-normalized similarity features, column order
   *  lin,list,dep,sp,up x cent,csum. */
  features: number[];
}

export interface ExpandResponse {
  method: string;
  seed: string[];
  unresolved: string[];
  candidates: Candidate[];
}

export interface VocabEntry {
  term: string;
  frequency: number;
}

export interface VocabResponse {
  terms: VocabEntry[];
}

export interface MetaResponse {
  context_types: string[];
  methods: string[];
  models: Record<string, { vocab: number; dim: number }>;
  terms: number;
}

export const FEATURE_LABELS = [
  "lin/cent", "lin/csum",
  "list/cent", "list/csum",
  "dep/cent", "dep/csum",
  "sp/cent", "sp/csum",
  "up/cent", "up/csum",
] as const;
