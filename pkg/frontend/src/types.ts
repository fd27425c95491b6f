/** Shapes of the review service's JSON responses. */

export interface Progress {
  total_pseudo: number;
  decided_pseudo: number;
  erroneous: number;
  erroneous_percent: number;
  non_pseudo: number;
  decided_queue: number;
  remaining: number;
}

export interface SessionSummary {
  corpus_name: string;
  toolkit_version: string;
  groups: number;
  progress: Progress;
}

export interface GroupSummary {
  id: string;
  label: string;
  intents: string[];
  size: number;
  decided: number;
}

export interface TokenView {
  surface: string;
  truncated: boolean;
}

export interface UtteranceView {
  id: string;
  dialogue_id: string;
  tokens: TokenView[];
  slots: string[] | null;
  pseudo_intents: string[] | null;
  final_intents: string[] | null;
  decided: boolean;
}

export interface Page {
  items: UtteranceView[];
  cursor: number;
  next_cursor: number | null;
  total: number;
}

export interface DecisionRequest {
  utterance_id: string;
  verdicts: Record<string, "confirm" | "invalidate">;
  replacement: string[] | null;
  annotator: string;
  timestamp: string;
}

export interface DecisionResponse {
  utterance_id: string;
  final_intents: string[];
  progress: Progress;
}

export interface SchemaRules {
  intents: string[];
  exclusive: string[];
}

export interface ExportResponse {
  path: string | null;
  utterances: number;
}

export interface ApiErrorDetail {
  code: string;
  message: string;
  [extra: string]: unknown;
}
