/** Client-side submission rules.
 *
 * Deliberately a strict subset of what the server enforces: a state this
 * module rejects is always rejected by the server too, and the only 409
 * codes the server can return for a state this module allows are ones
 * outside these two rules (the server stays authoritative).
 */
import type { DecisionRequest, SchemaRules } from "./types";

export interface ToggleState {
  /** Pseudo labels shown as toggles; "on" means confirmed. */
  pseudo: string[];
  confirmed: Set<string>;
  /** Extra labels chosen in the replacement picker. */
  replacement: Set<string>;
}

export function emptyState(pseudo: string[] | null): ToggleState {
  const labels = pseudo ?? [];
  return {
    pseudo: labels,
    confirmed: new Set(labels), // toggles default to confirmed
    replacement: new Set(),
  };
}

export function finalLabels(state: ToggleState): Set<string> {
  const out = new Set(state.confirmed);
  for (const label of state.replacement) out.add(label);
  return out;
}

export type SubmissionProblem = "empty_result" | "exclusive_combination";

/** Null when submission may be enabled; otherwise the violated rule. */
export function submissionProblem(
  state: ToggleState,
  rules: SchemaRules,
): SubmissionProblem | null {
  const labels = finalLabels(state);
  if (labels.size === 0) return "empty_result";
  for (const exclusive of rules.exclusive) {
    if (labels.has(exclusive) && labels.size > 1) return "exclusive_combination";
  }
  return null;
}

/** Selecting an exclusive label clears everything else. */
export function toggleReplacement(
  state: ToggleState,
  label: string,
  rules: SchemaRules,
): ToggleState {
  const replacement = new Set(state.replacement);
  let confirmed = new Set(state.confirmed);
  if (replacement.has(label)) {
    replacement.delete(label);
  } else {
    if (rules.exclusive.includes(label)) {
      replacement.clear();
      confirmed = new Set();
    } else {
      for (const exclusive of rules.exclusive) replacement.delete(exclusive);
    }
    replacement.add(label);
  }
  return { ...state, confirmed, replacement };
}

export function toggleConfirmed(state: ToggleState, label: string): ToggleState {
  const confirmed = new Set(state.confirmed);
  if (confirmed.has(label)) confirmed.delete(label);
  else confirmed.add(label);
  return { ...state, confirmed };
}

export function toDecision(
  state: ToggleState,
  utteranceId: string,
  annotator: string,
): DecisionRequest {
  const verdicts: Record<string, "confirm" | "invalidate"> = {};
  for (const label of state.pseudo) {
    verdicts[label] = state.confirmed.has(label) ? "confirm" : "invalidate";
  }
  const extras = [...state.replacement].sort();
  return {
    utterance_id: utteranceId,
    verdicts,
    replacement: extras.length > 0 ? extras : null,
    annotator,
    timestamp: new Date().toISOString(),
  };
}
