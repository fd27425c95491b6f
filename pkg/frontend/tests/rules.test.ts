import { describe, expect, it } from "vitest";

import {
  emptyState,
  finalLabels,
  submissionProblem,
  toDecision,
  toggleConfirmed,
  toggleReplacement,
} from "../src/rules";
import type { SchemaRules } from "../src/types";

const RULES: SchemaRules = {
  intents: ["booking", "discourse_marker", "greeting", "thanking"],
  exclusive: ["discourse_marker"],
};

describe("toggle state", () => {
  it("defaults every pseudo label to confirmed", () => {
    const state = emptyState(["booking", "thanking"]);
    expect([...finalLabels(state)].sort()).toEqual(["booking", "thanking"]);
    expect(submissionProblem(state, RULES)).toBeNull();
  });

  it("toggling off all labels blocks submission", () => {
    let state = emptyState(["booking"]);
    state = toggleConfirmed(state, "booking");
    expect(submissionProblem(state, RULES)).toBe("empty_result");
  });

  it("replacement labels re-enable submission", () => {
    let state = emptyState(["booking"]);
    state = toggleConfirmed(state, "booking");
    state = toggleReplacement(state, "greeting", RULES);
    expect(submissionProblem(state, RULES)).toBeNull();
    expect([...finalLabels(state)]).toEqual(["greeting"]);
  });

  it("selecting the exclusive label clears everything else", () => {
    let state = emptyState(["booking", "thanking"]);
    state = toggleReplacement(state, "discourse_marker", RULES);
    expect([...finalLabels(state)]).toEqual(["discourse_marker"]);
    expect(submissionProblem(state, RULES)).toBeNull();
  });

  it("combining the exclusive label is blocked", () => {
    let state = emptyState(["booking"]);
    state = { ...state, replacement: new Set(["discourse_marker"]) };
    expect(submissionProblem(state, RULES)).toBe("exclusive_combination");
  });

  it("builds a decision with one verdict per pseudo label", () => {
    let state = emptyState(["booking", "thanking"]);
    state = toggleConfirmed(state, "thanking");
    state = toggleReplacement(state, "greeting", RULES);
    const decision = toDecision(state, "u1", "ann");
    expect(decision.utterance_id).toBe("u1");
    expect(decision.verdicts).toEqual({ booking: "confirm", thanking: "invalidate" });
    expect(decision.replacement).toEqual(["greeting"]);
  });

  it("omits replacement when no extra labels are picked", () => {
    const decision = toDecision(emptyState(["booking"]), "u1", "ann");
    expect(decision.replacement).toBeNull();
  });
});
