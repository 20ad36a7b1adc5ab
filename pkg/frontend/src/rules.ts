/** Rule editor state. Edits operate on the same JSON rule schema the CLI and
 * the runtime consume; the editor only adjusts fields, never invents them. */

import type { RuleDoc } from "./types.js";

export interface RuleEditorState {
  rules: RuleDoc[];
  dirty: boolean;
}

export function editorFromRules(rules: RuleDoc[]): RuleEditorState {
  return { rules: rules.map((r) => structuredClone(r)), dirty: false };
}

export function updateThreshold(
  state: RuleEditorState,
  ruleId: string,
  threshold: number,
): RuleEditorState {
  const rules = state.rules.map((rule) => {
    if (rule.id !== ruleId) return rule;
    if (rule.condition.op === "range") {
      throw new Error(`rule ${ruleId} has a range condition; edit lo/hi instead`);
    }
    return { ...rule, condition: { ...rule.condition, threshold } };
  });
  return { rules, dirty: true };
}

export function updateRange(
  state: RuleEditorState,
  ruleId: string,
  lo: number,
  hi: number,
): RuleEditorState {
  const rules = state.rules.map((rule) => {
    if (rule.id !== ruleId) return rule;
    if (rule.condition.op !== "range") {
      throw new Error(`rule ${ruleId} has a single-threshold condition`);
    }
    return { ...rule, condition: { op: "range" as const, lo, hi } };
  });
  return { rules, dirty: true };
}

/** Serialize back to the rule-set document the service and CLI accept. */
export function toRuleSetDocument(state: RuleEditorState): { rules: RuleDoc[] } {
  return { rules: state.rules.map((r) => structuredClone(r)) };
}
