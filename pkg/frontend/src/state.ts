// Pure client-side logic, kept free of DOM and fetch so it is testable.

import type { DecisionRecord, NeighborInfo, Outcome } from './types.js';

/** Replay an append-only decision log; the last entry per outcome wins. */
export function activeDecisions(log: DecisionRecord[]): Map<string, DecisionRecord> {
  const active = new Map<string, DecisionRecord>();
  for (const record of log) {
    active.set(record.outcome_id, record);
  }
  return active;
}

export interface AmendedOutcome {
  action: string;
  emitted_label: number | null;
}

/**
 * Apply a reviewer decision to an unfairness abstention the same way the
 * server does when recomputing the report.
 */
export function amendOutcome(
  outcome: Pick<Outcome, 'action' | 'emitted_label' | 'original_prediction'>,
  decision: DecisionRecord | undefined,
): AmendedOutcome {
  if (!decision || outcome.action !== 'abstain_unfair') {
    return { action: outcome.action, emitted_label: outcome.emitted_label };
  }
  switch (decision.action) {
    case 'keep_original':
      return { action: 'predict', emitted_label: outcome.original_prediction };
    case 'override_label':
      return { action: 'predict', emitted_label: decision.override_label };
    default:
      return { action: outcome.action, emitted_label: outcome.emitted_label };
  }
}

/** Legal feature names on which a neighbor differs from the target. */
export function differingFeatures(
  target: Record<string, string>,
  neighbor: NeighborInfo,
): string[] {
  return Object.keys(neighbor.features)
    .filter((f) => f in target && target[f] !== neighbor.features[f])
    .sort();
}

export function formatPct(x: number | null | undefined, digits = 1): string {
  if (x === null || x === undefined || Number.isNaN(x)) return '–';
  return `${(100 * x).toFixed(digits)}%`;
}

export function formatSigned(x: number | null | undefined, digits = 3): string {
  if (x === null || x === undefined || Number.isNaN(x)) return '–';
  return `${x >= 0 ? '+' : ''}${x.toFixed(digits)}`;
}

export interface DecisionFormState {
  reviewerId: string;
  action: string;
  overrideLabel: string;
}

/** Client-side mirror of the server's decision validation. */
export function validateDecision(form: DecisionFormState): string | null {
  if (!form.reviewerId.trim()) return 'reviewer id is required';
  if (!['keep_original', 'override_label', 'uphold_abstain'].includes(form.action)) {
    return 'unknown action';
  }
  if (form.action === 'override_label' && !['0', '1'].includes(form.overrideLabel)) {
    return 'override label must be 0 or 1';
  }
  return null;
}

export function describeAntecedent(antecedent: {
  sensitive: Record<string, string>;
  legal: Record<string, string>;
}): string {
  const parts = [
    ...Object.entries(antecedent.sensitive),
    ...Object.entries(antecedent.legal),
  ].map(([k, v]) => `${k}=${v}`);
  return parts.join(' ∧ ');
}
