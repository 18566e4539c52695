// Shapes mirrored from the review API's JSON payloads.

export type DecisionAction = 'keep_original' | 'override_label' | 'uphold_abstain';

export interface DecisionRecord {
  outcome_id: string;
  reviewer_id: string;
  action: DecisionAction;
  override_label: number | null;
  rationale: string;
  timestamp: number;
}

export interface DecisionInput {
  reviewer_id: string;
  action: DecisionAction;
  override_label?: number | null;
  rationale?: string;
}

export interface RuleInfo {
  antecedent: { sensitive: Record<string, string>; legal: Record<string, string> };
  consequent: number;
  support: number;
  confidence: number;
  slift: number;
  p_value: number;
  kind: string;
  negated_confidence: number;
  n_group: number;
  n_negated: number;
}

export interface NeighborInfo {
  id: string;
  features: Record<string, string>;
  label: number;
  distance: number;
}

export interface SituationInfo {
  neighbors_ref: NeighborInfo[];
  neighbors_nonref: NeighborInfo[];
  dec_r: number;
  dec_nr: number;
  score: number;
  flagged: boolean;
}

export interface Verdict {
  unfair: boolean;
  rule: RuleInfo | null;
  situation: SituationInfo | null;
  st_failed: boolean;
  note: string;
}

export interface Outcome {
  id: string;
  method: string;
  action: string;
  emitted_label: number | null;
  confidence: number;
  original_prediction: number;
  verdict: Verdict | null;
}

export interface RejectionSummary {
  id: string;
  confidence: number;
  original_prediction: number;
  rule: RuleInfo | null;
  slift: number | null;
  situation_score: number | null;
  decision: DecisionRecord | null;
}

export interface RejectionPage {
  total: number;
  page: number;
  page_size: number;
  items: RejectionSummary[];
}

export interface RejectionDetail {
  outcome: Outcome;
  instance: {
    id: string;
    values: Record<string, string>;
    raw_values: Record<string, string | number>;
  } | null;
  decisions: DecisionRecord[];
}

export interface MetricSummary {
  mean: number;
  stderr: number;
  n_samples: number;
}

export interface MethodReport {
  method: string;
  performance: Record<string, MetricSummary | null>;
  coverage: MetricSummary | null;
  groups: Record<string, Record<string, MetricSummary | number | null>>;
  disparity: Record<string, { range: number | null; std: number | null }>;
}

export type Report = Record<string, MethodReport>;
