/** Payload shapes of the assessment API (/api/v1). */

export type StageNumber = 1 | 2 | 3 | 4 | 5;

export type StageStateValue = 'NotStarted' | 'InProgress' | 'Complete' | 'Skipped';

export interface StageStates {
  [stage: string]: StageStateValue;
}

export interface RuleFiring {
  rule_id: string;
  outcome: string;
}

export interface TraceEntry {
  rule_id: string;
  predicate_result: boolean;
  explanation: string;
}

export interface NecessityDecision {
  subject: string;
  outcome: string;
  fired_rules: RuleFiring[];
  trace: TraceEntry[];
  catalog_version: string;
  open_conditions: string[];
}

export interface AssessmentEnvelope {
  id: string;
  revision: number;
  stage_states: StageStates;
  assessment: Record<string, unknown>;
  necessity?: NecessityDecision;
  dpia_necessity?: NecessityDecision;
  high_risk?: { areas: string[]; matches: { area: string; rule_id: string }[] };
  pending?: Question[];
  stage3_can_complete?: boolean;
  prefill?: unknown;
  gap_report?: GapReport;
  impacts?: ImpactEntry[];
  leftovers?: unknown[];
  notification?: Record<string, unknown>;
  risk?: RiskEntry;
}

export interface Question {
  id: string;
  prompt: string;
  answer_type: string;
  target_path: string;
  choices?: string[];
  help?: string;
  visible_if?: unknown;
}

export interface QuestionsResponse {
  revision: number;
  pending: Question[];
  answered: string[];
  stage3_can_complete: boolean;
}

export interface GapReportLine {
  fria_path: string;
  reason: string;
  question_id: string;
  transform_note: string;
}

export interface GapReport {
  sections: { [section: string]: GapReportLine[] };
  conflicts: { fria_path: string; dpia_value: unknown; existing_value: unknown }[];
}

export interface MitigationInput {
  taxonomy_id: string;
  strategy: 'Eliminate' | 'Reduce' | 'Mitigate' | 'Monitor';
  likelihood_delta: number;
  severity_delta: number;
}

export interface RiskPreview {
  initial_level: string;
  residual: { likelihood: number; severity: number; level: string; note: string };
}

export interface RiskEntry {
  id: string;
  risk_kind: string;
  likelihood: number | null;
  severity: number | null;
  residual: { likelihood: number; severity: number; level: string } | null;
  consequences: { taxonomy_id: string; affected_profile: string }[];
  mitigations: MitigationInput[];
  [key: string]: unknown;
}

export interface ImpactEntry {
  id: string;
  right: { charter_article: number; name: string; exercise: string; limitability: string };
  affected_profile: string;
  categories: string[];
  escalates_to: string | null;
  escalation_note: string | null;
  unresolved: boolean;
  remedial_measures: { description: string; addresses_category: string; adopted: boolean }[];
  via_consequence: { taxonomy_id: string; affected_profile: string };
}

export interface ApiError {
  code: string;
  message: string;
  details: unknown[];
}
