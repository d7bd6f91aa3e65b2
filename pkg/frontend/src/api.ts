/**
 * Thin fetch wrapper over the assessment API. Every decision shown in the
 * UI comes out of these calls; nothing is computed client-side.
 */

import type {
  ApiError,
  AssessmentEnvelope,
  MitigationInput,
  QuestionsResponse,
  RiskEntry,
  RiskPreview,
} from './types.js';

export class ConflictError extends Error {
  constructor(public body: ApiError) {
    super(body.message);
    this.name = 'ConflictError';
  }
}

export class RequestError extends Error {
  constructor(public status: number, public body: ApiError) {
    super(body.message);
    this.name = 'RequestError';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = '/api/v1',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, raw = false): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body !== undefined ? { 'Content-Type': 'application/json' } : undefined,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiError;
      try {
        parsed = (await response.json()) as ApiError;
      } catch {
        parsed = { code: 'unknown', message: `HTTP ${response.status}`, details: [] };
      }
      if (response.status === 409 && parsed.code === 'revision_conflict') {
        throw new ConflictError(parsed);
      }
      throw new RequestError(response.status, parsed);
    }
    if (raw) {
      return (await response.text()) as unknown as T;
    }
    return (await response.json()) as T;
  }

  createAssessment(jurisdiction: string): Promise<AssessmentEnvelope> {
    return this.request('POST', '/assessments', { jurisdiction });
  }

  getAssessment(id: string): Promise<AssessmentEnvelope> {
    return this.request('GET', `/assessments/${id}`);
  }

  submitProfile(id: string, revision: number, profile: unknown): Promise<AssessmentEnvelope> {
    return this.request('PUT', `/assessments/${id}/profile?revision=${revision}`, profile);
  }

  uploadDpia(id: string, revision: number, document: string): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/dpia?revision=${revision}`, JSON.parse(document));
  }

  skipStage2(id: string, revision: number): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/stages/2/skip?revision=${revision}`);
  }

  getQuestions(id: string): Promise<QuestionsResponse> {
    return this.request('GET', `/assessments/${id}/questions`);
  }

  submitAnswer(id: string, revision: number, questionId: string, value: unknown): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/answers?revision=${revision}`, {
      question_id: questionId,
      value,
    });
  }

  completeStage(id: string, revision: number, stage: number): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/stages/${stage}/complete?revision=${revision}`);
  }

  getGaps(id: string): Promise<{ revision: number; gap_report: unknown; rendered: string }> {
    return this.request('GET', `/assessments/${id}/gaps`);
  }

  listRisks(id: string): Promise<{ revision: number; risks: RiskEntry[]; candidates: RiskEntry[] }> {
    return this.request('GET', `/assessments/${id}/risks`);
  }

  addRisk(id: string, revision: number, risk: unknown): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/risks?revision=${revision}`, risk);
  }

  riskPreview(likelihood: number, severity: number, mitigations: MitigationInput[]): Promise<RiskPreview> {
    return this.request('POST', '/risk-preview', { likelihood, severity, mitigations });
  }

  deriveImpacts(id: string, revision: number): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/impacts/derive?revision=${revision}`);
  }

  updateImpact(
    id: string, revision: number, impactId: string,
    body: { unresolved?: boolean; adopt_remedies?: number[] },
  ): Promise<AssessmentEnvelope> {
    return this.request('PUT', `/assessments/${id}/impacts/${impactId}?revision=${revision}`, body);
  }

  compileReport(id: string): Promise<string> {
    return this.request('POST', `/assessments/${id}/report`, undefined, true);
  }

  buildNotification(
    id: string, revision: number,
    body: { mode: string; authority?: string; submitter: unknown },
  ): Promise<AssessmentEnvelope> {
    return this.request('POST', `/assessments/${id}/notification?revision=${revision}`, body);
  }

  getMatrix(): Promise<{ version: string; levels: string[][] }> {
    return this.request('GET', '/catalogs/matrix');
  }
}
