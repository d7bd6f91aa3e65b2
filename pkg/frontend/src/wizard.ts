/**
 * Wizard state: a thin mirror of the server-side assessment. Stage gating,
 * necessity outcomes, question visibility, and residual levels all come from
 * API responses; this module only tracks what the server last said and which
 * stage the user is looking at.
 */

import { ApiClient, ConflictError } from './api.js';
import type {
  AssessmentEnvelope,
  Question,
  StageNumber,
  StageStates,
} from './types.js';

export interface ValidationNote {
  questionId: string;
  message: string;
}

export class WizardState {
  assessmentId = '';
  revision = 0;
  currentStage: StageNumber = 1;
  stageStates: StageStates = {};
  questions: Question[] = [];
  answered: string[] = [];
  stage3CanComplete = false;
  pendingAnswers = new Map<string, unknown>();
  lastValidation: ValidationNote[] = [];
  lastEnvelope: AssessmentEnvelope | null = null;
  conflictPending = false;

  constructor(private api: ApiClient) {}

  /** Rebuild everything from the server (initial load and resume). */
  async resume(assessmentId: string): Promise<void> {
    const envelope = await this.api.getAssessment(assessmentId);
    this.absorb(envelope);
    if (this.stageStates['1'] === 'Complete') {
      await this.refreshQuestions();
    }
  }

  absorb(envelope: AssessmentEnvelope): void {
    this.assessmentId = envelope.id;
    this.revision = envelope.revision;
    this.stageStates = envelope.stage_states;
    this.lastEnvelope = envelope;
    if (envelope.pending) {
      this.questions = envelope.pending;
      this.stage3CanComplete = Boolean(envelope.stage3_can_complete);
    }
  }

  async refreshQuestions(): Promise<void> {
    const response = await this.api.getQuestions(this.assessmentId);
    this.questions = response.pending;
    this.answered = response.answered;
    this.stage3CanComplete = response.stage3_can_complete;
    this.revision = response.revision;
  }

  stageState(stage: StageNumber): string {
    return this.stageStates[String(stage)] ?? 'NotStarted';
  }

  /**
   * Navigation mirror of the server's gating invariant: stage n is reachable
   * only when every earlier stage is Complete or Skipped *according to the
   * server's stage map*. No local rule re-derivation.
   */
  canNavigate(stage: StageNumber): boolean {
    for (let earlier = 1; earlier < stage; earlier += 1) {
      const state = this.stageState(earlier as StageNumber);
      if (state !== 'Complete' && state !== 'Skipped') {
        return false;
      }
    }
    return true;
  }

  navigationBlockReason(stage: StageNumber): string {
    const missing: number[] = [];
    for (let earlier = 1; earlier < stage; earlier += 1) {
      const state = this.stageState(earlier as StageNumber);
      if (state !== 'Complete' && state !== 'Skipped') {
        missing.push(earlier);
      }
    }
    return missing.length
      ? `server reports stage${missing.length > 1 ? 's' : ''} ${missing.join(', ')} incomplete`
      : '';
  }

  navigate(stage: StageNumber): boolean {
    if (!this.canNavigate(stage)) {
      return false;
    }
    this.currentStage = stage;
    return true;
  }

  stageAnswer(questionId: string, value: unknown): void {
    this.pendingAnswers.set(questionId, value);
  }

  private async guarded<T>(operation: () => Promise<T>): Promise<T | null> {
    try {
      const result = await operation();
      this.conflictPending = false;
      return result;
    } catch (error) {
      if (error instanceof ConflictError) {
        // Someone else moved the assessment; the only safe move is reload.
        this.conflictPending = true;
        return null;
      }
      throw error;
    }
  }

  async submitProfile(profile: unknown): Promise<AssessmentEnvelope | null> {
    const envelope = await this.guarded(() =>
      this.api.submitProfile(this.assessmentId, this.revision, profile),
    );
    if (envelope) {
      this.absorb(envelope);
      await this.refreshQuestions();
    }
    return envelope;
  }

  /** Post every staged answer in order, then refresh the visible set. */
  async submitAndAdvance(): Promise<void> {
    this.lastValidation = [];
    for (const [questionId, value] of this.pendingAnswers) {
      const envelope = await this.guarded(() =>
        this.api.submitAnswer(this.assessmentId, this.revision, questionId, value),
      );
      if (!envelope) {
        return;
      }
      this.absorb(envelope);
    }
    this.pendingAnswers.clear();
    if (this.stage3CanComplete) {
      const envelope = await this.guarded(() =>
        this.api.completeStage(this.assessmentId, this.revision, 3),
      );
      if (envelope) {
        this.absorb(envelope);
      }
    }
  }

  async submitSingleAnswer(questionId: string, value: unknown): Promise<boolean> {
    const envelope = await this.guarded(() =>
      this.api.submitAnswer(this.assessmentId, this.revision, questionId, value),
    );
    if (envelope) {
      this.absorb(envelope);
      return true;
    }
    return false;
  }

  noteValidationError(questionId: string, message: string): void {
    this.lastValidation.push({ questionId, message });
  }

  /** Before/after residual preview; both sides come from the scoring endpoint. */
  async whatIfMitigation(
    likelihood: number,
    severity: number,
    mitigation: { taxonomy_id: string; strategy: string; likelihood_delta: number; severity_delta: number },
  ): Promise<{ before: string; after: string; residual: { likelihood: number; severity: number } }> {
    const baseline = await this.api.riskPreview(likelihood, severity, []);
    const mitigated = await this.api.riskPreview(likelihood, severity, [
      mitigation as never,
    ]);
    return {
      before: baseline.residual.level,
      after: mitigated.residual.level,
      residual: {
        likelihood: mitigated.residual.likelihood,
        severity: mitigated.residual.severity,
      },
    };
  }

  async downloadArtifacts(): Promise<{ report: string; notification: string | null }> {
    const report = await this.api.compileReport(this.assessmentId);
    const notification = this.lastEnvelope?.notification
      ? JSON.stringify(this.lastEnvelope.notification, null, 2)
      : null;
    return { report, notification };
  }
}
