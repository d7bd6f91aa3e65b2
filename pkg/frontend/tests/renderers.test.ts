/**
 * Every answer type in the questionnaire export has a renderer; unknown
 * types get the safe fallback editor. Trace and gap reports render as
 * first-class screens.
 */

import { describe, expect, it } from 'vitest';

import { editorFor, renderGapScreen, renderQuestion, renderTraceScreen } from '../src/render';
import type { GapReport, NecessityDecision, Question } from '../src/types';
import { loadQuestions } from './stub';

function question(overrides: Partial<Question>): Question {
  return {
    id: 'q-test', prompt: 'prompt', answer_type: 'Text',
    target_path: 'deployment.modality', ...overrides,
  };
}

describe('answer editors', () => {
  it('covers every answer type used by the shipped questionnaire', () => {
    for (const q of loadQuestions()) {
      const editor = editorFor(q);
      expect(editor.root.getAttribute('data-fallback')).toBeNull();
    }
  });

  it('reads back what each editor holds', () => {
    const boolEditor = editorFor(question({ answer_type: 'Boolean' }));
    (boolEditor.root as HTMLInputElement).checked = true;
    expect(boolEditor.read()).toBe(true);

    const ordinal = editorFor(question({ answer_type: 'Ordinal1to5' }));
    (ordinal.root as HTMLSelectElement).value = '4';
    expect(ordinal.read()).toBe(4);

    const multi = editorFor(question({ answer_type: 'MultiChoice', choices: ['a', 'b'] }));
    const boxes = multi.root.querySelectorAll('input');
    (boxes[1] as HTMLInputElement).checked = true;
    expect(multi.read()).toEqual(['b']);

    const open = editorFor(question({ answer_type: 'MultiChoice' }));
    (open.root as HTMLTextAreaElement).value = 'one\ntwo\n';
    expect(open.read()).toEqual(['one', 'two']);

    const records = editorFor(question({ answer_type: 'DataItemList' }));
    (records.root as HTMLTextAreaElement).value = '[{"name": "x"}]';
    expect(records.read()).toEqual([{ name: 'x' }]);
  });

  it('falls back safely for unknown answer types', () => {
    const editor = editorFor(question({ answer_type: 'HoloDeck' }));
    expect(editor.root.getAttribute('data-fallback')).toBe('true');
    (editor.root as HTMLTextAreaElement).value = '{"free": "form"}';
    expect(editor.read()).toEqual({ free: 'form' });
  });

  it('renders prompts, help text, and an error slot', () => {
    const node = renderQuestion(
      question({ help: 'how to answer' }),
      () => undefined,
    );
    expect(node.textContent).toContain('prompt');
    expect(node.textContent).toContain('how to answer');
    expect(node.querySelector('[data-error-for="q-test"]')).not.toBeNull();
  });
});

describe('first-class screens', () => {
  it('renders the rule trace with fired rules highlighted', () => {
    const decision: NecessityDecision = {
      subject: 'Fria', outcome: 'Required',
      fired_rules: [{ rule_id: 'annex3-7d', outcome: 'Required' }],
      trace: [
        { rule_id: 'annex3-7d', predicate_result: true, explanation: 'matched' },
        { rule_id: 'annex3-1a', predicate_result: false, explanation: 'no match' },
      ],
      catalog_version: 'seed', open_conditions: ['needs personal-data confirmation'],
    };
    const screen = renderTraceScreen(decision);
    expect(screen.textContent).toContain('Decision: Required');
    expect(screen.querySelectorAll('[data-fired="true"]').length).toBe(1);
    expect(screen.textContent).toContain('needs personal-data confirmation');
  });

  it('renders the gap report grouped by section with conflicts verbatim', () => {
    const report: GapReport = {
      sections: {
        provenance: [{
          fria_path: 'provenance.datasheets', reason: 'Missing',
          question_id: 'q-datasheets', transform_note: '',
        }],
      },
      conflicts: [{
        fria_path: 'deployment.duration_days', dpia_value: 365, existing_value: 42,
      }],
    };
    const screen = renderGapScreen(report);
    expect(screen.textContent).toContain('provenance.datasheets');
    expect(screen.textContent).toContain('[q-datasheets]');
    expect(screen.textContent).toContain('365');
    expect(screen.textContent).toContain('42');
  });
});
