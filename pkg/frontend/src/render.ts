/**
 * DOM renderers. One editor per declared answer type plus a safe fallback
 * for anything unknown; screens for the rule trace, the gap report, the
 * questionnaire, the what-if panel, and the impact review. Rendering only:
 * values displayed are values the server sent.
 */

import type { GapReport, ImpactEntry, NecessityDecision, Question } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

export type AnswerReader = () => unknown;

export interface RenderedEditor {
  root: HTMLElement;
  read: AnswerReader;
}

function textEditor(question: Question): RenderedEditor {
  const input = el('input', { type: 'text', id: `answer-${question.id}` });
  return { root: input, read: () => input.value };
}

function booleanEditor(question: Question): RenderedEditor {
  const input = el('input', { type: 'checkbox', id: `answer-${question.id}` });
  return { root: input, read: () => input.checked };
}

function ordinalEditor(question: Question): RenderedEditor {
  const select = el('select', { id: `answer-${question.id}` });
  for (const value of [1, 2, 3, 4, 5]) {
    select.appendChild(el('option', { value: String(value) }, String(value)));
  }
  return { root: select, read: () => Number(select.value) };
}

function enumEditor(question: Question): RenderedEditor {
  const select = el('select', { id: `answer-${question.id}` });
  for (const choice of question.choices ?? []) {
    select.appendChild(el('option', { value: choice }, choice));
  }
  return { root: select, read: () => select.value };
}

function multiChoiceEditor(question: Question): RenderedEditor {
  if (question.choices && question.choices.length) {
    const wrap = el('fieldset', { id: `answer-${question.id}` });
    const boxes: HTMLInputElement[] = [];
    for (const choice of question.choices) {
      const label = el('label');
      const box = el('input', { type: 'checkbox', value: choice });
      boxes.push(box);
      label.appendChild(box);
      label.appendChild(document.createTextNode(choice));
      wrap.appendChild(label);
    }
    return {
      root: wrap,
      read: () => boxes.filter((b) => b.checked).map((b) => b.value),
    };
  }
  // open vocabulary: one entry per line
  const area = el('textarea', { id: `answer-${question.id}`, rows: '3' });
  return {
    root: area,
    read: () => area.value.split('\n').map((line) => line.trim()).filter(Boolean),
  };
}

function recordListEditor(question: Question): RenderedEditor {
  // Structured records edit as JSON; the server validates against the
  // target path's schema and the UI surfaces its verdict inline.
  const area = el('textarea', { id: `answer-${question.id}`, rows: '6' }, '[]');
  area.className = 'record-editor';
  return {
    root: area,
    read: () => JSON.parse(area.value || '[]'),
  };
}

function fallbackEditor(question: Question): RenderedEditor {
  const area = el('textarea', {
    id: `answer-${question.id}`,
    'data-fallback': 'true',
    rows: '4',
  });
  return {
    root: area,
    read: () => {
      try {
        return JSON.parse(area.value);
      } catch {
        return area.value;
      }
    },
  };
}

const EDITORS: Record<string, (q: Question) => RenderedEditor> = {
  Boolean: booleanEditor,
  Ordinal1to5: ordinalEditor,
  Text: textEditor,
  EnumChoice: enumEditor,
  MultiChoice: multiChoiceEditor,
  EntityList: recordListEditor,
  DataItemList: recordListEditor,
};

export function editorFor(question: Question): RenderedEditor {
  const factory = EDITORS[question.answer_type] ?? fallbackEditor;
  return factory(question);
}

export function renderQuestion(
  question: Question,
  onStage: (questionId: string, read: AnswerReader) => void,
): HTMLElement {
  const wrap = el('div', { class: 'question', 'data-question-id': question.id });
  wrap.appendChild(el('label', { for: `answer-${question.id}` }, question.prompt));
  if (question.help) {
    wrap.appendChild(el('small', {}, question.help));
  }
  const editor = editorFor(question);
  wrap.appendChild(editor.root);
  const errorSlot = el('div', { class: 'field-error', 'data-error-for': question.id });
  wrap.appendChild(errorSlot);
  onStage(question.id, editor.read);
  return wrap;
}

export function renderQuestionList(
  questions: Question[],
  onStage: (questionId: string, read: AnswerReader) => void,
): HTMLElement {
  const wrap = el('div', { class: 'question-list' });
  for (const question of questions) {
    wrap.appendChild(renderQuestion(question, onStage));
  }
  return wrap;
}

export function showFieldError(root: HTMLElement, questionId: string, message: string): void {
  const slot = root.querySelector(`[data-error-for="${questionId}"]`);
  if (slot) {
    slot.textContent = message;
  }
}

/** First-class screen: why the necessity decision came out as it did. */
export function renderTraceScreen(decision: NecessityDecision): HTMLElement {
  const wrap = el('section', { class: 'trace-screen' });
  wrap.appendChild(el('h2', {}, `Decision: ${decision.outcome}`));
  const fired = el('ul', { class: 'fired-rules' });
  for (const firing of decision.fired_rules) {
    fired.appendChild(el('li', { 'data-rule-id': firing.rule_id },
      `${firing.rule_id}: ${firing.outcome}`));
  }
  wrap.appendChild(fired);
  const trace = el('ol', { class: 'trace' });
  for (const entry of decision.trace) {
    trace.appendChild(el(
      'li',
      { 'data-rule-id': entry.rule_id, 'data-fired': String(entry.predicate_result) },
      `${entry.rule_id}: ${entry.explanation}`,
    ));
  }
  wrap.appendChild(trace);
  for (const condition of decision.open_conditions) {
    wrap.appendChild(el('p', { class: 'open-condition' }, condition));
  }
  return wrap;
}

/** First-class screen: what a reused DPIA still leaves to collect. */
export function renderGapScreen(report: GapReport): HTMLElement {
  const wrap = el('section', { class: 'gap-screen' });
  for (const [section, lines] of Object.entries(report.sections)) {
    wrap.appendChild(el('h3', {}, section));
    const list = el('ul');
    for (const line of lines) {
      list.appendChild(el(
        'li',
        { 'data-path': line.fria_path, 'data-reason': line.reason },
        `${line.fria_path} — ${line.reason}${line.question_id ? ` [${line.question_id}]` : ''}`,
      ));
    }
    wrap.appendChild(list);
  }
  if (report.conflicts.length) {
    wrap.appendChild(el('h3', {}, 'conflicts'));
    const list = el('ul', { class: 'conflicts' });
    for (const conflict of report.conflicts) {
      list.appendChild(el('li', { 'data-path': conflict.fria_path },
        `${conflict.fria_path}: reused ${JSON.stringify(conflict.dpia_value)} vs captured ${JSON.stringify(conflict.existing_value)}`));
    }
    wrap.appendChild(list);
  }
  return wrap;
}

export function renderWhatIfResult(
  container: HTMLElement,
  before: string,
  after: string,
): void {
  container.innerHTML = '';
  container.appendChild(el('span', { class: 'what-if-before', 'data-level': before }, before));
  container.appendChild(document.createTextNode(' → '));
  container.appendChild(el('span', { class: 'what-if-after', 'data-level': after }, after));
}

export function renderImpacts(
  impacts: ImpactEntry[],
  onToggleUnresolved: (impactId: string, unresolved: boolean) => void,
  onAdopt: (impactId: string, index: number) => void,
): HTMLElement {
  const wrap = el('section', { class: 'impact-screen' });
  for (const impact of impacts) {
    const card = el('article', { 'data-impact-id': impact.id });
    card.appendChild(el('h3', {},
      `Art.${impact.right.charter_article} ${impact.right.name} (${impact.right.exercise}, ${impact.right.limitability})`));
    card.appendChild(el('p', {},
      `${impact.via_consequence.taxonomy_id} affecting ${impact.affected_profile}: ${impact.categories.join(', ')}`));
    if (impact.escalation_note) {
      card.appendChild(el('p', { class: 'escalation' }, impact.escalation_note));
    }
    const unresolvedBox = el('input', { type: 'checkbox', 'data-unresolved-for': impact.id });
    unresolvedBox.checked = impact.unresolved;
    unresolvedBox.addEventListener('change', () =>
      onToggleUnresolved(impact.id, unresolvedBox.checked));
    const label = el('label');
    label.appendChild(unresolvedBox);
    label.appendChild(document.createTextNode('unresolved at report time'));
    card.appendChild(label);
    const remedies = el('ul', { class: 'remedies' });
    impact.remedial_measures.forEach((measure, index) => {
      const item = el('li', { 'data-adopted': String(measure.adopted) },
        `${measure.description} [${measure.addresses_category}] `);
      if (!measure.adopted) {
        const adopt = el('button', { 'data-adopt': `${impact.id}:${index}` }, 'adopt');
        adopt.addEventListener('click', () => onAdopt(impact.id, index));
        item.appendChild(adopt);
      }
      remedies.appendChild(item);
    });
    card.appendChild(remedies);
    wrap.appendChild(card);
  }
  return wrap;
}

export function renderStageNav(
  states: { [stage: string]: string },
  canNavigate: (stage: number) => boolean,
  blockReason: (stage: number) => string,
  onNavigate: (stage: number) => void,
): HTMLElement {
  const nav = el('nav', { class: 'stage-nav' });
  for (let stage = 1; stage <= 5; stage += 1) {
    const button = el('button', {
      'data-stage': String(stage),
      'data-state': states[String(stage)] ?? 'NotStarted',
    }, `Stage ${stage}`);
    if (!canNavigate(stage)) {
      button.disabled = true;
      button.title = blockReason(stage);
    }
    button.addEventListener('click', () => onNavigate(stage));
    nav.appendChild(button);
  }
  return nav;
}
