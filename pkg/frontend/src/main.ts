/**
 * Wizard boot: resume an assessment from the server (or create one), draw
 * the stage navigation and the current stage's screen, and keep every state
 * change flowing through the API.
 */

import { ApiClient, RequestError } from './api.js';
import {
  renderGapScreen,
  renderImpacts,
  renderQuestionList,
  renderStageNav,
  renderTraceScreen,
  renderWhatIfResult,
  showFieldError,
} from './render.js';
import type { GapReport, StageNumber } from './types.js';
import { WizardState } from './wizard.js';

export async function boot(root: HTMLElement, api: ApiClient = new ApiClient()): Promise<WizardState> {
  const wizard = new WizardState(api);
  const params = new URLSearchParams(window.location.search);
  const existing = params.get('assessment');
  if (existing) {
    await wizard.resume(existing);
  } else {
    const jurisdiction = params.get('jurisdiction') ?? 'IE';
    const envelope = await api.createAssessment(jurisdiction);
    wizard.absorb(envelope);
  }
  await renderStage(root, wizard, api);
  return wizard;
}

export async function renderStage(
  root: HTMLElement,
  wizard: WizardState,
  api: ApiClient,
): Promise<void> {
  root.innerHTML = '';
  if (wizard.conflictPending) {
    const banner = document.createElement('div');
    banner.className = 'conflict-banner';
    banner.textContent = 'This assessment changed elsewhere. Reload to continue.';
    const reload = document.createElement('button');
    reload.textContent = 'Reload';
    reload.addEventListener('click', async () => {
      await wizard.resume(wizard.assessmentId);
      wizard.conflictPending = false;
      await renderStage(root, wizard, api);
    });
    banner.appendChild(reload);
    root.appendChild(banner);
  }
  root.appendChild(renderStageNav(
    wizard.stageStates,
    (stage) => wizard.canNavigate(stage as StageNumber),
    (stage) => wizard.navigationBlockReason(stage as StageNumber),
    async (stage) => {
      if (wizard.navigate(stage as StageNumber)) {
        await renderStage(root, wizard, api);
      }
    },
  ));
  const screen = document.createElement('main');
  screen.setAttribute('data-screen', String(wizard.currentStage));
  root.appendChild(screen);

  switch (wizard.currentStage) {
    case 1:
      await renderStage1(screen, wizard, root, api);
      break;
    case 2:
      await renderStage2(screen, wizard, root, api);
      break;
    case 3:
      await renderStage3(screen, wizard, root, api);
      break;
    case 4:
      await renderStage4(screen, wizard, root, api);
      break;
    case 5:
      await renderStage5(screen, wizard);
      break;
  }
}

async function renderStage1(
  screen: HTMLElement, wizard: WizardState, root: HTMLElement, api: ApiClient,
): Promise<void> {
  const decision = wizard.lastEnvelope?.necessity;
  if (decision) {
    screen.appendChild(renderTraceScreen(decision));
    return;
  }
  const form = document.createElement('form');
  form.setAttribute('data-profile-form', 'true');
  const area = document.createElement('textarea');
  area.id = 'profile-json';
  area.rows = 12;
  area.value = JSON.stringify({ roles: ['deployer'], annex3_tags: [] }, null, 2);
  const submit = document.createElement('button');
  submit.type = 'submit';
  submit.textContent = 'Run necessity check';
  form.appendChild(area);
  form.appendChild(submit);
  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    const envelope = await wizard.submitProfile(JSON.parse(area.value));
    if (envelope) {
      await renderStage(root, wizard, api);
    }
  });
  screen.appendChild(form);
}

async function renderStage2(
  screen: HTMLElement, wizard: WizardState, root: HTMLElement, api: ApiClient,
): Promise<void> {
  const upload = document.createElement('textarea');
  upload.id = 'dpia-document';
  upload.rows = 10;
  const importButton = document.createElement('button');
  importButton.textContent = 'Import DPIA';
  importButton.setAttribute('data-action', 'import-dpia');
  importButton.addEventListener('click', async () => {
    try {
      const envelope = await api.uploadDpia(wizard.assessmentId, wizard.revision, upload.value);
      wizard.absorb(envelope);
      if (envelope.gap_report) {
        screen.appendChild(renderGapScreen(envelope.gap_report as GapReport));
      }
      await renderStage(root, wizard, api);
    } catch (error) {
      if (error instanceof RequestError) {
        const note = document.createElement('p');
        note.className = 'import-error';
        note.textContent = `${error.body.code}: ${error.body.message}`;
        screen.appendChild(note);
      } else {
        throw error;
      }
    }
  });
  const skip = document.createElement('button');
  skip.textContent = 'Proceed without a DPIA';
  skip.setAttribute('data-action', 'skip-dpia');
  skip.addEventListener('click', async () => {
    const envelope = await api.skipStage2(wizard.assessmentId, wizard.revision);
    wizard.absorb(envelope);
    await renderStage(root, wizard, api);
  });
  screen.appendChild(upload);
  screen.appendChild(importButton);
  screen.appendChild(skip);
  const gaps = await api.getGaps(wizard.assessmentId);
  screen.appendChild(renderGapScreen(gaps.gap_report as GapReport));
}

async function renderStage3(
  screen: HTMLElement, wizard: WizardState, root: HTMLElement, api: ApiClient,
): Promise<void> {
  await wizard.refreshQuestions();
  const readers = new Map<string, () => unknown>();
  const list = renderQuestionList(wizard.questions, (questionId, read) => {
    readers.set(questionId, read);
  });
  screen.appendChild(list);
  const submit = document.createElement('button');
  submit.setAttribute('data-action', 'submit-answers');
  submit.textContent = 'Submit answers';
  submit.addEventListener('click', async () => {
    for (const [questionId, read] of readers) {
      let value: unknown;
      try {
        value = read();
      } catch (error) {
        showFieldError(list, questionId, `not valid JSON: ${String(error)}`);
        continue;
      }
      try {
        const accepted = await wizard.submitSingleAnswer(questionId, value);
        if (!accepted) {
          break;
        }
      } catch (error) {
        if (error instanceof RequestError) {
          showFieldError(list, questionId, error.body.message);
        } else {
          throw error;
        }
      }
    }
    await renderStage(root, wizard, api);
  });
  screen.appendChild(submit);

  const whatIf = document.createElement('section');
  whatIf.className = 'what-if';
  whatIf.innerHTML = `
    <select id="what-if-likelihood">${[1, 2, 3, 4, 5].map((v) => `<option>${v}</option>`).join('')}</select>
    <select id="what-if-severity">${[1, 2, 3, 4, 5].map((v) => `<option>${v}</option>`).join('')}</select>
    <select id="what-if-delta">${[0, 1, 2, 3, 4].map((v) => `<option>${v}</option>`).join('')}</select>
    <button data-action="what-if">Preview mitigation</button>
    <output id="what-if-result"></output>
  `;
  whatIf.querySelector('[data-action="what-if"]')!.addEventListener('click', async () => {
    const likelihood = Number((whatIf.querySelector('#what-if-likelihood') as HTMLSelectElement).value);
    const severity = Number((whatIf.querySelector('#what-if-severity') as HTMLSelectElement).value);
    const delta = Number((whatIf.querySelector('#what-if-delta') as HTMLSelectElement).value);
    const preview = await wizard.whatIfMitigation(likelihood, severity, {
      taxonomy_id: 'prevent_or_reduce', strategy: 'Reduce',
      likelihood_delta: delta, severity_delta: 0,
    });
    renderWhatIfResult(
      whatIf.querySelector('#what-if-result') as HTMLElement,
      preview.before, preview.after,
    );
  });
  screen.appendChild(whatIf);
}

async function renderStage4(
  screen: HTMLElement, wizard: WizardState, root: HTMLElement, api: ApiClient,
): Promise<void> {
  const derive = document.createElement('button');
  derive.setAttribute('data-action', 'derive-impacts');
  derive.textContent = 'Derive rights impacts';
  derive.addEventListener('click', async () => {
    const envelope = await api.deriveImpacts(wizard.assessmentId, wizard.revision);
    wizard.absorb(envelope);
    await renderStage(root, wizard, api);
  });
  screen.appendChild(derive);
  const impacts = (wizard.lastEnvelope?.impacts ?? []);
  screen.appendChild(renderImpacts(
    impacts,
    async (impactId, unresolved) => {
      const envelope = await api.updateImpact(
        wizard.assessmentId, wizard.revision, impactId, { unresolved },
      );
      wizard.absorb(envelope);
    },
    async (impactId, index) => {
      const envelope = await api.updateImpact(
        wizard.assessmentId, wizard.revision, impactId, { adopt_remedies: [index] },
      );
      wizard.absorb(envelope);
      await renderStage(root, wizard, api);
    },
  ));
}

async function renderStage5(screen: HTMLElement, wizard: WizardState): Promise<void> {
  const download = document.createElement('button');
  download.setAttribute('data-action', 'download-artifacts');
  download.textContent = 'Compile and download';
  const output = document.createElement('pre');
  output.id = 'report-output';
  download.addEventListener('click', async () => {
    const artifacts = await wizard.downloadArtifacts();
    output.textContent = artifacts.report;
  });
  screen.appendChild(download);
  screen.appendChild(output);
}
