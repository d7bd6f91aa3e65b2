/**
 * Stage navigation mirrors the server's stage map exactly; no local gating
 * rules beyond reading what the server reported.
 */

import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { renderStage } from '../src/main';
import { WizardState } from '../src/wizard';
import { StubApi } from './stub';

async function wizardWith(states: Record<string, string>) {
  const stub = new StubApi({ stageStates: states as never });
  const api = new ApiClient('/api/v1', stub.fetch);
  const wizard = new WizardState(api);
  await wizard.resume('stub-1');
  return { stub, api, wizard };
}

describe('stage gating mirror', () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '';
    root = document.createElement('div');
    document.body.appendChild(root);
  });

  it('blocks stage 5 while stage 4 is incomplete, with the server-reported reason', async () => {
    const { api, wizard } = await wizardWith({
      '1': 'Complete', '2': 'Skipped', '3': 'Complete', '4': 'InProgress', '5': 'NotStarted',
    });
    expect(wizard.canNavigate(5)).toBe(false);
    expect(wizard.navigate(5)).toBe(false);
    expect(wizard.navigationBlockReason(5)).toContain('stage 4 incomplete');

    await renderStage(root, wizard, api);
    const button = root.querySelector('button[data-stage="5"]') as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    expect(button.title).toContain('stage 4 incomplete');
    const stage4 = root.querySelector('button[data-stage="4"]') as HTMLButtonElement;
    expect(stage4.disabled).toBe(false);
  });

  it('enables everything when the server says all stages are done', async () => {
    const { wizard } = await wizardWith({
      '1': 'Complete', '2': 'Complete', '3': 'Complete', '4': 'Complete', '5': 'Complete',
    });
    for (const stage of [1, 2, 3, 4, 5] as const) {
      expect(wizard.canNavigate(stage)).toBe(true);
    }
  });

  it('treats a skipped stage 2 as passable', async () => {
    const { wizard } = await wizardWith({
      '1': 'Complete', '2': 'Skipped', '3': 'NotStarted', '4': 'NotStarted', '5': 'NotStarted',
    });
    expect(wizard.canNavigate(3)).toBe(true);
    expect(wizard.canNavigate(4)).toBe(false);
  });

  it('follows whatever the server reports, not local assumptions', async () => {
    // A fresh map would never look like this; the mirror must not care.
    const { wizard } = await wizardWith({
      '1': 'NotStarted', '2': 'Complete', '3': 'Complete', '4': 'Complete', '5': 'Complete',
    });
    expect(wizard.canNavigate(2)).toBe(false);
    expect(wizard.navigationBlockReason(2)).toContain('stage 1 incomplete');
  });

  it('mirrors updated states after a mutation without a reload', async () => {
    const stub = new StubApi({ stageStates: {
      '1': 'Complete', '2': 'NotStarted', '3': 'NotStarted', '4': 'NotStarted', '5': 'NotStarted',
    } as never });
    const client = new ApiClient('/api/v1', stub.fetch);
    const wizard = new WizardState(client);
    await wizard.resume('stub-1');
    expect(wizard.canNavigate(3)).toBe(false);
    const skipped = await client.skipStage2('stub-1', wizard.revision);
    wizard.absorb(skipped);
    expect(wizard.canNavigate(3)).toBe(true);
  });

  it('shows the reload prompt on a revision conflict and changes nothing', async () => {
    const stub = new StubApi({ alwaysConflict: true });
    const api = new ApiClient('/api/v1', stub.fetch);
    const wizard = new WizardState(api);
    await wizard.resume('stub-1');
    const before = wizard.stageStates;
    const result = await wizard.submitSingleAnswer('q-can-update', true);
    expect(result).toBe(false);
    expect(wizard.conflictPending).toBe(true);
    expect(wizard.stageStates).toEqual(before);
    await renderStage(root, wizard, api);
    expect(root.querySelector('.conflict-banner')).not.toBeNull();
  });
});
