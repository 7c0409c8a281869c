/**
 * Browser wiring for the wizard. Renders each step into #app, drives the
 * state machine, and talks to the service through ApiClient. The state
 * machine and API layers carry the logic; this file is presentation only.
 */
import { ApiClient } from './api';
import { EMOTIONS, EVALUATIONS } from './perceptions';
import { pollStatus } from './poll';
import type { WizardState } from './types';
import {
  acceptTerms,
  analysisConfig,
  attachFile,
  attachJob,
  beginSubmit,
  canSubmit,
  chooseColumns,
  confirmPreview,
  goBack,
  initialState,
  recordPollStatus,
  selectAllPerceptions,
  togglePerception,
} from './wizard';

const SERVICE_URL = (window as { LX_SERVICE_URL?: string }).LX_SERVICE_URL ?? 'http://127.0.0.1:8000';

let state: WizardState = initialState();
let pollAbort: AbortController | null = null;
const api = new ApiClient(SERVICE_URL);

function setState(next: WizardState): void {
  state = next;
  render();
}

function el(tag: string, attrs: Record<string, string> = {}, text = ''): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

function backButton(root: HTMLElement): void {
  const button = el('button', {}, 'Back');
  button.onclick = () => {
    pollAbort?.abort();
    setState(goBack(state));
  };
  root.appendChild(button);
}

function render(): void {
  const root = document.getElementById('app');
  if (!root) return;
  root.innerHTML = '';

  switch (state.step) {
    case 'terms': {
      root.appendChild(el('h2', {}, 'Policy and agreements'));
      root.appendChild(el('p', {}, 'Uploaded files are processed server-side and deleted after 7 days.'));
      const agree = el('button', {}, 'I agree');
      agree.onclick = () => setState(acceptTerms(state));
      root.appendChild(agree);
      break;
    }
    case 'upload': {
      root.appendChild(el('h2', {}, 'Select and upload file'));
      const input = el('input', { type: 'file', accept: '.csv' }) as HTMLInputElement;
      input.onchange = async () => {
        const file = input.files?.[0];
        if (!file) return;
        try {
          const content = await file.text();
          setState(attachFile(state, { name: file.name, size: file.size, mimeType: file.type }, content));
        } catch (error) {
          root.appendChild(el('p', { class: 'error' }, String(error)));
        }
      };
      root.appendChild(input);
      break;
    }
    case 'select_column': {
      root.appendChild(el('h2', {}, 'Select the text column'));
      const textSelect = el('select', { id: 'text-col' }) as HTMLSelectElement;
      const idSelect = el('select', { id: 'id-col' }) as HTMLSelectElement;
      for (const header of state.headers) {
        textSelect.appendChild(el('option', { value: header }, header));
        idSelect.appendChild(el('option', { value: header }, header));
      }
      const confirm = el('button', {}, 'Preview');
      confirm.onclick = () => setState(chooseColumns(state, textSelect.value, idSelect.value));
      root.append(el('label', {}, 'Text column'), textSelect,
                  el('label', {}, 'ID column'), idSelect, confirm);
      backButton(root);
      break;
    }
    case 'preview': {
      root.appendChild(el('h2', {}, 'Preview'));
      const list = el('ul');
      for (const value of state.previewRows) list.appendChild(el('li', {}, value));
      root.appendChild(list);
      const confirm = el('button', {}, 'Confirm and continue');
      confirm.onclick = () => setState(confirmPreview(state));
      root.appendChild(confirm);
      backButton(root);
      break;
    }
    case 'select_perceptions': {
      root.appendChild(el('h2', {}, 'Select themes'));
      for (const [title, group] of [['Consumer Emotions', EMOTIONS], ['Consumer Evaluations', EVALUATIONS]] as const) {
        root.appendChild(el('h3', {}, title));
        for (const id of group) {
          const label = el('label');
          const box = el('input', { type: 'checkbox' }) as HTMLInputElement;
          box.checked = state.selectedPerceptions.includes(id);
          box.onchange = () => setState(togglePerception(state, id));
          label.append(box, document.createTextNode(` ${id}`));
          root.appendChild(label);
        }
      }
      const selectAll = el('button', {}, 'Select All');
      selectAll.onclick = () => setState(selectAllPerceptions(state));
      const submit = el('button', {}, 'Submit') as HTMLButtonElement;
      submit.disabled = !canSubmit(state);
      submit.onclick = () => void submitJob();
      root.append(selectAll, submit);
      backButton(root);
      break;
    }
    case 'submit': {
      root.appendChild(el('h2', {}, 'Processing'));
      const status = state.pollStatus;
      if (status?.kind === 'error') {
        root.appendChild(el('p', { class: 'error' }, status.detail));
      } else {
        root.appendChild(el('p', {}, status?.kind === 'progress' ? `Job is ${status.state}…` : 'Submitting…'));
      }
      break;
    }
    case 'complete': {
      root.appendChild(el('h2', {}, 'All steps completed – you are finished.'));
      const link = el('a', { href: `${SERVICE_URL}/jobs/${state.jobId}/result`, download: 'results.csv' },
                      'Download results (CSV)');
      root.appendChild(link);
      break;
    }
  }
}

async function submitJob(): Promise<void> {
  setState(beginSubmit(state));
  try {
    const jobId = await api.submitJob(state.file!.name, state.fileContent!, analysisConfig(state));
    setState(attachJob(state, jobId));
    pollAbort = new AbortController();
    const final = await pollStatus(() => api.getStatus(jobId), {
      signal: pollAbort.signal,
      onUpdate: (status) => setState(recordPollStatus(state, status)),
    });
    setState(recordPollStatus(state, final));
  } catch (error) {
    setState(recordPollStatus(state, { kind: 'error', detail: String(error) }));
  }
}

render();
