/**
 * Wizard state machine.
 *
 * Steps: terms -> upload -> select_column -> preview -> select_perceptions
 * -> submit -> complete. Every transition function returns a new state;
 * moving forward requires the current step to validate, and going back
 * preserves everything already entered. Submission is impossible without
 * accepted terms, a validated file, a chosen text column, and at least one
 * selected perception.
 */
import { previewColumn, parseHeaders } from './csv';
import { ALL_PERCEPTIONS } from './perceptions';
import type { DisplayState, UploadFileMeta, WizardState, WizardStep } from './types';
import { validateUpload } from './upload';

const STEP_ORDER: readonly WizardStep[] = [
  'terms',
  'upload',
  'select_column',
  'preview',
  'select_perceptions',
  'submit',
  'complete',
];

export function initialState(): WizardState {
  return {
    step: 'terms',
    termsAccepted: false,
    file: null,
    fileContent: null,
    headers: [],
    textColumn: null,
    idColumn: null,
    previewRows: [],
    selectedPerceptions: [],
    jobId: null,
    pollStatus: null,
  };
}

function expectStep(state: WizardState, step: WizardStep): void {
  if (state.step !== step) {
    throw new Error(`expected step ${step}, wizard is on ${state.step}`);
  }
}

export function acceptTerms(state: WizardState): WizardState {
  expectStep(state, 'terms');
  return { ...state, termsAccepted: true, step: 'upload' };
}

/**
 * Validate and attach the chosen file; headers come from a client-side
 * parse so the column dropdown can render without a server round trip.
 */
export function attachFile(
  state: WizardState,
  file: UploadFileMeta,
  content: string,
): WizardState {
  expectStep(state, 'upload');
  const verdict = validateUpload(file);
  if (!verdict.ok) {
    throw new Error(`upload rejected: ${verdict.error}`);
  }
  return {
    ...state,
    file,
    fileContent: content,
    headers: parseHeaders(content),
    step: 'select_column',
  };
}

export function chooseColumns(
  state: WizardState,
  textColumn: string,
  idColumn: string,
): WizardState {
  expectStep(state, 'select_column');
  for (const column of [textColumn, idColumn]) {
    if (!state.headers.includes(column)) {
      throw new Error(`column ${column} not in CSV header`);
    }
  }
  const preview = previewColumn(state.fileContent ?? '', textColumn);
  return { ...state, textColumn, idColumn, previewRows: preview, step: 'preview' };
}

export function confirmPreview(state: WizardState): WizardState {
  expectStep(state, 'preview');
  return { ...state, step: 'select_perceptions' };
}

export function togglePerception(state: WizardState, id: string): WizardState {
  expectStep(state, 'select_perceptions');
  if (!ALL_PERCEPTIONS.includes(id)) {
    throw new Error(`unknown perception ${id}`);
  }
  const selected = state.selectedPerceptions.includes(id)
    ? state.selectedPerceptions.filter((p) => p !== id)
    : [...state.selectedPerceptions, id];
  return { ...state, selectedPerceptions: selected };
}

/** Check all 20 perceptions; idempotent. */
export function selectAllPerceptions(state: WizardState): WizardState {
  expectStep(state, 'select_perceptions');
  return { ...state, selectedPerceptions: [...ALL_PERCEPTIONS] };
}

/** The submission guard: every prior step must have validated. */
export function canSubmit(state: WizardState): boolean {
  return (
    state.termsAccepted &&
    state.file !== null &&
    state.fileContent !== null &&
    state.textColumn !== null &&
    state.idColumn !== null &&
    state.selectedPerceptions.length > 0
  );
}

export function beginSubmit(state: WizardState): WizardState {
  expectStep(state, 'select_perceptions');
  if (!canSubmit(state)) {
    throw new Error('submission requires terms, a file, a text column, and a selection');
  }
  return { ...state, step: 'submit' };
}

/** Record the created job; only legal at/after submission. */
export function attachJob(state: WizardState, jobId: string): WizardState {
  expectStep(state, 'submit');
  return { ...state, jobId };
}

export function recordPollStatus(state: WizardState, status: DisplayState): WizardState {
  const step = status.kind === 'download' ? 'complete' : state.step;
  return { ...state, pollStatus: status, step };
}

/** Step back one screen, keeping everything already entered. */
export function goBack(state: WizardState): WizardState {
  const index = STEP_ORDER.indexOf(state.step);
  if (index <= 0 || state.step === 'submit' || state.step === 'complete') {
    return state;
  }
  return { ...state, step: STEP_ORDER[index - 1]! };
}

/** Move forward again after goBack without re-entering anything. */
export function goForward(state: WizardState): WizardState {
  switch (state.step) {
    case 'terms':
      return state.termsAccepted ? { ...state, step: 'upload' } : state;
    case 'upload':
      return state.file !== null ? { ...state, step: 'select_column' } : state;
    case 'select_column':
      return state.textColumn !== null ? { ...state, step: 'preview' } : state;
    case 'preview':
      return { ...state, step: 'select_perceptions' };
    default:
      return state;
  }
}

/** The config JSON the service expects for this wizard state. */
export function analysisConfig(state: WizardState): Record<string, unknown> {
  if (!canSubmit(state)) {
    throw new Error('incomplete wizard state');
  }
  return {
    id_column: state.idColumn,
    text_column: state.textColumn,
    selected_perceptions: state.selectedPerceptions,
    backend: { kind: 'lexicon' },
  };
}
