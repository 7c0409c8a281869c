import { describe, expect, it } from 'vitest';

import { ALL_PERCEPTIONS } from '../src/perceptions';
import type { WizardState } from '../src/types';
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
  goForward,
  initialState,
  recordPollStatus,
  selectAllPerceptions,
  togglePerception,
} from '../src/wizard';

const CSV = 'ID_num,TEXT\n1,first row text\n2,second row text\n3,third\n';
const FILE = { name: 'input.csv', size: CSV.length, mimeType: 'text/csv' };

function readyToSubmit(): WizardState {
  let s = initialState();
  s = acceptTerms(s);
  s = attachFile(s, FILE, CSV);
  s = chooseColumns(s, 'TEXT', 'ID_num');
  s = confirmPreview(s);
  s = togglePerception(s, 'joy');
  return s;
}

describe('wizard flow', () => {
  it('starts at terms with nothing accepted', () => {
    const s = initialState();
    expect(s.step).toBe('terms');
    expect(s.termsAccepted).toBe(false);
    expect(s.jobId).toBeNull();
  });

  it('walks the happy path to submission', () => {
    let s = readyToSubmit();
    expect(s.step).toBe('select_perceptions');
    expect(canSubmit(s)).toBe(true);
    s = beginSubmit(s);
    expect(s.step).toBe('submit');
    s = attachJob(s, 'abc123');
    expect(s.jobId).toBe('abc123');
  });

  it('parses headers from the uploaded file', () => {
    let s = acceptTerms(initialState());
    s = attachFile(s, FILE, CSV);
    expect(s.headers).toEqual(['ID_num', 'TEXT']);
  });

  it('computes the preview from the chosen column', () => {
    let s = acceptTerms(initialState());
    s = attachFile(s, FILE, CSV);
    s = chooseColumns(s, 'TEXT', 'ID_num');
    expect(s.previewRows).toEqual(['first row text', 'second row text', 'third']);
  });

  it('rejects columns that are not in the header', () => {
    let s = acceptTerms(initialState());
    s = attachFile(s, FILE, CSV);
    expect(() => chooseColumns(s, 'BODY', 'ID_num')).toThrow(/not in CSV header/);
  });

  it('refuses submission without at least one perception', () => {
    let s = readyToSubmit();
    s = togglePerception(s, 'joy'); // toggle back off
    expect(s.selectedPerceptions).toHaveLength(0);
    expect(canSubmit(s)).toBe(false);
    expect(() => beginSubmit(s)).toThrow(/requires/);
  });

  it('refuses submission without accepted terms / file / column', () => {
    expect(canSubmit(initialState())).toBe(false);
    const onlyTerms = acceptTerms(initialState());
    expect(canSubmit(onlyTerms)).toBe(false);
    const withFile = attachFile(onlyTerms, FILE, CSV);
    expect(canSubmit(withFile)).toBe(false); // no column chosen yet
  });

  it('cannot skip steps', () => {
    const s = initialState();
    expect(() => attachFile(s, FILE, CSV)).toThrow(/expected step upload/);
    expect(() => beginSubmit(s)).toThrow(/expected step select_perceptions/);
    expect(() => attachJob(s, 'x')).toThrow(/expected step submit/);
  });

  it('select-all checks all 20 perceptions and is idempotent', () => {
    let s = readyToSubmit();
    s = selectAllPerceptions(s);
    expect(s.selectedPerceptions).toHaveLength(20);
    expect(new Set(s.selectedPerceptions)).toEqual(new Set(ALL_PERCEPTIONS));
    const again = selectAllPerceptions(s);
    expect(again.selectedPerceptions).toEqual(s.selectedPerceptions);
  });

  it('rejects unknown perceptions', () => {
    const s = readyToSubmit();
    expect(() => togglePerception(s, 'vibes')).toThrow(/unknown perception/);
  });

  it('back navigation preserves prior selections (round trip)', () => {
    const before = readyToSubmit();
    const back = goBack(goBack(before));
    expect(back.step).toBe('select_column');
    expect(back.textColumn).toBe('TEXT');
    expect(back.selectedPerceptions).toEqual(['joy']);
    const forward = goForward(goForward(back));
    expect(forward.step).toBe('select_perceptions');
    expect(forward.previewRows).toEqual(before.previewRows);
    expect(forward.selectedPerceptions).toEqual(before.selectedPerceptions);
    expect(canSubmit(forward)).toBe(true);
  });

  it('goBack is a no-op on the first step and during submission', () => {
    expect(goBack(initialState()).step).toBe('terms');
    const submitted = beginSubmit(readyToSubmit());
    expect(goBack(submitted).step).toBe('submit');
  });

  it('builds the service config from wizard state', () => {
    const s = selectAllPerceptions(readyToSubmit());
    const config = analysisConfig(s);
    expect(config).toMatchObject({
      id_column: 'ID_num',
      text_column: 'TEXT',
      backend: { kind: 'lexicon' },
    });
    expect((config.selected_perceptions as string[]).length).toBe(20);
  });

  it('marks the wizard complete when polling reports a download', () => {
    let s = attachJob(beginSubmit(readyToSubmit()), 'job-1');
    s = recordPollStatus(s, { kind: 'progress', state: 'running' });
    expect(s.step).toBe('submit');
    s = recordPollStatus(s, { kind: 'download', jobId: 'job-1' });
    expect(s.step).toBe('complete');
  });
});
