import { describe, expect, it } from 'vitest';

import { ApiError } from '../src/api';
import { pollStatus, toDisplayState } from '../src/poll';
import type { JobStatusResponse } from '../src/types';

function status(state: JobStatusResponse['state'], detail: string | null = null): JobStatusResponse {
  return {
    job_id: 'j1',
    state,
    row_count: 0,
    warnings: 0,
    retention_deadline: null,
    error_detail: detail,
  };
}

const instantSleep = () => Promise.resolve();

describe('display-state mapping', () => {
  it('maps service states to UI states', () => {
    expect(toDisplayState(status('pending'))).toEqual({ kind: 'progress', state: 'pending' });
    expect(toDisplayState(status('running'))).toEqual({ kind: 'progress', state: 'running' });
    expect(toDisplayState(status('done'))).toEqual({ kind: 'download', jobId: 'j1' });
    expect(toDisplayState(status('failed', 'broke'))).toEqual({ kind: 'error', detail: 'broke' });
  });
});

describe('pollStatus', () => {
  it('polls until done', async () => {
    const script = [status('pending'), status('running'), status('done')];
    let call = 0;
    const result = await pollStatus(async () => script[Math.min(call++, 2)]!, {
      sleep: instantSleep,
    });
    expect(result).toEqual({ kind: 'download', jobId: 'j1' });
    expect(call).toBe(3);
  });

  it('surfaces failure detail and stops', async () => {
    const result = await pollStatus(async () => status('failed', 'MissingColumn: TEXT'), {
      sleep: instantSleep,
    });
    expect(result).toEqual({ kind: 'error', detail: 'MissingColumn: TEXT' });
  });

  it('retries through transient 503s and then succeeds', async () => {
    let call = 0;
    const result = await pollStatus(
      async () => {
        call += 1;
        if (call <= 3) throw new ApiError(503, 'unavailable');
        return status('done');
      },
      { sleep: instantSleep },
    );
    expect(result).toEqual({ kind: 'download', jobId: 'j1' });
    expect(call).toBe(4);
  });

  it('gives up on hard client errors', async () => {
    await expect(
      pollStatus(async () => {
        throw new ApiError(404, 'gone');
      }, { sleep: instantSleep }),
    ).rejects.toThrow('gone');
  });

  it('is cancelable', async () => {
    const controller = new AbortController();
    controller.abort();
    await expect(
      pollStatus(async () => status('pending'), {
        sleep: instantSleep,
        signal: controller.signal,
      }),
    ).rejects.toThrow(/canceled/);
  });

  it('backs off between attempts up to the cap', async () => {
    const waits: number[] = [];
    let call = 0;
    await pollStatus(
      async () => (call++ < 4 ? status('running') : status('done')),
      {
        intervalMs: 100,
        backoffFactor: 2,
        maxIntervalMs: 350,
        sleep: async (ms) => {
          waits.push(ms);
        },
      },
    );
    expect(waits).toEqual([100, 200, 350, 350]);
  });

  it('reports progress updates through onUpdate', async () => {
    const seen: string[] = [];
    let call = 0;
    await pollStatus(
      async () => (call++ === 0 ? status('running') : status('done')),
      {
        sleep: instantSleep,
        onUpdate: (s) => seen.push(s.kind),
      },
    );
    expect(seen).toEqual(['progress', 'download']);
  });
});
