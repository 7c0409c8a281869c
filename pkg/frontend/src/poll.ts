/**
 * Status polling: repeat until the job reaches a terminal state, backing
 * off between attempts. Transient failures (network errors, 5xx) keep the
 * loop alive; terminal states stop it. Cancelable via AbortSignal.
 */
import { ApiError } from './api';
import type { DisplayState, JobStatusResponse } from './types';

export interface PollOptions {
  intervalMs?: number;
  backoffFactor?: number;
  maxIntervalMs?: number;
  maxAttempts?: number;
  sleep?: (ms: number) => Promise<void>;
  signal?: AbortSignal;
  onUpdate?: (status: DisplayState) => void;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export function toDisplayState(status: JobStatusResponse): DisplayState {
  switch (status.state) {
    case 'done':
      return { kind: 'download', jobId: status.job_id };
    case 'failed':
      return { kind: 'error', detail: status.error_detail ?? 'job failed' };
    default:
      return { kind: 'progress', state: status.state };
  }
}

export async function pollStatus(
  fetchStatus: () => Promise<JobStatusResponse>,
  options: PollOptions = {},
): Promise<DisplayState> {
  const {
    intervalMs = 500,
    backoffFactor = 1.5,
    maxIntervalMs = 5000,
    maxAttempts = 120,
    sleep = defaultSleep,
    signal,
    onUpdate,
  } = options;

  let wait = intervalMs;
  for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
    if (signal?.aborted) {
      throw new Error('polling canceled');
    }
    try {
      const status = await fetchStatus();
      const display = toDisplayState(status);
      onUpdate?.(display);
      if (display.kind !== 'progress') {
        return display;
      }
    } catch (error) {
      // hard client errors will not heal; everything else is transient
      if (error instanceof ApiError && error.status < 500 && error.status !== 429) {
        throw error;
      }
      onUpdate?.({ kind: 'progress', state: 'pending' });
    }
    await sleep(wait);
    wait = Math.min(wait * backoffFactor, maxIntervalMs);
  }
  throw new Error('polling gave up before the job finished');
}
