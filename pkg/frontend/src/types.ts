/** Shared types for the upload wizard. */

export type WizardStep =
  | 'terms'
  | 'upload'
  | 'select_column'
  | 'preview'
  | 'select_perceptions'
  | 'submit'
  | 'complete';

/** Minimal file descriptor; content travels separately as text. */
export interface UploadFileMeta {
  name: string;
  size: number;
  mimeType?: string;
}

export type UploadValidation =
  | { ok: true }
  | { ok: false; error: 'wrong_type' | 'too_large' };

export interface WizardState {
  step: WizardStep;
  termsAccepted: boolean;
  file: UploadFileMeta | null;
  fileContent: string | null;
  headers: string[];
  textColumn: string | null;
  idColumn: string | null;
  previewRows: string[];
  selectedPerceptions: string[];
  jobId: string | null;
  pollStatus: DisplayState | null;
}

/** Service-side job states, verbatim from the HTTP API. */
export type JobState = 'pending' | 'running' | 'done' | 'failed';

export interface JobStatusResponse {
  job_id: string;
  state: JobState;
  row_count: number;
  warnings: number;
  retention_deadline: number | null;
  error_detail: string | null;
}

/** What the UI renders while a job is in flight. */
export type DisplayState =
  | { kind: 'progress'; state: JobState }
  | { kind: 'download'; jobId: string }
  | { kind: 'error'; detail: string };
