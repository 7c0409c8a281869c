import type { UploadFileMeta, UploadValidation } from './types';

/** Uploads above this limit are rejected client-side. */
export const MAX_UPLOAD_BYTES = 1024 * 1024;

const CSV_MIME_TYPES = new Set(['text/csv', 'application/csv', 'application/vnd.ms-excel']);

/** Accept *.csv files (by extension or MIME) under the size limit. */
export function validateUpload(
  file: UploadFileMeta,
  maxBytes: number = MAX_UPLOAD_BYTES,
): UploadValidation {
  const hasCsvExtension = file.name.toLowerCase().endsWith('.csv');
  const hasCsvMime = file.mimeType !== undefined && CSV_MIME_TYPES.has(file.mimeType);
  if (!hasCsvExtension && !hasCsvMime) {
    return { ok: false, error: 'wrong_type' };
  }
  if (file.size > maxBytes) {
    return { ok: false, error: 'too_large' };
  }
  return { ok: true };
}
