/** Thin client over the batch-analysis HTTP API. */
import type { JobStatusResponse } from './types';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly authToken?: string,
  ) {}

  private headers(): Record<string, string> {
    return this.authToken ? { Authorization: `Bearer ${this.authToken}` } : {};
  }

  /** POST /jobs with multipart file + config; resolves to the job id. */
  async submitJob(
    fileName: string,
    fileContent: string | Uint8Array,
    config: Record<string, unknown>,
  ): Promise<string> {
    const form = new FormData();
    const payload =
      typeof fileContent === 'string'
        ? new Blob([fileContent], { type: 'text/csv' })
        : new Blob([fileContent.buffer as ArrayBuffer], { type: 'text/csv' });
    form.append('file', payload, fileName);
    form.append('config', JSON.stringify(config));
    const response = await fetch(`${this.baseUrl}/jobs`, {
      method: 'POST',
      body: form,
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    const body = (await response.json()) as { job_id: string };
    return body.job_id;
  }

  async getStatus(jobId: string): Promise<JobStatusResponse> {
    const response = await fetch(`${this.baseUrl}/jobs/${jobId}`, {
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as JobStatusResponse;
  }

  /** GET /jobs/{id}/result; 404 until the job is done. */
  async downloadResult(jobId: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/jobs/${jobId}/result`, {
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response.text();
  }

  async deleteJob(jobId: string): Promise<void> {
    const response = await fetch(`${this.baseUrl}/jobs/${jobId}`, {
      method: 'DELETE',
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
  }
}
