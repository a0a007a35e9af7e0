/**
 * Typed client for the probing service JSON API.
 *
 * Every endpoint the backend exposes is wrapped here; errors arrive as
 * `{error, message}` envelopes and are rethrown as ApiError so callers can
 * branch on the machine-readable code.
 */

export interface LanguageInfo {
  code: string;
  name: string;
}

export interface TaskInfo {
  name: string;
  kind: 'single_token' | 'token_pair';
  description: string;
}

export interface LayerInfo {
  name: string;
  dim: number;
}

export interface UploadInfo {
  id: string;
  kind: 'plain_table' | 'layer_bundle';
  detected_dim: number;
  byte_size: number;
  stored_at: string;
  detected_layers: LayerInfo[] | null;
}

export interface SnapshotRef {
  label: string;
  upload_id: string;
}

export interface JobRequest {
  language: string;
  tasks: string[];
  layer?: string;
  snapshots: SnapshotRef[];
  seed?: number;
}

export interface JobCreated {
  job_id: string;
  public_token: string;
}

export type JobState = 'queued' | 'loading' | 'probing' | 'done' | 'failed';

export interface JobProgress {
  state: JobState;
  fraction: number;
  current_task: string | null;
}

export interface CellMetrics {
  task: string;
  snapshot: string;
  test_accuracy: number;
  test_loss: number;
  dev_best_accuracy: number;
  epochs_run: number;
  oov_rate: number;
}

export interface ChartDoc {
  axes: string[];
  series: { label: string; values: number[] }[];
  table: { header: string[]; rows: (string | number)[][] };
}

export interface ResultDoc {
  state: 'done' | 'failed';
  cause?: string;
  language?: string;
  tasks?: string[];
  snapshots?: string[];
  cells?: CellMetrics[];
  chart?: ChartDoc;
  created_at?: string;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch (err) {
    throw new ApiError('network_error', String(err), 0);
  }
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON body: fall through to the generic error below
  }
  if (!response.ok) {
    const envelope = body as { error?: string; message?: string } | null;
    throw new ApiError(
      envelope?.error ?? 'http_error',
      envelope?.message ?? `HTTP ${response.status}`,
      response.status,
    );
  }
  return body as T;
}

export const api = {
  getLanguages(): Promise<LanguageInfo[]> {
    return request('/api/languages');
  },

  getTasks(language: string): Promise<TaskInfo[]> {
    return request(`/api/languages/${encodeURIComponent(language)}/tasks`);
  },

  createJob(req: JobRequest): Promise<JobCreated> {
    return request('/api/jobs', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(req),
    });
  },

  getProgress(jobId: string): Promise<JobProgress> {
    return request(`/api/jobs/${encodeURIComponent(jobId)}`);
  },

  getResult(publicToken: string): Promise<ResultDoc> {
    return request(`/api/results/${encodeURIComponent(publicToken)}`);
  },
};
