/**
 * Typed client for the annotation service HTTP API.
 */

export interface ItemView {
  id: string;
  title: string;
  brand: string;
  price: number | null;
}

export interface SessionPayload {
  session_id: string;
  items: ItemView[];
  gap_count: number;
}

export interface AnnotatorDistribution {
  [bucket: string]: number;
}

export interface ProgressReport {
  annotators: Record<string, AnnotatorDistribution>;
  length_types: Record<string, Record<string, number>>;
  total_records: number;
}

export interface Credentials {
  annotator: string;
  token: string;
}

/** HTTP-level failure; `status` is 0 for network errors. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  get isConflict(): boolean {
    return this.status === 409;
  }

  get isValidation(): boolean {
    return this.status === 400;
  }

  get isNetwork(): boolean {
    return this.status === 0;
  }
}

export function validatePayload(raw: unknown): SessionPayload {
  const payload = raw as SessionPayload;
  if (
    !payload ||
    typeof payload.session_id !== 'string' ||
    !Array.isArray(payload.items) ||
    typeof payload.gap_count !== 'number' ||
    payload.gap_count !== payload.items.length - 1 ||
    payload.items.length < 1
  ) {
    throw new ApiError(0, 'malformed session payload from server');
  }
  for (const item of payload.items) {
    if (typeof item.id !== 'string' || typeof item.title !== 'string') {
      throw new ApiError(0, 'malformed item in session payload');
    }
  }
  return payload;
}

async function detail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly creds: Credentials,
  ) {}

  private async request(path: string, options?: RequestInit): Promise<Response> {
    const sep = path.includes('?') ? '&' : '?';
    const url = `${this.baseUrl}${path}${sep}annotator=${encodeURIComponent(this.creds.annotator)}`;
    let response: Response;
    try {
      response = await fetch(url, {
        ...options,
        headers: {
          'Content-Type': 'application/json',
          'X-Annot-Token': this.creds.token,
          ...options?.headers,
        },
      });
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    return response;
  }

  /** Next unlabeled session for this annotator, or null when done. */
  async nextSession(): Promise<SessionPayload | null> {
    const response = await this.request('/api/session/next');
    if (response.status === 404) {
      return null;
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detail(response));
    }
    return validatePayload(await response.json());
  }

  async submitLabels(
    sessionId: string,
    labels: number[],
  ): Promise<{ record_id: number }> {
    const response = await this.request(
      `/api/session/${encodeURIComponent(sessionId)}/labels`,
      { method: 'POST', body: JSON.stringify({ gap_labels: labels }) },
    );
    if (!response.ok) {
      throw new ApiError(response.status, await detail(response));
    }
    return (await response.json()) as { record_id: number };
  }

  async progress(): Promise<ProgressReport> {
    const response = await this.request('/api/progress');
    if (!response.ok) {
      throw new ApiError(response.status, await detail(response));
    }
    return (await response.json()) as ProgressReport;
  }
}
