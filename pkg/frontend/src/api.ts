/** Thin fetch client for the quality-gate service. */

import type {
  AttemptResponse,
  HealthResponse,
  PredictResponse,
  SessionPayload,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`service responded ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ServiceClient {
  readonly baseUrl: string;
  health(): Promise<HealthResponse>;
  createSession(): Promise<string>;
  submitAttempt(sessionId: string, image: BodyInit, mediaType?: string): Promise<AttemptResponse>;
  getSession(sessionId: string): Promise<SessionPayload>;
  predict(image: BodyInit, mediaType?: string): Promise<PredictResponse>;
}

async function parse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { error?: string };
      if (body && typeof body.error === 'string') detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export function createClient(baseUrl: string, fetchImpl?: FetchLike): ServiceClient {
  const base = baseUrl.replace(/\/+$/, '');
  const doFetch: FetchLike = fetchImpl ?? ((input, init) => fetch(input, init));

  return {
    baseUrl: base,

    async health() {
      return parse<HealthResponse>(await doFetch(`${base}/healthz`));
    },

    async createSession() {
      const doc = await parse<{ session_id: string }>(
        await doFetch(`${base}/v1/sessions`, { method: 'POST' }),
      );
      return doc.session_id;
    },

    async submitAttempt(sessionId, image, mediaType = 'application/octet-stream') {
      return parse<AttemptResponse>(
        await doFetch(`${base}/v1/sessions/${encodeURIComponent(sessionId)}/attempts`, {
          method: 'POST',
          body: image,
          headers: { 'Content-Type': mediaType },
        }),
      );
    },

    async getSession(sessionId) {
      return parse<SessionPayload>(
        await doFetch(`${base}/v1/sessions/${encodeURIComponent(sessionId)}`),
      );
    },

    async predict(image, mediaType = 'application/octet-stream') {
      return parse<PredictResponse>(
        await doFetch(`${base}/v1/predict`, {
          method: 'POST',
          body: image,
          headers: { 'Content-Type': mediaType },
        }),
      );
    },
  };
}
