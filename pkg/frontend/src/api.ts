// Thin typed client for the steering service HTTP API.

import type {
  AddConstraintResponse,
  CreateSessionOptions,
  ReclusterResponse,
  RemoveConstraintResponse,
  RunRecord,
  ServiceErrorPayload,
  SessionState,
} from './types.js';

export class ServiceError extends Error {
  readonly status: number;
  readonly payload: ServiceErrorPayload;

  constructor(status: number, payload: ServiceErrorPayload) {
    super(payload.message);
    this.status = status;
    this.payload = payload;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { 'content-type': 'application/json' },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new ServiceError(response.status, body as ServiceErrorPayload);
  }
  return body as T;
}

export class SteerClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  createSession(options: CreateSessionOptions = {}): Promise<SessionState> {
    return request(this.url('/sessions'), {
      method: 'POST',
      body: JSON.stringify(options),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return request(this.url(`/sessions/${sessionId}`));
  }

  addConstraint(
    sessionId: string,
    kind: 'ML' | 'CL',
    a: string,
    b: string,
  ): Promise<AddConstraintResponse> {
    return request(this.url(`/sessions/${sessionId}/constraints`), {
      method: 'POST',
      body: JSON.stringify({ kind, a, b }),
    });
  }

  removeConstraint(sessionId: string, index: number): Promise<RemoveConstraintResponse> {
    return request(this.url(`/sessions/${sessionId}/constraints/${index}`), {
      method: 'DELETE',
    });
  }

  recluster(sessionId: string): Promise<ReclusterResponse> {
    return request(this.url(`/sessions/${sessionId}/recluster`), { method: 'POST' });
  }

  metricsHistory(sessionId: string): Promise<{ history: RunRecord[] }> {
    return request(this.url(`/sessions/${sessionId}/metrics`));
  }

  exportLog(sessionId: string): Promise<{ session_id: string; actions: unknown[] }> {
    return request(this.url(`/sessions/${sessionId}/export`));
  }

  async health(): Promise<boolean> {
    try {
      const body = await request<{ status: string }>(this.url('/health'));
      return body.status === 'ok';
    } catch {
      return false;
    }
  }
}
