import type {
  DecisionInput,
  DecisionRecord,
  RejectionDetail,
  RejectionPage,
  Report,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && body.detail) detail = JSON.stringify(body.detail);
    } catch {
      // non-JSON error body, keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export function listRejections(page = 1, pageSize = 20): Promise<RejectionPage> {
  return request(`/rejections?page=${page}&page_size=${pageSize}`);
}

export function getRejection(id: string): Promise<RejectionDetail> {
  return request(`/rejections/${encodeURIComponent(id)}`);
}

export function postDecision(id: string, decision: DecisionInput): Promise<DecisionRecord> {
  return request(`/rejections/${encodeURIComponent(id)}/decision`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(decision),
  });
}

export function getReport(): Promise<Report> {
  return request('/report');
}
