import type {
  Centers2dOut,
  ChosenKAck,
  CoherenceCurve,
  LdaTopics,
  Preview,
  ProjectSummary,
  SnapshotMeta,
  SpecSaved,
  SpecUpdate,
  SpecsOut,
  TablesOut,
} from './types.js';

export const API_BASE = '/v1';

/** Non-2xx response. `detail` is the parsed FastAPI detail payload:
 * a list of field errors for 422, an object for 409, a string otherwise. */
export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`HTTP ${status}`);
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  const init: RequestInit = { method, headers: { Accept: 'application/json' } };
  if (body !== undefined) {
    init.headers = { ...init.headers, 'Content-Type': 'application/json' };
    init.body = JSON.stringify(body);
  }
  const res = await fetch(API_BASE + path, init);
  if (!res.ok) {
    let detail: unknown = null;
    try {
      detail = ((await res.json()) as { detail?: unknown }).detail ?? null;
    } catch {
      // non-JSON error body; keep the bare status
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export function getProject(projectId: string): Promise<ProjectSummary> {
  return request('GET', `/projects/${encodeURIComponent(projectId)}`);
}

export function getCoherence(projectId: string): Promise<CoherenceCurve> {
  return request('GET', `/projects/${encodeURIComponent(projectId)}/coherence`);
}

export function putChosenK(projectId: string, k: number): Promise<ChosenKAck> {
  return request('PUT', `/projects/${encodeURIComponent(projectId)}/coherence/chosen`, { k });
}

export function getLdaTopics(projectId: string, k: number): Promise<LdaTopics> {
  return request('GET', `/projects/${encodeURIComponent(projectId)}/lda/${k}/topics`);
}

export function getSpecs(projectId: string): Promise<SpecsOut> {
  return request('GET', `/projects/${encodeURIComponent(projectId)}/specs`);
}

export function putSpec(projectId: string, topicId: number, update: SpecUpdate): Promise<SpecSaved> {
  return request('PUT', `/projects/${encodeURIComponent(projectId)}/specs/${topicId}`, update);
}

export interface PreviewQuery {
  sample?: number;
  seed?: number;
  keywords?: string[];
  threshold?: number;
}

export function getPreview(projectId: string, topicId: number, q: PreviewQuery = {}): Promise<Preview> {
  const params = new URLSearchParams();
  if (q.sample !== undefined) params.set('sample', String(q.sample));
  if (q.seed !== undefined) params.set('seed', String(q.seed));
  for (const kw of q.keywords ?? []) params.append('keywords', kw);
  if (q.threshold !== undefined) params.set('threshold', String(q.threshold));
  const qs = params.toString();
  const suffix = qs ? `?${qs}` : '';
  return request('GET', `/projects/${encodeURIComponent(projectId)}/specs/${topicId}/preview${suffix}`);
}

export function postAssignments(projectId: string): Promise<SnapshotMeta> {
  return request('POST', `/projects/${encodeURIComponent(projectId)}/assignments`);
}

export function getTables(projectId: string, facet: string, within?: string): Promise<TablesOut> {
  const params = new URLSearchParams({ facet });
  if (within) params.set('within', within);
  return request('GET', `/projects/${encodeURIComponent(projectId)}/tables?${params.toString()}`);
}

export function getCenters2d(projectId: string): Promise<Centers2dOut> {
  return request('GET', `/projects/${encodeURIComponent(projectId)}/centers2d`);
}
