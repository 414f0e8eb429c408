/** Thin client for the review server's JSON API. */

import type {
  DecisionBody,
  FinalizeSummary,
  NextItemResponse,
  ReviewItemView,
  SessionInfo,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  private readonly base: string;
  private readonly token: string | null;
  private readonly fetchImpl: FetchLike;

  constructor(base = '', token: string | null = null, fetchImpl?: FetchLike) {
    // Record ids travel as one path segment; trailing slash would split them.
    this.base = base.replace(/\/$/, '');
    this.token = token;
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  /** Ids may contain '#' and other URL-hostile characters. */
  itemPath(recordId: string): string {
    return `${this.base}/api/items/${encodeURIComponent(recordId)}`;
  }

  imageUrl(item: ReviewItemView): string | null {
    return item.image_url === null ? null : `${this.base}${item.image_url}`;
  }

  async session(): Promise<SessionInfo> {
    return this.request<SessionInfo>('GET', `${this.base}/api/session`);
  }

  async nextItem(): Promise<NextItemResponse> {
    return this.request<NextItemResponse>('GET', `${this.base}/api/items/next`);
  }

  async item(recordId: string): Promise<ReviewItemView> {
    return this.request<ReviewItemView>('GET', this.itemPath(recordId));
  }

  async decide(recordId: string, body: DecisionBody): Promise<void> {
    await this.request<void>('POST', `${this.itemPath(recordId)}/decision`, body);
  }

  async finalize(): Promise<FinalizeSummary> {
    return this.request<FinalizeSummary>('POST', `${this.base}/api/finalize`);
  }

  private async request<T>(method: string, url: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (this.token !== null) {
      init.headers = { Authorization: `Bearer ${this.token}` };
    }
    if (body !== undefined) {
      init.headers = { ...init.headers, 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(url, init);
    if (!response.ok) {
      throw new ApiError(response.status, await extractError(response));
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }
}

async function extractError(response: Response): Promise<string> {
  try {
    const payload = (await response.json()) as { error?: string };
    if (typeof payload.error === 'string') return payload.error;
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${response.status}`;
}
