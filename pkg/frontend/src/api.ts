import type { DecisionBody, ItemsPage, ListFilter, ReviewItem } from "./types.js";

/** The service rejected a decision made against a stale revision. */
export class ConflictError extends Error {
  constructor(public readonly current: ReviewItem) {
    super(`stale revision; server is at ${current.revision}`);
  }
}

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = typeof fetch;

/** Thin client over the documented JSON API; one base URL is all the config. */
export class ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly reviewer: string = "reviewer",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  mediaUrl(path: string): string {
    return `${this.baseUrl}/media/${path}`;
  }

  async listItems(filter: ListFilter = {}): Promise<ItemsPage> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filter)) {
      if (value !== undefined && value !== null) params.set(key, String(value));
    }
    const response = await this.fetchImpl(`${this.baseUrl}/api/items?${params}`);
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as ItemsPage;
  }

  async getItem(snippetId: string): Promise<ReviewItem> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/items/${snippetId}`);
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as ReviewItem;
  }

  async submitDecision(snippetId: string, body: DecisionBody): Promise<ReviewItem> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/items/${snippetId}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-Reviewer": this.reviewer },
      body: JSON.stringify(body),
    });
    if (response.status === 409) {
      const detail = (await response.json()) as { detail: { current: ReviewItem } };
      throw new ConflictError(detail.detail.current);
    }
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as ReviewItem;
  }

  async referenceSet(): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/reference-set`);
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return response.json();
  }
}
