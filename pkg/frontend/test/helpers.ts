import type { ItemsPage, ReviewItem } from "../src/types.js";

export function makeItem(id: string, overrides: Partial<ReviewItem> = {}): ReviewItem {
  return {
    snippet_id: id,
    status: "pending",
    text: `text of ${id}`,
    revision: 0,
    score: 0.9,
    podcast_date: "2014-03-07",
    start_ms: 0,
    media: {},
    scenes: [
      {
        scene: { start_frame: 0, end_frame: 40 },
        chosen_track: 0,
        candidates: [
          {
            track_id: 0,
            asd_mean: 0.95,
            face_distance: 0.1,
            passes_asd: true,
            passes_face: true,
            mean_area: 14000,
          },
        ],
        embeddings: { "0": [1, 0] },
      },
    ],
    ...overrides,
  };
}

export function page(items: ReviewItem[], cursor: string | null = null): ItemsPage {
  return { items, next_cursor: cursor };
}

type Responder = (url: string, init?: RequestInit) => { status: number; body: unknown } | undefined;

/** fetch stand-in that records calls and answers from a responder chain. */
export function fakeFetch(responder: Responder) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const impl = (async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const answer = responder(url, init);
    if (!answer) throw new TypeError("network unreachable");
    return {
      ok: answer.status >= 200 && answer.status < 300,
      status: answer.status,
      json: async () => answer.body,
      text: async () => JSON.stringify(answer.body),
    } as Response;
  }) as typeof fetch;
  return { impl, calls };
}
