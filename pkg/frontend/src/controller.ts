import { ConflictError, ReviewApi } from "./api.js";
import { QueueStore } from "./queue.js";
import type { DecisionBody, ListFilter, PromoteReference, ReviewItem } from "./types.js";

export type Banner =
  | { kind: "idle" }
  | { kind: "error"; message: string }
  | { kind: "conflict"; message: string; serverItem: ReviewItem };

/**
 * Wires user actions to API calls. Every verdict issues exactly one
 * decision POST carrying the item's current revision; a stale revision
 * surfaces as a reload prompt (the server's item is only adopted when the
 * user confirms), and a network failure leaves the queue untouched behind
 * a retry banner.
 */
export class ReviewController {
  banner: Banner = { kind: "idle" };

  constructor(
    readonly api: ReviewApi,
    readonly queue: QueueStore,
    private filter: ListFilter = { status: "pending" },
  ) {}

  async loadQueue(): Promise<void> {
    try {
      this.queue.loadPage(await this.api.listItems(this.filter));
      this.banner = { kind: "idle" };
    } catch (error) {
      this.banner = { kind: "error", message: `load failed: ${String(error)} (retry)` };
    }
  }

  async loadMore(): Promise<void> {
    const cursor = this.queue.snapshot().cursor;
    if (!cursor) return;
    try {
      this.queue.loadPage(await this.api.listItems({ ...this.filter, cursor }), true);
    } catch (error) {
      this.banner = { kind: "error", message: `load failed: ${String(error)} (retry)` };
    }
  }

  private async decide(
    verdict: "accept" | "reject",
    promote?: PromoteReference,
  ): Promise<boolean> {
    const item = this.queue.active;
    if (!item) return false;
    const body: DecisionBody = { base_revision: item.revision, verdict };
    const edit = this.queue.unsavedEdit;
    if (edit !== null && edit !== item.text) body.corrected_text = edit;
    if (promote) body.promote_reference = promote;
    try {
      const updated = await this.api.submitDecision(item.snippet_id, body);
      this.queue.applyServerItem(updated);
      this.banner = { kind: "idle" };
      return true;
    } catch (error) {
      if (error instanceof ConflictError) {
        this.banner = {
          kind: "conflict",
          message: `someone else reviewed ${item.snippet_id}; reload to continue`,
          serverItem: error.current,
        };
      } else {
        this.banner = { kind: "error", message: `submit failed: ${String(error)} (retry)` };
      }
      return false;
    }
  }

  accept(): Promise<boolean> {
    return this.decide("accept");
  }

  reject(): Promise<boolean> {
    return this.decide("reject");
  }

  /**
   * Promote the chosen face track of one scene into the reference set.
   * Defaults to the first scene that has a chosen track. A promotion is a
   * positive verdict, so it rides an accept decision.
   */
  promote(sceneIndex?: number): Promise<boolean> {
    const item = this.queue.active;
    if (!item) return Promise.resolve(false);
    const scenes = item.scenes ?? [];
    const scene =
      sceneIndex !== undefined
        ? scenes[sceneIndex]
        : scenes.find((s) => s.chosen_track !== null);
    if (!scene || scene.chosen_track === null) {
      this.banner = { kind: "error", message: "no chosen track to promote" };
      return Promise.resolve(false);
    }
    return this.decide("accept", { scene: scene.scene, track_id: scene.chosen_track });
  }

  /** Adopt the server's version after a conflict; an explicit user action. */
  reloadAfterConflict(): void {
    if (this.banner.kind === "conflict") {
      this.queue.discardEdit();
      this.queue.applyServerItem(this.banner.serverItem);
      this.banner = { kind: "idle" };
    }
  }

  next(): boolean {
    return this.queue.move(1);
  }

  previous(): boolean {
    return this.queue.move(-1);
  }

  beginEdit(): void {
    this.queue.beginEdit();
  }

  updateEdit(text: string): void {
    this.queue.updateEdit(text);
  }

  discardEdit(): void {
    this.queue.discardEdit();
  }
}
