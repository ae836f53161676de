import type { ItemsPage, ReviewItem } from "./types.js";

/**
 * Client-side queue state. All of it is reconstructable from the service;
 * the only thing a refresh can lose is the current unsaved edit, and
 * navigation never discards that silently: moving away requires the edit
 * to be confirmed (kept for the next decision) or explicitly discarded.
 */
export interface QueueState {
  items: ReviewItem[];
  cursor: string | null;
  activeIndex: number;
  unsavedEdit: string | null;
}

export class QueueStore {
  private state: QueueState = { items: [], cursor: null, activeIndex: 0, unsavedEdit: null };
  private listeners: Array<(s: QueueState) => void> = [];

  subscribe(listener: (s: QueueState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.snapshot());
  }

  snapshot(): QueueState {
    return {
      ...this.state,
      items: this.state.items.slice(),
    };
  }

  get active(): ReviewItem | null {
    return this.state.items[this.state.activeIndex] ?? null;
  }

  get unsavedEdit(): string | null {
    return this.state.unsavedEdit;
  }

  get hasUnsavedEdit(): boolean {
    return this.state.unsavedEdit !== null;
  }

  loadPage(page: ItemsPage, append = false): void {
    const items = append ? this.state.items.concat(page.items) : page.items.slice();
    const activeIndex = append ? this.state.activeIndex : 0;
    this.state = { items, cursor: page.next_cursor, activeIndex, unsavedEdit: null };
    this.emit();
  }

  /** Replace the stored copy of an item after the server applied a decision. */
  applyServerItem(updated: ReviewItem): void {
    const items = this.state.items.map((item) =>
      item.snippet_id === updated.snippet_id ? updated : item,
    );
    this.state = { ...this.state, items, unsavedEdit: null };
    this.emit();
  }

  /** Move the active cursor; refuses while an edit is unsaved. */
  move(delta: 1 | -1): boolean {
    if (this.state.unsavedEdit !== null) return false;
    const next = this.state.activeIndex + delta;
    if (next < 0 || next >= this.state.items.length) return false;
    this.state = { ...this.state, activeIndex: next };
    this.emit();
    return true;
  }

  beginEdit(): void {
    const item = this.active;
    if (item && this.state.unsavedEdit === null) {
      this.state = { ...this.state, unsavedEdit: item.text };
      this.emit();
    }
  }

  updateEdit(text: string): void {
    if (this.state.unsavedEdit !== null) {
      this.state = { ...this.state, unsavedEdit: text };
      this.emit();
    }
  }

  discardEdit(): void {
    this.state = { ...this.state, unsavedEdit: null };
    this.emit();
  }
}
