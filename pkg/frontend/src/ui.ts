import type { ReviewController } from "./controller.js";
import type { QueueState } from "./queue.js";
import type { ReviewItem, SceneSummary } from "./types.js";

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

function sceneRow(scene: SceneSummary, index: number, onPromote: (i: number) => void): HTMLElement {
  const row = el("div", "scene");
  const span = `${scene.scene.start_frame}–${scene.scene.end_frame}`;
  const chosen = scene.chosen_track === null ? "no valid face" : `track ${scene.chosen_track}`;
  row.appendChild(el("span", "scene-span", `scene ${span}: ${chosen}`));
  for (const candidate of scene.candidates) {
    row.appendChild(
      el(
        "span",
        candidate.passes_asd && candidate.passes_face ? "cand pass" : "cand fail",
        `#${candidate.track_id} asd=${candidate.asd_mean.toFixed(2)} d=${candidate.face_distance.toFixed(2)}`,
      ),
    );
  }
  if (scene.chosen_track !== null) {
    const button = el("button", "promote-btn", "promote") as HTMLButtonElement;
    button.addEventListener("click", () => onPromote(index));
    row.appendChild(button);
  }
  return row;
}

/** Renders the queue into a root node and keeps it in sync with the store. */
export function mount(root: HTMLElement, controller: ReviewController): void {
  const banner = el("div", "banner");
  const list = el("ul", "queue");
  const detail = el("div", "detail");
  root.append(banner, list, detail);

  const render = (state: QueueState) => {
    banner.textContent = "";
    if (controller.banner.kind === "error") {
      banner.textContent = controller.banner.message;
      const retry = el("button", "retry", "retry") as HTMLButtonElement;
      retry.addEventListener("click", () => void controller.loadQueue());
      banner.appendChild(retry);
    } else if (controller.banner.kind === "conflict") {
      banner.textContent = controller.banner.message;
      const reload = el("button", "reload", "reload item") as HTMLButtonElement;
      reload.addEventListener("click", () => controller.reloadAfterConflict());
      banner.appendChild(reload);
    }

    list.textContent = "";
    state.items.forEach((item: ReviewItem, index: number) => {
      const entry = el(
        "li",
        index === state.activeIndex ? `item active ${item.status}` : `item ${item.status}`,
        `${item.snippet_id} [${item.status}] ${item.podcast_date}`,
      );
      list.appendChild(entry);
    });

    detail.textContent = "";
    const item = state.items[state.activeIndex];
    if (!item) {
      detail.appendChild(el("p", "empty", "queue is empty"));
      return;
    }
    detail.appendChild(el("h2", "title", `${item.snippet_id} (rev ${item.revision})`));
    const preview = item.media["face_preview"];
    if (preview) {
      const link = el("a", "preview", "crop preview") as HTMLAnchorElement;
      link.href = controller.api.mediaUrl(preview);
      detail.appendChild(link);
    }
    item.scenes.forEach((scene, index) =>
      detail.appendChild(sceneRow(scene, index, (i) => void controller.promote(i))),
    );

    if (state.unsavedEdit !== null) {
      const editor = el("textarea", "editor") as HTMLTextAreaElement;
      editor.value = state.unsavedEdit;
      editor.addEventListener("input", () => controller.updateEdit(editor.value));
      const discard = el("button", "discard", "discard edit") as HTMLButtonElement;
      discard.addEventListener("click", () => controller.discardEdit());
      detail.append(editor, discard);
      editor.focus();
    } else {
      detail.appendChild(el("p", "text", item.text));
    }
    detail.appendChild(
      el("p", "help", "A accept · R reject · E edit · P promote · ←/→ navigate"),
    );
  };

  controller.queue.subscribe(render);
  render(controller.queue.snapshot());

  // a refresh may lose the unsaved edit and nothing else; warn first
  window.addEventListener("beforeunload", (event) => {
    if (controller.queue.hasUnsavedEdit) {
      event.preventDefault();
    }
  });
}
