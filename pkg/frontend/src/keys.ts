import type { ReviewController } from "./controller.js";

export const KEYMAP: Record<string, string> = {
  a: "accept",
  r: "reject",
  e: "edit",
  p: "promote",
  arrowright: "next",
  arrowleft: "previous",
};

/**
 * Keyboard-driven review. Shortcuts are suspended while the focus sits in
 * a text field so typing a correction can't fire verdicts; Escape leaves
 * the edit (discarding it is still an explicit button press).
 */
export function bindKeys(controller: ReviewController, target: {
  addEventListener(type: string, handler: (event: KeyboardEvent) => void): void;
}): (event: KeyboardEvent) => void {
  const handler = (event: KeyboardEvent) => {
    const element = event.target as { tagName?: string } | null;
    const tag = element?.tagName?.toLowerCase();
    if (tag === "textarea" || tag === "input") return;
    const action = KEYMAP[event.key.toLowerCase()];
    if (!action) return;
    event.preventDefault();
    switch (action) {
      case "accept":
        void controller.accept();
        break;
      case "reject":
        void controller.reject();
        break;
      case "edit":
        controller.beginEdit();
        break;
      case "promote":
        void controller.promote();
        break;
      case "next":
        controller.next();
        break;
      case "previous":
        controller.previous();
        break;
    }
  };
  target.addEventListener("keydown", handler);
  return handler;
}
