import { ReviewApi } from "./api.js";
import { ReviewController } from "./controller.js";
import { bindKeys } from "./keys.js";
import { QueueStore } from "./queue.js";
import { mount } from "./ui.js";

// the one piece of configuration: where the review service lives
function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) {
    localStorage.setItem("review-api", fromQuery);
    return fromQuery;
  }
  return localStorage.getItem("review-api") ?? "http://127.0.0.1:8100";
}

const reviewer = localStorage.getItem("reviewer") ?? "reviewer";
const controller = new ReviewController(new ReviewApi(baseUrl(), reviewer), new QueueStore());
bindKeys(controller, window);
mount(document.getElementById("app") as HTMLElement, controller);
void controller.loadQueue();
