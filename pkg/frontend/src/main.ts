// Entry point: landing screen first (service URL + annotator id), then the
// one-item-at-a-time rating flow.

import { AnnotationApi } from "./api.js";
import { AnnotationSession } from "./session.js";
import { attach } from "./view.js";

function landing(root: HTMLElement, onStart: (base: string, annotator: string) => void): void {
  root.replaceChildren();
  const form = document.createElement("form");
  form.className = "landing";
  form.innerHTML = `
    <h1>Sentence rating</h1>
    <label>Service URL <input id="base" type="url" value="${window.location.origin}" required></label>
    <label>Annotator id <input id="annotator" type="text" required></label>
    <button type="submit">Start</button>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const base = (form.querySelector("#base") as HTMLInputElement).value.trim();
    const annotator = (form.querySelector("#annotator") as HTMLInputElement).value.trim();
    if (base && annotator) {
      onStart(base, annotator);
    }
  });
  root.append(form);
}

export function boot(root: HTMLElement): void {
  landing(root, (base, annotator) => {
    const session = new AnnotationSession(new AnnotationApi(base, annotator));
    attach(root, session);
    void session.start();
  });
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  boot(rootElement);
}
