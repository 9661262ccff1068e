// DOM rendering. Panels are labeled neutrally ("Output A"/"Output B");
// nothing system-identifying ever exists client-side, so nothing can leak
// into the page.

import { Criterion, Slot } from "./api.js";
import { AnnotationSession } from "./session.js";

export const LIKERT_LABELS = [
  "Strongly Disagree",
  "Disagree",
  "Neutral",
  "Agree",
  "Strongly Agree",
];

export const QUESTIONS: Record<Criterion, string> = {
  meaning: "The simplified sentence keeps the major information.",
  simplicity: "The simplified sentence is well simplified.",
};

const SLOTS: Slot[] = ["A", "B"];
const CRITERIA: Criterion[] = ["meaning", "simplicity"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function likertWidget(
  session: AnnotationSession,
  slot: Slot,
  criterion: Criterion,
  chosen: number | undefined,
): HTMLElement {
  const field = el("fieldset", "likert");
  field.append(el("legend", undefined, QUESTIONS[criterion]));
  LIKERT_LABELS.forEach((text, index) => {
    const value = index + 1;
    const label = el("label");
    const radio = el("input");
    radio.type = "radio";
    radio.name = `${slot}-${criterion}`;
    radio.value = String(value);
    radio.checked = chosen === value;
    radio.addEventListener("change", () => session.choose(slot, criterion, value));
    label.append(radio, document.createTextNode(` ${text}`));
    field.append(label);
  });
  return field;
}

export function render(root: HTMLElement, session: AnnotationSession): void {
  const state = session.snapshot();
  root.replaceChildren();

  if (state.error) {
    const banner = el("div", "banner error", state.error);
    const retry = el("button", undefined, "Retry");
    retry.id = "retry";
    retry.addEventListener("click", () => void session.retry());
    banner.append(retry);
    root.append(banner);
  }

  if (state.phase === "loading" && !state.error) {
    root.append(el("p", "status", "Loading..."));
    return;
  }

  if (state.phase === "done") {
    const done = el("div", "done");
    done.append(el("h2", undefined, "All done"));
    if (state.progress) {
      done.append(
        el("p", "progress", `You rated ${state.progress.done} of ${state.progress.total} items.`),
      );
    }
    done.append(el("p", undefined, "Thank you. You can close this window."));
    root.append(done);
    return;
  }

  if (state.phase !== "item" || state.item === null) {
    return;
  }

  const item = state.item;
  if (state.progress) {
    root.append(
      el("p", "progress", `Completed ${state.progress.done} of ${state.progress.total}`),
    );
  }
  const sourceBlock = el("section", "source");
  sourceBlock.append(el("h2", undefined, "Original sentence"), el("p", undefined, item.source));
  root.append(sourceBlock);

  for (const slot of SLOTS) {
    const output = item.outputs.find((o) => o.slot === slot);
    const panel = el("section", "panel");
    panel.append(el("h2", undefined, `Output ${slot}`), el("p", "output", output ? output.text : ""));
    for (const criterion of CRITERIA) {
      panel.append(likertWidget(session, slot, criterion, state.ratings[`${slot}:${criterion}`]));
    }
    root.append(panel);
  }

  if (state.validation) {
    root.append(el("p", "validation", `Rejected: ${state.validation}`));
  }

  const submit = el("button", "submit", state.submitting ? "Submitting..." : "Submit ratings");
  submit.id = "submit";
  submit.disabled = !state.canSubmit;
  submit.addEventListener("click", () => void session.submit());
  root.append(submit);
}

export function attach(root: HTMLElement, session: AnnotationSession): void {
  session.onChange(() => render(root, session));
  render(root, session);
}
