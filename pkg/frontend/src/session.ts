// One-pass annotation session: fetch an item, collect four Likert choices,
// submit, advance. No back-navigation; the store behind the service is
// append-only. Network failures keep all chosen ratings and expose a retry.

import {
  AnnotationApi,
  Criterion,
  ItemView,
  Progress,
  RatingsBody,
  Slot,
} from "./api.js";

export type Phase = "loading" | "item" | "done";

export interface SessionSnapshot {
  phase: Phase;
  item: ItemView | null;
  ratings: Partial<Record<string, number>>; // key: `${slot}:${criterion}`
  canSubmit: boolean;
  submitting: boolean;
  progress: Progress | null;
  /** Network-failure banner; choosing ratings is still possible. */
  error: string | null;
  /** Inline message for a 422 rejection. */
  validation: string | null;
}

const SLOTS: Slot[] = ["A", "B"];
const CRITERIA: Criterion[] = ["meaning", "simplicity"];

export class AnnotationSession {
  private phase: Phase = "loading";
  private item: ItemView | null = null;
  private ratings: Map<string, number> = new Map();
  private submitting = false;
  private progress: Progress | null = null;
  private error: string | null = null;
  private validation: string | null = null;
  private retryAction: (() => Promise<void>) | null = null;
  private listeners: (() => void)[] = [];

  constructor(private readonly api: AnnotationApi) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  snapshot(): SessionSnapshot {
    return {
      phase: this.phase,
      item: this.item,
      ratings: Object.fromEntries(this.ratings),
      canSubmit: this.canSubmit(),
      submitting: this.submitting,
      progress: this.progress,
      error: this.error,
      validation: this.validation,
    };
  }

  canSubmit(): boolean {
    if (this.phase !== "item" || this.item === null || this.submitting) {
      return false;
    }
    return SLOTS.every((slot) =>
      CRITERIA.every((criterion) => this.ratings.has(`${slot}:${criterion}`)),
    );
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  choose(slot: Slot, criterion: Criterion, value: number): void {
    if (this.phase !== "item" || value < 1 || value > 5) {
      return;
    }
    this.ratings.set(`${slot}:${criterion}`, value);
    this.validation = null;
    this.notify();
  }

  /** Re-run whatever network step failed last; chosen ratings survive. */
  async retry(): Promise<void> {
    const action = this.retryAction;
    this.retryAction = null;
    this.error = null;
    this.notify();
    if (action) {
      await action();
    }
  }

  private async loadNext(): Promise<void> {
    this.phase = "loading";
    this.error = null;
    this.validation = null;
    this.notify();
    try {
      const item = await this.api.nextItem();
      if (item === null) {
        this.progress = await this.api.progress();
        this.phase = "done";
        this.item = null;
      } else {
        this.item = item;
        this.phase = "item";
        this.ratings = new Map();
      }
    } catch (err) {
      this.error = `Could not reach the service: ${String(err)}`;
      this.retryAction = () => this.loadNext();
    }
    this.notify();
  }

  async submit(): Promise<void> {
    if (!this.canSubmit() || this.item === null) {
      return; // also swallows double-clicks: submitting blocks canSubmit
    }
    const body: RatingsBody = {
      item_id: this.item.item_id,
      annotator: this.api.annotator,
      ratings: {
        A: this.slotRatings("A"),
        B: this.slotRatings("B"),
      },
    };
    this.submitting = true;
    this.notify();
    try {
      const outcome = await this.api.submitRatings(body);
      this.submitting = false;
      if (outcome.kind === "invalid") {
        this.validation = outcome.detail;
        this.notify();
        return;
      }
      // accepted, or duplicate (already rated elsewhere): advance either way
      this.progress = await this.api.progress();
      await this.loadNext();
    } catch (err) {
      this.submitting = false;
      this.error = `Could not submit: ${String(err)}`;
      this.retryAction = () => this.submit();
      this.notify();
    }
  }

  private slotRatings(slot: Slot): { meaning: number; simplicity: number } {
    return {
      meaning: this.ratings.get(`${slot}:meaning`) ?? 0,
      simplicity: this.ratings.get(`${slot}:simplicity`) ?? 0,
    };
  }
}
