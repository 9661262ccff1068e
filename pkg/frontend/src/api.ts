// Typed client for the annotation service API. Every request and response
// body passes through a PayloadLog so tests can prove that nothing the
// client ever sees or sends contains blinding information.

export type Slot = "A" | "B";
export type Criterion = "meaning" | "simplicity";

export interface ItemView {
  item_id: string;
  source: string;
  outputs: { slot: Slot; text: string }[];
  criteria: string[];
}

export interface SlotRatings {
  meaning: number;
  simplicity: number;
}

export interface RatingsBody {
  item_id: string;
  annotator: string;
  ratings: { A: SlotRatings; B: SlotRatings };
}

export interface Progress {
  done: number;
  total: number;
}

export type SubmitOutcome =
  | { kind: "accepted" }
  | { kind: "duplicate" }
  | { kind: "invalid"; detail: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Append-only record of every payload the client touched. */
export class PayloadLog {
  readonly entries: { direction: "sent" | "received"; text: string }[] = [];

  record(direction: "sent" | "received", text: string): void {
    this.entries.push({ direction, text });
  }

  /** True when some logged payload contains any of the given fragments. */
  contains(fragments: string[]): boolean {
    return this.entries.some((entry) =>
      fragments.some((fragment) => entry.text.includes(fragment)),
    );
  }
}

export class AnnotationApi {
  private readonly base: string;

  constructor(
    baseUrl: string,
    readonly annotator: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    readonly log: PayloadLog = new PayloadLog(),
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  /** Next blinded item, or null once the annotator's queue is empty. */
  async nextItem(): Promise<ItemView | null> {
    const response = await this.fetchFn(
      `${this.base}/api/items/next?annotator=${encodeURIComponent(this.annotator)}`,
    );
    if (response.status === 204) {
      return null;
    }
    const text = await response.text();
    this.log.record("received", text);
    if (!response.ok) {
      throw new Error(`fetching the next item failed (${response.status})`);
    }
    return JSON.parse(text) as ItemView;
  }

  async submitRatings(body: RatingsBody): Promise<SubmitOutcome> {
    const payload = JSON.stringify(body);
    this.log.record("sent", payload);
    const response = await this.fetchFn(`${this.base}/api/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: payload,
    });
    const text = await response.text();
    this.log.record("received", text);
    if (response.status === 201) {
      return { kind: "accepted" };
    }
    if (response.status === 409) {
      return { kind: "duplicate" };
    }
    if (response.status === 422) {
      return { kind: "invalid", detail: text };
    }
    throw new Error(`submitting ratings failed (${response.status})`);
  }

  async progress(): Promise<Progress> {
    const response = await this.fetchFn(
      `${this.base}/api/progress?annotator=${encodeURIComponent(this.annotator)}`,
    );
    const text = await response.text();
    this.log.record("received", text);
    if (!response.ok) {
      throw new Error(`fetching progress failed (${response.status})`);
    }
    return JSON.parse(text) as Progress;
  }
}
