import { AnnotationItem, Api, KEY_TO_SCORE, Summary } from "./types.js";

export type Phase = "idle" | "loading" | "annotating" | "posting" | "error" | "done";

interface PendingScore {
  item: AnnotationItem;
  score: number;
}

/**
 * Keyboard-first annotation session.
 *
 * Exactly one current item is shown while annotating, or the done screen
 * after the pool is exhausted. At most one POST is in flight; a failed POST
 * re-queues its item so no judgment is lost. The server is the source of
 * truth: refreshing simply refetches the not-yet-scored remainder.
 */
export class AnnotationSession {
  phase: Phase = "idle";
  queue: AnnotationItem[] = [];
  current: AnnotationItem | null = null;
  tally = 0;
  summary: Summary | null = null;
  errorMessage: string | null = null;

  private pending: PendingScore | null = null;
  private retryAction: (() => Promise<void>) | null = null;

  constructor(
    private api: Api,
    private annotator: string,
    private batchSize = 10,
    private onChange: () => void = () => {},
  ) {}

  async start(): Promise<void> {
    await this.fetchBatch();
  }

  /** Handle a key press; anything outside 0/5/1 is ignored. */
  async handleKey(key: string): Promise<void> {
    if (this.phase !== "annotating" || this.current === null) return;
    if (!(key in KEY_TO_SCORE)) return;
    await this.submit(this.current, KEY_TO_SCORE[key]);
  }

  /** Re-run whatever failed (fetch, post or summary); banner clears on success. */
  async retry(): Promise<void> {
    if (this.phase !== "error" || this.retryAction === null) return;
    const action = this.retryAction;
    this.retryAction = null;
    this.errorMessage = null;
    await action();
  }

  private emit(): void {
    this.onChange();
  }

  private fail(message: string, retry: () => Promise<void>): void {
    this.phase = "error";
    this.errorMessage = message;
    this.retryAction = retry;
    this.emit();
  }

  private async fetchBatch(): Promise<void> {
    this.phase = "loading";
    this.emit();
    let items: AnnotationItem[];
    try {
      items = await this.api.fetchItems(this.batchSize, this.annotator);
    } catch (e) {
      this.fail(`could not load items: ${String(e)}`, () => this.fetchBatch());
      return;
    }
    if (items.length === 0) {
      await this.finish();
      return;
    }
    this.queue = items;
    await this.advance();
  }

  private async advance(): Promise<void> {
    this.current = this.queue.shift() ?? null;
    if (this.current === null) {
      await this.fetchBatch();
      return;
    }
    this.phase = "annotating";
    this.emit();
  }

  private async submit(item: AnnotationItem, score: number): Promise<void> {
    this.phase = "posting";
    this.pending = { item, score };
    this.emit();
    try {
      await this.api.postScore(item.item_id, score, this.annotator);
    } catch (e) {
      // rollback: the item stays current and the judgment can be retried
      this.current = item;
      const pending = this.pending;
      this.fail(`could not record score: ${String(e)}`, () =>
        this.submit(pending!.item, pending!.score),
      );
      return;
    }
    this.pending = null;
    this.tally += 1;
    await this.advance();
  }

  private async finish(): Promise<void> {
    try {
      this.summary = await this.api.fetchSummary();
    } catch (e) {
      this.fail(`could not load summary: ${String(e)}`, () => this.finish());
      return;
    }
    this.current = null;
    this.phase = "done";
    this.emit();
  }
}
