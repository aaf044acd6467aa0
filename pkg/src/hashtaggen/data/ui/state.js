import { KEY_TO_SCORE } from "./types.js";
/**
 * Keyboard-first annotation session.
 *
 * Exactly one current item is shown while annotating, or the done screen
 * after the pool is exhausted. At most one POST is in flight; a failed POST
 * re-queues its item so no judgment is lost. The server is the source of
 * truth: refreshing simply refetches the not-yet-scored remainder.
 */
export class AnnotationSession {
    constructor(api, annotator, batchSize = 10, onChange = () => { }) {
        this.api = api;
        this.annotator = annotator;
        this.batchSize = batchSize;
        this.onChange = onChange;
        this.phase = "idle";
        this.queue = [];
        this.current = null;
        this.tally = 0;
        this.summary = null;
        this.errorMessage = null;
        this.pending = null;
        this.retryAction = null;
    }
    async start() {
        await this.fetchBatch();
    }
    /** Handle a key press; anything outside 0/5/1 is ignored. */
    async handleKey(key) {
        if (this.phase !== "annotating" || this.current === null)
            return;
        if (!(key in KEY_TO_SCORE))
            return;
        await this.submit(this.current, KEY_TO_SCORE[key]);
    }
    /** Re-run whatever failed (fetch, post or summary); banner clears on success. */
    async retry() {
        if (this.phase !== "error" || this.retryAction === null)
            return;
        const action = this.retryAction;
        this.retryAction = null;
        this.errorMessage = null;
        await action();
    }
    emit() {
        this.onChange();
    }
    fail(message, retry) {
        this.phase = "error";
        this.errorMessage = message;
        this.retryAction = retry;
        this.emit();
    }
    async fetchBatch() {
        this.phase = "loading";
        this.emit();
        let items;
        try {
            items = await this.api.fetchItems(this.batchSize, this.annotator);
        }
        catch (e) {
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
    async advance() {
        this.current = this.queue.shift() ?? null;
        if (this.current === null) {
            await this.fetchBatch();
            return;
        }
        this.phase = "annotating";
        this.emit();
    }
    async submit(item, score) {
        this.phase = "posting";
        this.pending = { item, score };
        this.emit();
        try {
            await this.api.postScore(item.item_id, score, this.annotator);
        }
        catch (e) {
            // rollback: the item stays current and the judgment can be retried
            this.current = item;
            const pending = this.pending;
            this.fail(`could not record score: ${String(e)}`, () => this.submit(pending.item, pending.score));
            return;
        }
        this.pending = null;
        this.tally += 1;
        await this.advance();
    }
    async finish() {
        try {
            this.summary = await this.api.fetchSummary();
        }
        catch (e) {
            this.fail(`could not load summary: ${String(e)}`, () => this.finish());
            return;
        }
        this.current = null;
        this.phase = "done";
        this.emit();
    }
}
