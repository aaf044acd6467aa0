import { VALID_SCORES } from "./types.js";
export class ApiError extends Error {
    constructor(message, status) {
        super(message);
        this.status = status;
    }
}
/** Thin fetch wrapper around the annotation service endpoints. */
export class HttpApi {
    constructor(base = "") {
        this.base = base;
    }
    async fetchItems(n, annotator) {
        const params = new URLSearchParams({ n: String(n), annotator });
        const res = await fetch(`${this.base}/api/items?${params}`);
        if (!res.ok) {
            throw new ApiError(`items request failed (${res.status})`, res.status);
        }
        return (await res.json());
    }
    async postScore(itemId, score, annotator) {
        // last line of defence: no UI path may emit an off-scale score
        if (!VALID_SCORES.includes(score)) {
            throw new ApiError(`score must be one of ${VALID_SCORES.join(", ")}`);
        }
        const res = await fetch(`${this.base}/api/scores`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ item_id: itemId, score, annotator }),
        });
        if (!res.ok) {
            throw new ApiError(`score rejected (${res.status})`, res.status);
        }
    }
    async fetchSummary() {
        const res = await fetch(`${this.base}/api/summary`);
        if (!res.ok) {
            throw new ApiError(`summary request failed (${res.status})`, res.status);
        }
        return (await res.json());
    }
}
