/** Shared types and constants for the annotation client. */

/** Blind item as served by the API: the model source is never included. */
export interface AnnotationItem {
  item_id: string;
  review_text: string;
  candidate_title: string;
}

export interface SourceSummary {
  count: number;
  mean: number | null;
  sd: number | null;
  coverage_percent: number | null;
  coverage_target_reached: boolean;
}

export interface Summary {
  overall: SourceSummary;
  per_source: Record<string, SourceSummary>;
}

/** The verbatim judging prompt shown above every candidate. */
export const QUESTION =
  "Does this sentence look like a good or bad Ecommerce product page hashtag?";

/** The only keys that emit a judgment; everything else is ignored. */
export const KEY_TO_SCORE: Readonly<Record<string, number>> = {
  "0": 0.0,
  "5": 0.5,
  "1": 1.0,
};

export const VALID_SCORES: ReadonlyArray<number> = [0.0, 0.5, 1.0];

export interface Api {
  fetchItems(n: number, annotator: string): Promise<AnnotationItem[]>;
  postScore(itemId: string, score: number, annotator: string): Promise<void>;
  fetchSummary(): Promise<Summary>;
}
