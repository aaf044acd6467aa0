/** Shared types and constants for the annotation client. */
/** The verbatim judging prompt shown above every candidate. */
export const QUESTION = "Does this sentence look like a good or bad Ecommerce product page hashtag?";
/** The only keys that emit a judgment; everything else is ignored. */
export const KEY_TO_SCORE = {
    "0": 0.0,
    "5": 0.5,
    "1": 1.0,
};
export const VALID_SCORES = [0.0, 0.5, 1.0];
