"""Independent brute-force oracles used to validate the metric implementations.

These deliberately share no code with hashtaggen.metrics: n-grams are
enumerated positionally, alignments by exhaustive recursion over reference
subsets, and all formulas are applied directly.
"""

import math


def ngram_list(tokens, n):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_oracle(hyp, ref):
    if len(hyp) == 0:
        return 0.0
    orders = min(4, len(hyp))
    precisions = []
    for n in range(1, orders + 1):
        hgrams = ngram_list(hyp, n)
        rgrams = ngram_list(ref, n)
        matched = 0
        remaining = list(rgrams)
        for g in hgrams:
            if g in remaining:
                remaining.remove(g)
                matched += 1
        precisions.append(matched / len(hgrams))
    if any(p == 0 for p in precisions):
        return 0.0
    geo = math.exp(sum(math.log(p) for p in precisions) / orders)
    bp = math.exp(1 - len(ref) / len(hyp)) if len(hyp) < len(ref) else 1.0
    return bp * geo


def nist_info_oracle(reference_corpus):
    """n-gram -> info weight table computed by direct counting."""
    counts = {}
    total = 0
    for sent in reference_corpus:
        total += len(sent)
        for n in range(1, 6):
            for g in ngram_list(sent, n):
                counts[g] = counts.get(g, 0) + 1

    def info(g):
        if g not in counts:
            return 0.0
        denom = counts[g]
        numer = total if len(g) == 1 else counts[g[:-1]]
        return math.log(numer / denom, 2)

    return info


def nist_oracle(hyp, ref, reference_corpus):
    if not hyp or not ref:
        return 0.0
    info = nist_info_oracle(reference_corpus)
    total = 0.0
    for n in range(1, 6):
        hgrams = ngram_list(hyp, n)
        if not hgrams:
            break
        remaining = list(ngram_list(ref, n))
        gained = 0.0
        for g in hgrams:
            if g in remaining:
                remaining.remove(g)
                gained += info(g)
        total += gained / len(hgrams)
    beta = math.log(0.5) / (math.log(1.5) ** 2)
    ratio = min(len(hyp) / len(ref), 1.0)
    return total * math.exp(beta * (math.log(ratio) ** 2))


def _alignments(hyp, ref):
    """Every maximal exact-match alignment as a list of (i, j) pairs."""
    best = []
    max_m = [0]

    def rec(i, used, pairs):
        if i == len(hyp):
            if len(pairs) > max_m[0]:
                max_m[0] = len(pairs)
                best.clear()
            if len(pairs) == max_m[0]:
                best.append(list(pairs))
            return
        for j in range(len(ref)):
            if j not in used and ref[j] == hyp[i]:
                rec(i + 1, used | {j}, pairs + [(i, j)])
        rec(i + 1, used, pairs)

    rec(0, frozenset(), [])
    return [a for a in best if len(a) == max_m[0]]


def meteor_oracle(hyp, ref):
    if not hyp or not ref:
        return 0.0
    alignments = _alignments(hyp, ref)
    m = len(alignments[0]) if alignments else 0
    if m == 0:
        return 0.0
    best_chunks = None
    for pairs in alignments:
        chunks = 0
        prev = None
        for (i, j) in pairs:  # pairs are in hyp order
            if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
                chunks += 1
            prev = (i, j)
        best_chunks = chunks if best_chunks is None else min(best_chunks, chunks)
    p = m / len(hyp)
    r = m / len(ref)
    f = 10 * p * r / (r + 9 * p)
    return f * (1 - 0.5 * (best_chunks / m) ** 3)
