"""Automatic evaluation metrics: BLEU, ROUGE-1/2/L, SARI, and greedy
embedding matching.

All scores are reported on a 0-100 scale (embedding F can be negative since
cosines can be).  Conventions are pinned here for bit-reproducibility:

  * BLEU: corpus-level, n = 1..4, clipped modified precisions against the
    per-sentence maximum reference count, add-one smoothing on n >= 2 when
    the raw match count is zero, brevity penalty against the reference
    length closest to the hypothesis (ties -> shorter).
  * ROUGE: sentence-level F1 (multiset-clipped n-gram overlap for 1/2,
    longest common subsequence for L); multi-reference = max over references;
    no stemming, no stopword removal.
  * SARI: per n in 1..4, F1 of ADD and KEEP plus the precision of DEL,
    with n-gram sets (not multisets) and every reference contributing a
    fractional weight 1/R.  A component whose candidate set and target set
    are both empty is vacuously correct (1.0); an empty candidate set with a
    non-empty target set scores 0.0.  Corpus SARI macro-averages sentences.
  * Embedding F: greedy max-cosine matching; recall over reference tokens,
    precision over hypothesis tokens, harmonic mean; multi-reference = the
    reference with the best F; no idf weighting, no baseline rescaling.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import TokenEmbeddings, tokenize

#: Column order used by every rendered score table.
METRIC_COLUMNS = ("bleu", "rouge1", "rouge2", "rougeL", "sari", "embedding_f")

TABLE_HEADERS = {
    "bleu": "BLEU",
    "rouge1": "ROUGE-1",
    "rouge2": "ROUGE-2",
    "rougeL": "ROUGE-L",
    "sari": "SARI",
    "embedding_f": "embedding-F",
}


@dataclass
class MetricReport:
    """Corpus scores plus per-sentence breakdowns for one system."""

    system_name: str
    corpus_scores: dict[str, float]
    per_sentence: dict[str, dict[str, float]] = field(default_factory=dict)
    n_sentences: int = 0

    def to_dict(self) -> dict:
        return {
            "system_name": self.system_name,
            "corpus_scores": self.corpus_scores,
            "per_sentence": self.per_sentence,
            "n_sentences": self.n_sentences,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricReport":
        return cls(
            system_name=data["system_name"],
            corpus_scores=dict(data["corpus_scores"]),
            per_sentence={k: dict(v) for k, v in data.get("per_sentence", {}).items()},
            n_sentences=int(data.get("n_sentences", 0)),
        )


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _check_aligned_ids(hypotheses: Mapping, references: Mapping) -> None:
    if not hypotheses:
        raise ValueError("empty id set")
    missing_refs = sorted(set(hypotheses) - set(references))
    missing_hyps = sorted(set(references) - set(hypotheses))
    if missing_refs or missing_hyps:
        parts = []
        if missing_refs:
            parts.append(f"ids without references: {missing_refs[:20]}")
        if missing_hyps:
            parts.append(f"ids without hypotheses: {missing_hyps[:20]}")
        raise ValueError("hypothesis/reference id mismatch; " + "; ".join(parts))


def bleu(hypotheses: Mapping[str, str], references: Mapping[str, Sequence[str]]) -> float:
    """Corpus-level BLEU of one hypothesis per id against its references."""
    _check_aligned_ids(hypotheses, references)
    for key, refs in references.items():
        if not refs:
            raise ValueError(f"id {key!r} has an empty reference list")

    matches = [0] * 5  # index by n
    totals = [0] * 5
    hyp_len = 0
    ref_len = 0
    for key in hypotheses:
        hyp_tokens = tokenize(hypotheses[key])
        ref_token_lists = [tokenize(r) for r in references[key]]
        hyp_len += len(hyp_tokens)
        ref_len += min(
            (len(r) for r in ref_token_lists),
            key=lambda length: (abs(length - len(hyp_tokens)), length),
        )
        for n in range(1, 5):
            hyp_counts = Counter(_ngrams(hyp_tokens, n))
            max_ref_counts: Counter = Counter()
            for ref_tokens in ref_token_lists:
                for gram, count in Counter(_ngrams(ref_tokens, n)).items():
                    max_ref_counts[gram] = max(max_ref_counts[gram], count)
            totals[n] += sum(hyp_counts.values())
            matches[n] += sum(min(c, max_ref_counts[g]) for g, c in hyp_counts.items())

    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        m, t = matches[n], totals[n]
        if m == 0 and n >= 2:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / 4.0)


def _rouge_n(hyp_tokens: Sequence[str], ref_tokens: Sequence[str], n: int) -> float:
    hyp_grams = Counter(_ngrams(hyp_tokens, n))
    ref_grams = Counter(_ngrams(ref_tokens, n))
    hyp_total = sum(hyp_grams.values())
    ref_total = sum(ref_grams.values())
    if hyp_total == 0 or ref_total == 0:
        return 0.0
    overlap = sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
    precision = overlap / hyp_total
    recall = overlap / ref_total
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _rouge_l(hyp_tokens: Sequence[str], ref_tokens: Sequence[str]) -> float:
    if not hyp_tokens or not ref_tokens:
        return 0.0
    lcs = _lcs_length(hyp_tokens, ref_tokens)
    precision = lcs / len(hyp_tokens)
    recall = lcs / len(ref_tokens)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge(hypothesis: str, references: Sequence[str], variant) -> float:
    """Sentence-level ROUGE F1; the best-matching reference wins."""
    if not references:
        raise ValueError("at least one reference is required")
    variant = str(variant).upper()
    if variant not in ("1", "2", "L"):
        raise ValueError(f"unknown ROUGE variant {variant!r}")
    hyp_tokens = tokenize(hypothesis)
    scores = []
    for ref in references:
        ref_tokens = tokenize(ref)
        if variant == "L":
            scores.append(_rouge_l(hyp_tokens, ref_tokens))
        else:
            scores.append(_rouge_n(hyp_tokens, ref_tokens, int(variant)))
    return 100.0 * max(scores)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _sari_components(
    src_grams: set, hyp_grams: set, ref_gram_sets: Sequence[set]
) -> tuple[float, float, float]:
    """(F_keep, P_del, F_add) for one n-gram order, set semantics."""
    n_refs = len(ref_gram_sets)
    rho: dict = {}
    for ref_set in ref_gram_sets:
        for gram in ref_set:
            rho[gram] = rho.get(gram, 0.0) + 1.0 / n_refs

    def fraction(gram) -> float:
        return rho.get(gram, 0.0)

    # KEEP: hypothesis retains a source n-gram; references reward by the
    # fraction of them that also retain it.
    keep_cand = src_grams & hyp_grams
    keep_tgt = {g for g in src_grams if fraction(g) > 0.0}
    if not keep_cand and not keep_tgt:
        f_keep = 1.0
    else:
        num = sum(fraction(g) for g in keep_cand)
        p = num / len(keep_cand) if keep_cand else 0.0
        r = num / sum(fraction(g) for g in keep_tgt) if keep_tgt else 0.0
        f_keep = _f1(p, r)

    # DEL: precision only; a deletion is right by the fraction of references
    # that also dropped the n-gram.
    del_cand = src_grams - hyp_grams
    del_tgt = {g for g in src_grams if fraction(g) < 1.0}
    if not del_cand and not del_tgt:
        p_del = 1.0
    elif not del_cand:
        p_del = 0.0
    else:
        p_del = sum(1.0 - fraction(g) for g in del_cand) / len(del_cand)

    # ADD: an addition is rewarded when any reference contains it; recall is
    # taken over reference n-grams absent from the source, each weighted 1/R
    # per containing reference.
    add_cand = hyp_grams - src_grams
    add_tgt = set(rho) - src_grams
    if not add_cand and not add_tgt:
        f_add = 1.0
    else:
        num = sum(fraction(g) for g in add_cand)
        p = num / len(add_cand) if add_cand else 0.0
        r = num / sum(fraction(g) for g in add_tgt) if add_tgt else 0.0
        f_add = _f1(p, r)

    return f_keep, p_del, f_add


def sari(source: str, hypothesis: str, references: Sequence[str]) -> float:
    """Sentence-level SARI averaging ADD/KEEP/DEL over n-gram orders 1..4."""
    if not references:
        raise ValueError("at least one reference is required")
    if not source:
        raise ValueError("source must be non-empty")
    src_tokens = tokenize(source)
    hyp_tokens = tokenize(hypothesis)
    ref_token_lists = [tokenize(r) for r in references]
    total = 0.0
    for n in range(1, 5):
        src_grams = set(_ngrams(src_tokens, n))
        hyp_grams = set(_ngrams(hyp_tokens, n))
        ref_gram_sets = [set(_ngrams(toks, n)) for toks in ref_token_lists]
        f_keep, p_del, f_add = _sari_components(src_grams, hyp_grams, ref_gram_sets)
        total += (f_keep + p_del + f_add) / 3.0
    return 100.0 * total / 4.0


def corpus_sari(
    sources: Mapping[str, str],
    hypotheses: Mapping[str, str],
    references: Mapping[str, Sequence[str]],
) -> float:
    """Arithmetic mean of sentence SARI over aligned ids."""
    _check_aligned_ids(hypotheses, references)
    missing_sources = sorted(set(hypotheses) - set(sources))
    if missing_sources:
        raise ValueError(f"ids without sources: {missing_sources[:20]}")
    return sum(
        sari(sources[key], hypotheses[key], references[key]) for key in hypotheses
    ) / len(hypotheses)


def _unit_rows(emb: TokenEmbeddings) -> np.ndarray:
    matrix = np.asarray(emb.vectors, dtype=float)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    # Zero vectors have no direction; treat their cosine with anything as 0.
    norms[norms == 0.0] = 1.0
    return matrix / norms


def embedding_f(
    hyp_emb: TokenEmbeddings, ref_embs: Sequence[TokenEmbeddings]
) -> tuple[float, float, float]:
    """Greedy token-matching similarity (P, R, F), each scaled by 100."""
    if not ref_embs:
        raise ValueError("at least one reference embedding is required")
    if not hyp_emb.tokens:
        raise ValueError("hypothesis embedding has no tokens")
    hyp_matrix = _unit_rows(hyp_emb)
    best: tuple[float, float, float] | None = None
    for ref_emb in ref_embs:
        if not ref_emb.tokens:
            raise ValueError(f"reference embedding {ref_emb.sentence_id!r} has no tokens")
        if ref_emb.dim != hyp_emb.dim:
            raise ValueError(
                f"dimension mismatch: hypothesis {hyp_emb.dim} vs reference "
                f"{ref_emb.sentence_id!r} {ref_emb.dim}"
            )
        sims = hyp_matrix @ _unit_rows(ref_emb).T
        precision = float(sims.max(axis=1).mean())
        recall = float(sims.max(axis=0).mean())
        f_score = _f1(precision, recall)
        if best is None or f_score > best[2]:
            best = (precision, recall, f_score)
    assert best is not None
    return (100.0 * best[0], 100.0 * best[1], 100.0 * best[2])
