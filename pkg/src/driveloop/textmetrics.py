"""Corpus text metrics for knowledge-QA evaluation: BLEU and CIDEr-D.

Tokenization is frozen and deliberately simple: lowercase, replace punctuation
with spaces, split on whitespace. Both metrics operate on those token
sequences only.

BLEU here is corpus-level BLEU-4: clipped n-gram matches and totals are summed
over the corpus, the geometric mean of the four precisions is taken with
add-epsilon smoothing on zero match counts, and the brevity penalty is
exp(min(0, 1 - r/c)) with r the summed closest reference lengths. A
sentence-averaged variant is available behind a flag.

CIDEr-D follows the consensus-metric recipe: TF-IDF vectors per n-gram order
(1..4) with document frequency counted over reference sets, hypothesis counts
clipped by the reference count inside the dot product, cosine similarities
averaged over orders and references, a Gaussian length penalty
exp(-(len_h - len_r)^2 / (2 sigma^2)) on token counts, and a final scale of 10
(so per-pair scores live in [0, 10]).
"""

from __future__ import annotations

import math
import string
from collections import Counter, defaultdict
from dataclasses import dataclass

MAX_NGRAM = 4
BLEU_EPS = 1e-9
CIDER_SIGMA = 6.0

_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


class EmptyCorpus(ValueError):
    pass


class SingletonCorpus(ValueError):
    pass


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, strip punctuation (as spaces), split on whitespace."""
    return tuple(text.lower().translate(_PUNCT_TABLE).split())


@dataclass(frozen=True)
class ScoredPair:
    """One hypothesis with at least one reference, all pre-tokenized."""

    id: str
    hypothesis: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.references:
            raise ValueError(f"pair {self.id}: needs at least one reference")

    @classmethod
    def from_text(cls, id: str, hypothesis: str, references) -> "ScoredPair":
        return cls(id=id, hypothesis=tokenize(hypothesis),
                   references=tuple(tokenize(r) for r in references))


def ngram_counts(tokens, n: int) -> Counter:
    """Counts of all n-grams of one order in a token sequence."""
    counts: Counter = Counter()
    for i in range(len(tokens) - n + 1):
        counts[tuple(tokens[i:i + n])] += 1
    return counts


def _closest_ref_len(hyp_len: int, ref_lens) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


def _pair_components(pair: ScoredPair, max_n: int):
    """Clipped matches and totals per n-gram order for one pair."""
    matches = [0] * max_n
    totals = [0] * max_n
    for n in range(1, max_n + 1):
        hyp_counts = ngram_counts(pair.hypothesis, n)
        max_ref: Counter = Counter()
        for ref in pair.references:
            for gram, count in ngram_counts(ref, n).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        totals[n - 1] = sum(hyp_counts.values())
        matches[n - 1] = sum(min(count, max_ref[gram])
                             for gram, count in hyp_counts.items())
    return matches, totals


def _smoothed_geo_mean(matches, totals, eps: float) -> float:
    log_sum = 0.0
    for m, t in zip(matches, totals):
        numer = m if m > 0 else eps
        denom = t if t > 0 else eps
        log_sum += math.log(numer / denom)
    return math.exp(log_sum / len(matches))


def bleu(corpus, max_n: int = MAX_NGRAM, eps: float = BLEU_EPS,
         sentence_level: bool = False) -> float:
    """Corpus BLEU in [0, 1]; set sentence_level for the averaged variant."""
    pairs = list(corpus)
    if not pairs:
        raise EmptyCorpus("bleu needs a non-empty corpus")

    if sentence_level:
        scores = []
        for pair in pairs:
            c = len(pair.hypothesis)
            if c == 0:
                scores.append(0.0)
                continue
            r = _closest_ref_len(c, [len(ref) for ref in pair.references])
            matches, totals = _pair_components(pair, max_n)
            bp = math.exp(min(0.0, 1.0 - r / c))
            scores.append(bp * _smoothed_geo_mean(matches, totals, eps))
        return sum(scores) / len(scores)

    total_matches = [0] * max_n
    total_totals = [0] * max_n
    c_sum = 0
    r_sum = 0
    for pair in pairs:
        matches, totals = _pair_components(pair, max_n)
        for k in range(max_n):
            total_matches[k] += matches[k]
            total_totals[k] += totals[k]
        c_sum += len(pair.hypothesis)
        r_sum += _closest_ref_len(len(pair.hypothesis),
                                  [len(ref) for ref in pair.references])
    if c_sum == 0:
        return 0.0
    bp = math.exp(min(0.0, 1.0 - r_sum / c_sum))
    return bp * _smoothed_geo_mean(total_matches, total_totals, eps)


def _tfidf_vector(counts_by_n, doc_freq, log_num_docs: float):
    """TF-IDF vectors (one dict per n-gram order) plus their norms."""
    vecs = []
    norms = []
    for counts in counts_by_n:
        vec = {}
        norm_sq = 0.0
        for gram, count in counts.items():
            idf = log_num_docs - math.log(max(1.0, doc_freq[gram]))
            weight = count * idf
            vec[gram] = weight
            norm_sq += weight * weight
        vecs.append(vec)
        norms.append(math.sqrt(norm_sq))
    return vecs, norms


def cider_d(corpus, max_n: int = MAX_NGRAM, sigma: float = CIDER_SIGMA,
            ) -> tuple[float, dict[str, float]]:
    """CIDEr-D mean and per-pair scores (each in [0, 10]).

    Document frequency is computed over the reference sets of this corpus, so
    at least two pairs are required for the IDF to be meaningful.
    """
    pairs = list(corpus)
    if not pairs:
        raise EmptyCorpus("cider_d needs a non-empty corpus")
    if len(pairs) < 2:
        raise SingletonCorpus("cider_d needs at least 2 pairs for document frequency")

    doc_freq: dict = defaultdict(float)
    for pair in pairs:
        seen = set()
        for ref in pair.references:
            for n in range(1, max_n + 1):
                seen.update(ngram_counts(ref, n).keys())
        for gram in seen:
            doc_freq[gram] += 1.0

    log_num_docs = math.log(float(len(pairs)))
    per_pair: dict[str, float] = {}
    for pair in pairs:
        hyp_counts = [ngram_counts(pair.hypothesis, n) for n in range(1, max_n + 1)]
        hyp_vecs, hyp_norms = _tfidf_vector(hyp_counts, doc_freq, log_num_docs)
        hyp_len = len(pair.hypothesis)
        score_sum = 0.0
        for ref in pair.references:
            ref_counts = [ngram_counts(ref, n) for n in range(1, max_n + 1)]
            ref_vecs, ref_norms = _tfidf_vector(ref_counts, doc_freq, log_num_docs)
            delta = float(hyp_len - len(ref))
            penalty = math.exp(-(delta * delta) / (2.0 * sigma * sigma))
            for k in range(max_n):
                dot = 0.0
                for gram, hw in hyp_vecs[k].items():
                    rw = ref_vecs[k].get(gram, 0.0)
                    # Hypothesis weight clipped by the reference weight keeps a
                    # repeated n-gram from inflating the similarity.
                    dot += min(hw, rw) * rw
                if hyp_norms[k] != 0.0 and ref_norms[k] != 0.0:
                    dot /= hyp_norms[k] * ref_norms[k]
                score_sum += dot * penalty
        score = score_sum / (max_n * len(pair.references)) * 10.0
        per_pair[pair.id] = score
    mean = sum(per_pair.values()) / len(per_pair)
    return mean, per_pair


@dataclass(frozen=True)
class CorpusScore:
    bleu: float
    cider_d: float
    per_pair_cider: dict[str, float]


def score_corpus(corpus, sentence_level_bleu: bool = False) -> CorpusScore:
    pairs = list(corpus)
    mean_cider, per_pair = cider_d(pairs)
    return CorpusScore(bleu=bleu(pairs, sentence_level=sentence_level_bleu),
                       cider_d=mean_cider, per_pair_cider=per_pair)
