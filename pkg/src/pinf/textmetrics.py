"""Corpus-level caption metrics: BLEU-4, METEOR-lite, ROUGE-L, CIDEr.

All four run on one shared tokenization (lowercase; any character outside
letters/digits/apostrophe becomes a space). METEOR-lite keeps the exact and
stemmed alignment stages but omits paraphrase tables, and is labeled
"meteor_lite" in every output. CIDEr is the plain cosine form (not the -D
variant) with document frequencies taken over the evaluated corpus itself,
one document per image. BLEU-4, METEOR-lite and ROUGE-L are reported x100;
CIDEr is reported on the conventional x10 axis (a candidate identical to its
sole reference scores 10.0 when idf is positive).
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .stem import porter_stem

_TOKEN_CLEAN = re.compile(r"[^a-z0-9']+")

ROUGE_BETA = 1.2
MAX_NGRAM = 4
METEOR_ALPHA_NUM = 10.0  # F = 10PR / (R + 9P)
METEOR_PENALTY_WEIGHT = 0.5
METEOR_PENALTY_POWER = 3


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter, digit, or
    apostrophe. Empty input gives an empty sequence."""
    return [t for t in _TOKEN_CLEAN.sub(" ", text.lower()).split() if t]


@dataclass(frozen=True)
class EvalPair:
    """One candidate caption with its reference captions, tokenized."""

    image_id: str
    candidate: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.references:
            raise ValueError(f"pair {self.image_id!r} has no references")

    @classmethod
    def from_text(cls, image_id: str, candidate: str, references) -> "EvalPair":
        return cls(
            image_id,
            tuple(tokenize(candidate)),
            tuple(tuple(tokenize(r)) for r in references),
        )


@dataclass(frozen=True)
class CaptionEvalReport:
    bleu4: float
    meteor_lite: float
    rouge_l: float
    cider: float
    pairs: int
    excluded: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bleu4": self.bleu4,
            "meteor_lite": self.meteor_lite,
            "rouge_l": self.rouge_l,
            "cider": self.cider,
            "pairs": self.pairs,
            "excluded": self.excluded,
            "meta": self.meta,
        }


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


# --- BLEU-4 ---------------------------------------------------------------


def bleu4(pairs: list[EvalPair]) -> float:
    """Corpus BLEU with clipped modified n-gram precision for n = 1..4,
    geometric mean, brevity penalty, no smoothing. Scaled x100."""
    if not pairs:
        raise ValueError("bleu4 needs a non-empty corpus")
    numer = [0] * MAX_NGRAM
    denom = [0] * MAX_NGRAM
    cand_len = 0
    ref_len = 0
    for pair in pairs:
        c = pair.candidate
        cand_len += len(c)
        # closest reference length; ties resolved toward the shorter
        ref_len += min((abs(len(r) - len(c)), len(r)) for r in pair.references)[1]
        for n in range(1, MAX_NGRAM + 1):
            counts = _ngrams(c, n)
            if not counts:
                continue
            max_ref = Counter()
            for r in pair.references:
                for gram, cnt in _ngrams(r, n).items():
                    if cnt > max_ref[gram]:
                        max_ref[gram] = cnt
            numer[n - 1] += sum(min(cnt, max_ref[gram]) for gram, cnt in counts.items())
            denom[n - 1] += sum(counts.values())
    if any(d == 0 or v == 0 for v, d in zip(numer, denom)):
        return 0.0
    log_p = sum(math.log(v / d) for v, d in zip(numer, denom)) / MAX_NGRAM
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len) if cand_len > 0 else 0.0
    return 100.0 * bp * math.exp(log_p)


# --- METEOR-lite ----------------------------------------------------------


def _align(candidate, reference) -> tuple[int, int]:
    """Two-stage greedy unigram alignment: exact matches first, then stem
    matches among the leftovers. Within a stage each candidate token prefers
    the reference position continuing the current chunk, else the leftmost
    available one. Returns (matches, chunks)."""
    m = len(candidate)
    n = len(reference)
    cand_match = [-1] * m  # candidate index -> reference index
    ref_used = [False] * n

    def run_stage(cand_keys, ref_keys):
        for i in range(m):
            if cand_match[i] != -1:
                continue
            want = cand_keys[i]
            chosen = -1
            prev = cand_match[i - 1] if i > 0 else -1
            if prev != -1 and prev + 1 < n and not ref_used[prev + 1] and ref_keys[prev + 1] == want:
                chosen = prev + 1
            else:
                for j in range(n):
                    if not ref_used[j] and ref_keys[j] == want:
                        chosen = j
                        break
            if chosen != -1:
                cand_match[i] = chosen
                ref_used[chosen] = True

    run_stage(list(candidate), list(reference))
    run_stage([porter_stem(t) for t in candidate], [porter_stem(t) for t in reference])

    matches = [(i, j) for i, j in enumerate(cand_match) if j != -1]
    if not matches:
        return 0, 0
    chunks = 1
    for (pi, pj), (ci, cj) in zip(matches, matches[1:]):
        if ci != pi + 1 or cj != pj + 1:
            chunks += 1
    return len(matches), chunks


def _meteor_pair(pair: EvalPair) -> float:
    best = 0.0
    for ref in pair.references:
        if not pair.candidate or not ref:
            continue
        m, chunks = _align(pair.candidate, ref)
        if m == 0:
            continue
        p = m / len(pair.candidate)
        r = m / len(ref)
        f = METEOR_ALPHA_NUM * p * r / (r + 9.0 * p)
        penalty = METEOR_PENALTY_WEIGHT * (chunks / m) ** METEOR_PENALTY_POWER
        best = max(best, f * (1.0 - penalty))
    return best


def meteor_lite(pairs: list[EvalPair]) -> float:
    """Exact+stem METEOR without paraphrase tables; per-pair max over
    references, corpus mean, x100."""
    if not pairs:
        raise ValueError("meteor_lite needs a non-empty corpus")
    return 100.0 * sum(_meteor_pair(p) for p in pairs) / len(pairs)


# --- ROUGE-L ---------------------------------------------------------------


def _lcs_len(a, b) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = cur[j - 1] if cur[j - 1] >= prev[j] else prev[j]
        prev = cur
    return prev[len(b)]


def _rouge_pair(pair: EvalPair) -> float:
    best = 0.0
    beta2 = ROUGE_BETA * ROUGE_BETA
    for ref in pair.references:
        ell = _lcs_len(pair.candidate, ref)
        if ell == 0:
            continue
        r = ell / len(ref)
        p = ell / len(pair.candidate)
        f = (1.0 + beta2) * r * p / (r + beta2 * p)
        best = max(best, f)
    return best


def rouge_l(pairs: list[EvalPair]) -> float:
    """LCS-based F-measure (beta = 1.2); per-pair max over references,
    corpus mean, x100."""
    if not pairs:
        raise ValueError("rouge_l needs a non-empty corpus")
    return 100.0 * sum(_rouge_pair(p) for p in pairs) / len(pairs)


# --- CIDEr ------------------------------------------------------------------


def _cider_pair(pair: EvalPair, idf: list[dict]) -> float:
    total = 0.0
    for n in range(1, MAX_NGRAM + 1):
        cvec = {g: c * idf[n - 1].get(g, 0.0) for g, c in _ngrams(pair.candidate, n).items()}
        cnorm = math.sqrt(sum(v * v for v in cvec.values()))
        sim_sum = 0.0
        for ref in pair.references:
            rvec = {g: c * idf[n - 1].get(g, 0.0) for g, c in _ngrams(ref, n).items()}
            rnorm = math.sqrt(sum(v * v for v in rvec.values()))
            if cnorm == 0.0 or rnorm == 0.0:
                continue
            dot = sum(v * rvec[g] for g, v in cvec.items() if g in rvec)
            sim_sum += dot / (cnorm * rnorm)
        total += sim_sum / len(pair.references)
    return 10.0 * (total / MAX_NGRAM)


def cider(pairs: list[EvalPair]) -> float:
    """Plain CIDEr: tf-idf n-gram cosine, idf = log(N / df) with document
    frequency over this corpus's reference sets (one document per image)."""
    if not pairs:
        raise ValueError("cider needs a non-empty corpus")
    n_images = len(pairs)
    idf: list[dict] = []
    for n in range(1, MAX_NGRAM + 1):
        df = Counter()
        for pair in pairs:
            grams = set()
            for ref in pair.references:
                grams.update(_ngrams(ref, n).keys())
            for g in grams:
                df[g] += 1
        idf.append({g: math.log(n_images / d) for g, d in df.items()})
    return sum(_cider_pair(p, idf) for p in pairs) / n_images


def cider_per_pair(pairs: list[EvalPair]) -> list[float]:
    """Per-image plain CIDEr values (same df base as cider())."""
    if not pairs:
        raise ValueError("cider needs a non-empty corpus")
    n_images = len(pairs)
    idf: list[dict] = []
    for n in range(1, MAX_NGRAM + 1):
        df = Counter()
        for pair in pairs:
            grams = set()
            for ref in pair.references:
                grams.update(_ngrams(ref, n).keys())
            for g in grams:
                df[g] += 1
        idf.append({g: math.log(n_images / d) for g, d in df.items()})
    return [_cider_pair(p, idf) for p in pairs]


# --- aggregate ----------------------------------------------------------------


def evaluate_corpus(pairs: list[EvalPair], excluded: int = 0) -> CaptionEvalReport:
    """All four metrics on the same tokenized pairs."""
    if not pairs:
        raise ValueError("evaluate_corpus needs a non-empty corpus")
    return CaptionEvalReport(
        bleu4=bleu4(pairs),
        meteor_lite=meteor_lite(pairs),
        rouge_l=rouge_l(pairs),
        cider=cider(pairs),
        pairs=len(pairs),
        excluded=excluded,
        meta={
            "tokenizer": "lowercase; non [a-z0-9'] to space",
            "meteor": "meteor_lite: exact+stem stages, no paraphrase table",
            "cider": "plain cider, df over the evaluated corpus",
            "rouge_beta": ROUGE_BETA,
        },
    )


# --- file formats -------------------------------------------------------------


def read_candidates(path) -> dict[str, str]:
    """JSON lines of {"image_id": ..., "caption": ...}."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "image_id" not in doc or "caption" not in doc:
                raise ValueError(f"{path}:{lineno}: candidate line needs image_id and caption")
            image_id = str(doc["image_id"])
            if image_id in out:
                raise ValueError(f"{path}:{lineno}: duplicate candidate for {image_id!r}")
            out[image_id] = str(doc["caption"])
    return out


def read_references(path) -> dict[str, list[str]]:
    """JSON lines of {"image_id": ..., "captions": [...]}."""
    out: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            caps = doc.get("captions")
            if "image_id" not in doc or not isinstance(caps, list) or not caps:
                raise ValueError(
                    f"{path}:{lineno}: reference line needs image_id and non-empty captions"
                )
            image_id = str(doc["image_id"])
            if image_id in out:
                raise ValueError(f"{path}:{lineno}: duplicate references for {image_id!r}")
            out[image_id] = [str(c) for c in caps]
    return out


def pairs_from_files(candidates_path, references_path) -> list[EvalPair]:
    """Join candidate and reference files on image_id (candidate order)."""
    cands = read_candidates(candidates_path)
    refs = read_references(references_path)
    missing = [i for i in cands if i not in refs]
    if missing:
        raise ValueError(f"no references for image ids: {missing[:5]}")
    return [EvalPair.from_text(i, cands[i], refs[i]) for i in cands]
