"""C_v topic coherence and the k-selection sweep.

The estimator follows the best-performing C_v configuration: a boolean
sliding window of 110 tokens over each document (documents shorter than the
window contribute exactly one window), NPMI word association, one-set
segmentation, and indirect cosine similarity of NPMI context vectors.

The sweep fits LDA across a k range and reports mean C_v per k.  It never
auto-selects k; choosing k is an analyst action recorded via the curation
service.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from .corpus import PreprocessedDoc, Vocabulary
from .lda import LdaConfig, fit, top_word_ids
from .util import fmt_float


class CoherenceError(ValueError):
    pass


@dataclass
class CooccurrenceStats:
    window_size: int
    total_windows: int
    word_counts: dict[Hashable, int]
    pair_counts: dict[tuple[Hashable, Hashable], int]

    def pair(self, w1: Hashable, w2: Hashable) -> int:
        """Window co-occurrence count; the diagonal equals the word count."""
        if w1 == w2:
            return self.word_counts.get(w1, 0)
        key = (w1, w2) if _key_le(w1, w2) else (w2, w1)
        return self.pair_counts.get(key, 0)


def _key_le(a: Hashable, b: Hashable) -> bool:
    try:
        return a <= b  # type: ignore[operator]
    except TypeError:
        return repr(a) <= repr(b)


def build_stats(
    docs: Iterable[Sequence[Hashable]],
    window_size: int = 110,
) -> CooccurrenceStats:
    """Boolean sliding-window counts over per-document token streams.

    Each window contributes at most 1 to every word and pair it contains.
    A document of length <= window_size is a single window; otherwise the
    window slides one token at a time (len - window_size + 1 windows).
    """
    if window_size < 2:
        raise CoherenceError("window_size must be >= 2")
    word_counts: Counter = Counter()
    pair_counts: Counter = Counter()
    total = 0
    saw_any = False
    for tokens in docs:
        saw_any = True
        n = len(tokens)
        if n == 0:
            continue
        if n <= window_size:
            windows = [tokens]
        else:
            windows = [tokens[i : i + window_size] for i in range(n - window_size + 1)]
        for win in windows:
            total += 1
            uniq = sorted(set(win), key=lambda t: (str(type(t)), t))
            word_counts.update(uniq)
            for i in range(len(uniq)):
                for j in range(i + 1, len(uniq)):
                    a, b = uniq[i], uniq[j]
                    key = (a, b) if _key_le(a, b) else (b, a)
                    pair_counts[key] += 1
    if not saw_any:
        raise CoherenceError("empty corpus")
    return CooccurrenceStats(
        window_size=window_size,
        total_windows=total,
        word_counts=dict(word_counts),
        pair_counts=dict(pair_counts),
    )


def npmi(w1: Hashable, w2: Hashable, stats: CooccurrenceStats, eps: float = 1e-12) -> float:
    """Normalized pointwise mutual information from window probabilities.

    Unseen words contribute 0.  When the pair occupies (numerically) every
    window the association is perfect and the value is 1 by convention
    (the -log normalizer vanishes there).  Clamped to [-1, 1].
    """
    c1 = stats.word_counts.get(w1, 0)
    c2 = stats.word_counts.get(w2, 0)
    if c1 == 0 or c2 == 0:
        return 0.0
    t = stats.total_windows
    p1 = c1 / t
    p2 = c2 / t
    p12 = stats.pair(w1, w2) / t
    if p12 + eps >= 1.0:
        return 1.0
    val = math.log((p12 + eps) / (p1 * p2)) / (-math.log(p12 + eps))
    return max(-1.0, min(1.0, val))


def cv_score(
    top_words: Sequence[Hashable],
    stats: CooccurrenceStats,
    eps: float = 1e-12,
) -> float:
    """One-set-segmentation C_v of a topic's top words.

    Every word's NPMI context vector (over the same top-word set) is
    compared, by cosine, against the summed vector; the score is the mean.
    An all-out-of-vocabulary topic scores 0 with a warning.
    """
    words = list(top_words)
    if len(words) < 2:
        raise CoherenceError("need at least 2 top words")
    n = len(words)
    vectors = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            vectors[i, j] = npmi(words[i], words[j], stats, eps)
    if not vectors.any():
        warnings.warn("topic words are all out of vocabulary; C_v = 0")
        return 0.0
    summed = vectors.sum(axis=0)
    sum_norm = float(np.linalg.norm(summed))
    if sum_norm == 0.0:
        warnings.warn("degenerate NPMI sum vector; C_v = 0")
        return 0.0
    sims = []
    for i in range(n):
        norm = float(np.linalg.norm(vectors[i]))
        if norm == 0.0:
            sims.append(0.0)
        else:
            sims.append(float(vectors[i] @ summed / (norm * sum_norm)))
    return float(np.mean(sims))


def mean_cv(
    topics_top_words: Sequence[Sequence[Hashable]],
    stats: CooccurrenceStats,
    eps: float = 1e-12,
) -> float:
    return float(np.mean([cv_score(tw, stats, eps) for tw in topics_top_words]))


# ---------------------------------------------------------------------------
# k sweep
# ---------------------------------------------------------------------------

@dataclass
class CurvePoint:
    k: int
    mean_cv: float
    std_cv: float
    error: str | None = None


@dataclass
class CoherenceCurve:
    points: list[CurvePoint]
    chosen_k: int | None = field(default=None)

    def __post_init__(self) -> None:
        ks = [p.k for p in self.points]
        if ks != sorted(set(ks)):
            raise CoherenceError("curve k values must be strictly increasing")
        for p in self.points:
            if p.error is None and not (math.isfinite(p.mean_cv) and math.isfinite(p.std_cv)):
                raise CoherenceError(f"non-finite C_v at k={p.k}")

    def argmax_k(self) -> int:
        valid = [p for p in self.points if p.error is None]
        if not valid:
            raise CoherenceError("no valid points in curve")
        return max(valid, key=lambda p: p.mean_cv).k


def k_sweep(
    docs: Sequence[PreprocessedDoc],
    vocab: Vocabulary | int,
    k_values: Iterable[int] = range(1, 31),
    base_seed: int = 0,
    runs_per_k: int = 3,
    iterations: int = 1000,
    burn_in: int = 500,
    alpha: float | None = None,
    beta: float = 0.01,
    top_n: int = 10,
    window_size: int = 110,
) -> CoherenceCurve:
    """Fit LDA per k (runs_per_k seeded runs each) and score mean C_v.

    Run seeds are ``base_seed + k * runs_per_k + i`` so every (k, run) pair
    is reproducible in isolation.  A failed fit marks its point instead of
    aborting the sweep.  k=1 is scored like any other point (the C_v of the
    single topic's top words).
    """
    streams = [[t for sent in d.sentences for t in sent] for d in docs]
    stats = build_stats(streams, window_size=window_size)
    points: list[CurvePoint] = []
    for k in sorted(set(int(k) for k in k_values)):
        run_scores: list[float] = []
        error = None
        for i in range(runs_per_k):
            seed = base_seed + k * runs_per_k + i
            try:
                cfg = LdaConfig(
                    k=k, seed=seed, alpha=alpha, beta=beta,
                    iterations=iterations, burn_in=burn_in,
                )
                model = fit(docs, cfg, vocab)
                tops = [top_word_ids(model, t, top_n) for t in range(k)]
                run_scores.append(mean_cv(tops, stats))
            except Exception as exc:  # noqa: BLE001 - sweep must survive per-k failures
                error = f"{type(exc).__name__}: {exc}"
                break
        if error is not None:
            points.append(CurvePoint(k=k, mean_cv=float("nan"), std_cv=float("nan"), error=error))
        else:
            arr = np.array(run_scores)
            points.append(
                CurvePoint(k=k, mean_cv=float(arr.mean()), std_cv=float(arr.std(ddof=0)))
            )
    return CoherenceCurve(points=points)


# ---------------------------------------------------------------------------
# persistence (CSV: k, mean_cv, std_cv)
# ---------------------------------------------------------------------------

def save_curve(curve: CoherenceCurve, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "mean_cv", "std_cv", "error"])
        for p in curve.points:
            writer.writerow(
                [
                    p.k,
                    "" if p.error else fmt_float(p.mean_cv),
                    "" if p.error else fmt_float(p.std_cv),
                    p.error or "",
                ]
            )
    return path


def load_curve(path: Path | str) -> CoherenceCurve:
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            err = row.get("error") or None
            points.append(
                CurvePoint(
                    k=int(row["k"]),
                    mean_cv=float(row["mean_cv"]) if row["mean_cv"] else float("nan"),
                    std_cv=float(row["std_cv"]) if row["std_cv"] else float("nan"),
                    error=err,
                )
            )
    return CoherenceCurve(points=points)
