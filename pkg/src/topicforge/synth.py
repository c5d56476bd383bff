"""Synthetic corpora with known ground truth.

Two generators back the acceptance experiments:

* ``planted_corpus`` — documents drawn from k disjoint-vocabulary topics
  with Dirichlet mixtures; the planted topic-word distributions are known
  by construction, so recovery can be scored exactly.
* ``cohort_corpus`` — respondents in two gender groups whose documents
  mention synthetic topics at planted Bernoulli rates; the generator counts
  its own draws, so downstream proportions have an exact oracle.

Synthetic keywords are built from fixed syllables and end in 'o', which
makes them lemmatizer fixed points and keeps them clear of the stoplist.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import PreprocessedDoc, Vocabulary
from .util import write_text


@dataclass
class PlantedCorpus:
    docs: list[PreprocessedDoc]
    vocab: Vocabulary
    phi: np.ndarray  # n_topics x V planted topic-word distributions
    theta: np.ndarray  # n_docs x n_topics planted mixtures
    words_per_topic: int
    group_of: np.ndarray  # V-vector: owning topic of each word id

    def group_words(self, g: int) -> set[int]:
        return {int(i) for i in np.flatnonzero(self.group_of == g)}


def planted_corpus(
    seed: int,
    n_topics: int = 5,
    words_per_topic: int = 20,
    n_docs: int = 500,
    doc_len: int = 100,
    dirichlet: float = 0.5,
) -> PlantedCorpus:
    """Disjoint-vocabulary topic corpus.

    Word id i belongs to topic i % n_topics, so group membership is
    interleaved across the id range (no structural alignment between id
    order and topic blocks).
    """
    rng = np.random.default_rng(seed)
    v = n_topics * words_per_topic
    width = len(str(v - 1))
    tokens = [f"w{i:0{width}d}" for i in range(v)]
    group_of = np.arange(v) % n_topics

    phi = np.zeros((n_topics, v))
    for t in range(n_topics):
        phi[t, group_of == t] = 1.0 / words_per_topic

    thetas = rng.dirichlet([dirichlet] * n_topics, size=n_docs)
    docs: list[PreprocessedDoc] = []
    df = np.zeros(v, dtype=np.int64)
    for d in range(n_docs):
        z = rng.choice(n_topics, size=doc_len, p=thetas[d])
        w = z + n_topics * rng.integers(0, words_per_topic, size=doc_len)
        ids = [int(x) for x in w]
        docs.append(PreprocessedDoc(doc_id=f"doc{d:04d}", sentences=[ids]))
        df[np.unique(w)] += 1

    vocab = Vocabulary(tokens, [int(x) for x in df])
    return PlantedCorpus(
        docs=docs,
        vocab=vocab,
        phi=phi,
        theta=thetas,
        words_per_topic=words_per_topic,
        group_of=group_of,
    )


# ---------------------------------------------------------------------------
# cohort-effect corpus
# ---------------------------------------------------------------------------

_SYLLABLES = [
    "bal", "cor", "dun", "fir", "gol", "hax", "jin", "kel",
    "mon", "nor", "pol", "quin", "rub", "tam", "vex",
]


def synth_keyword(topic_index: int, keyword_index: int) -> str:
    return _SYLLABLES[topic_index] + _SYLLABLES[keyword_index] + "o"


@dataclass
class CohortTruth:
    """Exact per-group mention counts as drawn by the generator."""

    n_per_group: int
    groups: tuple[str, str]
    rates: dict[int, tuple[float, float]]  # topic_id -> nominal (g1, g2) rates
    mentions: dict[int, tuple[int, int]]  # topic_id -> drawn (g1, g2) counts

    def empirical(self, topic_id: int) -> tuple[float, float]:
        m1, m2 = self.mentions[topic_id]
        return m1 / self.n_per_group, m2 / self.n_per_group


def draw_mentions(
    seed: int,
    n_per_group: int,
    rates: dict[int, tuple[float, float]],
    groups: tuple[str, str] = ("male", "female"),
) -> tuple[list[tuple[str, str, set[int]]], CohortTruth]:
    """Draw (doc_id, gender, topic set) tuples with planted Bernoulli rates.

    This is the fast path used for calibration replications; the text-level
    generator below reuses it so file output and truth never diverge.
    """
    rng = np.random.default_rng(seed)
    rows: list[tuple[str, str, set[int]]] = []
    mentions = {t: [0, 0] for t in rates}
    for g_idx, gender in enumerate(groups):
        for i in range(n_per_group):
            topics = set()
            for t, rate_pair in sorted(rates.items()):
                if rng.random() < rate_pair[g_idx]:
                    topics.add(t)
                    mentions[t][g_idx] += 1
            rows.append((f"{gender[0]}{i:05d}", gender, topics))
    truth = CohortTruth(
        n_per_group=n_per_group,
        groups=groups,
        rates=dict(rates),
        mentions={t: (m[0], m[1]) for t, m in mentions.items()},
    )
    return rows, truth


def cohort_corpus(
    out_dir: Path | str,
    seed: int,
    n_per_group: int = 2000,
    rates: dict[int, tuple[float, float]] | None = None,
    keywords_per_topic: int = 4,
    dim_per_topic: int = 5,
) -> CohortTruth:
    """Write a full synthetic cohort project: corpus.csv, vectors.txt,
    topics.json, and expected.json with the drawn ground truth.

    Each mention becomes one sentence listing the topic's keywords (order
    shuffled per sentence).  Keyword vectors live in disjoint coordinate
    blocks, so a keyword sentence is near its topic center (similarity ~1)
    and orthogonal to every other center.
    """
    if rates is None:
        # topic 1 carries the planted effect, topic 2 is the null control
        rates = {1: (0.55, 0.45), 2: (0.30, 0.30)}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    topic_ids = sorted(rates)

    rows, truth = draw_mentions(seed, n_per_group, rates)
    rng = np.random.default_rng(seed + 1)

    # vector store: topic block t gets axis t*dim_per_topic; keyword j adds
    # a small distinct off-axis component so keywords are not duplicates
    dim = len(topic_ids) * dim_per_topic
    kw_vecs: dict[str, np.ndarray] = {}
    topics_obj = []
    for bi, t in enumerate(topic_ids):
        kws = [synth_keyword(bi, j) for j in range(keywords_per_topic)]
        for j, kw in enumerate(kws):
            vec = np.zeros(dim)
            vec[bi * dim_per_topic] = 1.0
            vec[bi * dim_per_topic + 1 + j] = 0.05
            kw_vecs[kw] = vec
        topics_obj.append(
            {"topic_id": t, "name": f"Synthetic {t}", "keywords": kws, "threshold": 0.5}
        )

    lines = [f"{len(kw_vecs)} {dim}"]
    for kw, vec in kw_vecs.items():
        lines.append(kw + " " + " ".join(repr(float(x)) for x in vec))
    write_text(out_dir / "vectors.txt", "\n".join(lines) + "\n")
    write_text(
        out_dir / "topics.json",
        json.dumps({"topics": topics_obj}, indent=2) + "\n",
    )

    kw_by_topic = {t: topics_obj[i]["keywords"] for i, t in enumerate(topic_ids)}
    with open(out_dir / "corpus.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "text", "gender"])
        for doc_id, gender, topics in rows:
            sentences = []
            for t in sorted(topics):
                kws = list(kw_by_topic[t])
                rng.shuffle(kws)
                sentences.append(" ".join(kws) + ".")
            if not sentences:
                sentences = ["nothing to report here."]
            writer.writerow([doc_id, " ".join(sentences), gender])

    expected = {
        "n_per_group": n_per_group,
        "groups": list(truth.groups),
        "topics": [
            {
                "topic_id": t,
                "rate": list(truth.rates[t]),
                "mentions": list(truth.mentions[t]),
                "empirical": list(truth.empirical(t)),
            }
            for t in topic_ids
        ],
    }
    write_text(out_dir / "expected.json", json.dumps(expected, indent=2) + "\n")
    return truth


def save_planted(corpus: PlantedCorpus, out_dir: Path | str) -> None:
    """Persist a planted-topic corpus for CLI-driven experiments."""
    from . import corpus as corpus_mod

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_mod.save_docs(corpus.docs, out_dir / "docs.jsonl")
    corpus_mod.save_vocabulary(corpus.vocab, out_dir / "vocab.txt")
    write_text(
        out_dir / "planted_phi.json",
        json.dumps([[float(x) for x in row] for row in corpus.phi]) + "\n",
    )
