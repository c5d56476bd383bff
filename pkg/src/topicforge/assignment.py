"""Sentence-to-topic assignment and cohort-level aggregation.

Each sentence is mapped to the topic center with the highest cosine
similarity; a per-topic threshold then decides whether the match counts.
Documents carry the SET of their accepted sentence topics, so per-cohort
frequencies are proportions of documents mentioning a topic, not a
probability distribution over topics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import PreprocessedDoc, TokenizedDoc, Vocabulary
from .embedding import TopicSpec, VectorStore, sentence_vector
from .util import fmt_float, write_text


class AssignmentError(ValueError):
    pass


@dataclass(frozen=True)
class SentenceAssignment:
    doc_id: str
    sentence_index: int
    best_topic: int
    similarity: float
    accepted: bool


@dataclass(frozen=True)
class DocTopics:
    doc_id: str
    topics: frozenset[int]

    @property
    def n_topics(self) -> int:
        return len(self.topics)


def assign_sentence(
    svec: np.ndarray,
    specs: Sequence[TopicSpec],
    doc_id: str = "",
    sentence_index: int = 0,
) -> SentenceAssignment:
    """Nearest-center assignment with per-topic threshold acceptance.

    Ties in similarity resolve to the lowest topic_id.  Acceptance uses >=,
    so a sentence sitting exactly on the threshold is kept.
    """
    if not specs:
        raise AssignmentError("no topic specs")
    norm = float(np.linalg.norm(svec))
    if norm == 0.0:
        raise AssignmentError("sentence vector is zero; no direction to compare")
    best: TopicSpec | None = None
    best_sim = -2.0
    for spec in sorted(specs, key=lambda s: s.topic_id):
        if spec.center is None:
            raise AssignmentError(
                f"topic {spec.name!r} has no computed center; call compute_centers first"
            )
        cnorm = float(np.linalg.norm(spec.center))
        sim = float(np.dot(svec, spec.center) / (norm * cnorm))
        sim = max(-1.0, min(1.0, sim))
        if sim > best_sim:
            best, best_sim = spec, sim
    assert best is not None
    return SentenceAssignment(
        doc_id=doc_id,
        sentence_index=sentence_index,
        best_topic=best.topic_id,
        similarity=best_sim,
        accepted=best_sim >= best.threshold,
    )


def _sentence_token_lists(
    doc: TokenizedDoc | PreprocessedDoc, vocab: Vocabulary | None
) -> list[list[str]]:
    if isinstance(doc, TokenizedDoc):
        return doc.sentences
    if vocab is None:
        raise AssignmentError(
            f"doc {doc.doc_id!r} holds token ids; a vocabulary is required to decode them"
        )
    return [[vocab.id_to_token[i] for i in sent] for sent in doc.sentences]


def assign_document_detailed(
    doc: TokenizedDoc | PreprocessedDoc,
    store: VectorStore,
    specs: Sequence[TopicSpec],
    vocab: Vocabulary | None = None,
) -> tuple[DocTopics, list[SentenceAssignment]]:
    """Per-sentence assignments plus the document's accepted-topic set.

    Sentences whose tokens all miss the vector store (or cancel to a zero
    mean) produce no assignment row but the document still exists for
    cohort denominators.
    """
    rows: list[SentenceAssignment] = []
    for idx, tokens in enumerate(_sentence_token_lists(doc, vocab)):
        svec = sentence_vector(store, tokens)
        if svec is None or float(np.linalg.norm(svec)) == 0.0:
            continue
        rows.append(assign_sentence(svec, specs, doc_id=doc.doc_id, sentence_index=idx))
    topics = frozenset(r.best_topic for r in rows if r.accepted)
    return DocTopics(doc_id=doc.doc_id, topics=topics), rows


def assign_document(
    doc: TokenizedDoc | PreprocessedDoc,
    store: VectorStore,
    specs: Sequence[TopicSpec],
    vocab: Vocabulary | None = None,
) -> DocTopics:
    return assign_document_detailed(doc, store, specs, vocab)[0]


def assign_corpus(
    docs: Iterable[TokenizedDoc | PreprocessedDoc],
    store: VectorStore,
    specs: Sequence[TopicSpec],
    vocab: Vocabulary | None = None,
) -> tuple[list[DocTopics], list[SentenceAssignment]]:
    doc_topics: list[DocTopics] = []
    sentences: list[SentenceAssignment] = []
    for doc in docs:
        dt, rows = assign_document_detailed(doc, store, specs, vocab)
        doc_topics.append(dt)
        sentences.extend(rows)
    return doc_topics, sentences


# ---------------------------------------------------------------------------
# cohort aggregation
# ---------------------------------------------------------------------------

def topic_frequencies(
    assignments: Sequence[DocTopics],
    topic_ids: Sequence[int],
    cohort: Callable[[str], bool] | None = None,
) -> dict[int, float]:
    """Proportion of cohort documents whose topic set contains each topic.

    Rows need not sum to 1: a document can mention several topics or none.
    """
    selected = [a for a in assignments if cohort is None or cohort(a.doc_id)]
    if not selected:
        raise AssignmentError("empty cohort: no documents selected")
    n = len(selected)
    return {
        t: sum(1 for a in selected if t in a.topics) / n for t in topic_ids
    }


def mean_topic_count(
    assignments: Sequence[DocTopics],
    cohort: Callable[[str], bool] | None = None,
) -> tuple[float, float | None, int]:
    """Sample mean and sd (n-1 denominator) of per-document topic counts."""
    counts = [a.n_topics for a in assignments if cohort is None or cohort(a.doc_id)]
    if not counts:
        raise AssignmentError("empty cohort: no documents selected")
    n = len(counts)
    mean = sum(counts) / n
    if n == 1:
        return mean, None, 1
    var = sum((c - mean) ** 2 for c in counts) / (n - 1)
    return mean, var ** 0.5, n


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_sentence_assignments(
    rows: Sequence[SentenceAssignment], path: Path | str
) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id", "sentence_index", "best_topic", "similarity", "accepted"])
        for r in rows:
            writer.writerow(
                [r.doc_id, r.sentence_index, r.best_topic, fmt_float(r.similarity),
                 "true" if r.accepted else "false"]
            )
    return out


def save_doc_topics(assignments: Sequence[DocTopics], path: Path | str) -> Path:
    lines = ["doc_id,topics"]
    for a in assignments:
        lines.append(f"{a.doc_id},{';'.join(str(t) for t in sorted(a.topics))}")
    return write_text(path, "\n".join(lines) + "\n")


def load_sentence_assignments(path: Path | str) -> list[SentenceAssignment]:
    rows: list[SentenceAssignment] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                SentenceAssignment(
                    doc_id=rec["doc_id"],
                    sentence_index=int(rec["sentence_index"]),
                    best_topic=int(rec["best_topic"]),
                    similarity=float(rec["similarity"]),
                    accepted=rec["accepted"] == "true",
                )
            )
    return rows
