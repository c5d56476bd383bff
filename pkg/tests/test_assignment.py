"""Assignment tests: nearest-center decisions, threshold semantics,
document topic sets, cohort aggregation, and the audit CSV exports."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicforge.assignment import (
    AssignmentError,
    DocTopics,
    assign_corpus,
    assign_document,
    assign_document_detailed,
    assign_sentence,
    load_sentence_assignments,
    mean_topic_count,
    save_doc_topics,
    save_sentence_assignments,
    topic_frequencies,
)
from topicforge.corpus import PreprocessedDoc, TokenizedDoc, Vocabulary
from topicforge.embedding import TopicSpec, VectorStore, compute_centers
from topicforge.synth import draw_mentions


def make_store(vectors: dict[str, list[float]]) -> VectorStore:
    tokens = sorted(vectors)
    dim = len(next(iter(vectors.values())))
    matrix = np.array([vectors[t] for t in tokens], dtype=np.float64)
    return VectorStore(dim=dim, tokens=tokens, matrix=matrix)


def axis_specs(n: int, dim: int, threshold: float = 0.5) -> list[TopicSpec]:
    specs = []
    for t in range(n):
        center = np.zeros(dim)
        center[t] = 1.0
        spec = TopicSpec(topic_id=t + 1, name=f"topic{t + 1}", keywords=[f"k{t}"],
                         threshold=threshold)
        spec.center = center
        specs.append(spec)
    return specs


# ---------------------------------------------------------------------------
# assign_sentence
# ---------------------------------------------------------------------------

def test_exact_center_hit_similarity_one():
    specs = axis_specs(4, 4, threshold=0.5)
    a = assign_sentence(np.array([0.0, 0.0, 1.0, 0.0]), specs)
    assert (a.best_topic, a.similarity, a.accepted) == (3, 1.0, True)


def test_below_threshold_still_reports_best_topic():
    specs = axis_specs(2, 4, threshold=0.5)
    specs[1].threshold = 0.40  # the strictest published cutoff
    svec = np.array([0.1, 1.0, 0.0, 0.0]) * 0.0 + np.array([0.05, 0.39, 0.0, 0.92])
    a = assign_sentence(svec / np.linalg.norm(svec), specs[:2])
    assert a.best_topic == 2 or a.best_topic == 1
    low = assign_sentence(np.array([0.39, 0.0, 0.0, 0.921]), [specs[0]])
    assert low.best_topic == 1 and not low.accepted  # sim ~= 0.39 < 0.5


def test_boundary_similarity_equals_threshold_accepted():
    # integer coordinates chosen so the cosine is the exact double 0.4
    spec = TopicSpec(topic_id=9, name="m", keywords=["x"], threshold=0.40)
    spec.center = np.array([1.0, 0.0, 0.0, 0.0])
    a = assign_sentence(np.array([2.0, 4.0, 2.0, 1.0]), [spec])
    assert a.similarity == 0.40
    assert a.accepted


def test_tie_breaks_to_lowest_topic_id():
    specs = axis_specs(3, 3, threshold=0.1)
    a = assign_sentence(np.array([1.0, 1.0, 0.0]), specs)
    assert a.best_topic == 1
    # spec list order must not matter
    b = assign_sentence(np.array([1.0, 1.0, 0.0]), list(reversed(specs)))
    assert b.best_topic == 1


def test_zero_vector_rejected():
    with pytest.raises(AssignmentError):
        assign_sentence(np.zeros(3), axis_specs(2, 3))


def test_missing_center_rejected():
    spec = TopicSpec(topic_id=1, name="t", keywords=["x"], threshold=0.5)
    with pytest.raises(AssignmentError, match="center"):
        assign_sentence(np.ones(3), [spec])


def test_no_specs_rejected():
    with pytest.raises(AssignmentError):
        assign_sentence(np.ones(3), [])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_center_rescaling_never_changes_decisions(coords):
    svec = np.array(coords)
    if float(np.linalg.norm(svec)) < 1e-9:
        return
    specs = axis_specs(4, 4, threshold=0.5)
    base = assign_sentence(svec, specs)
    for spec in specs:
        spec.center = spec.center * 37.5
    scaled = assign_sentence(svec, specs)
    assert (base.best_topic, base.accepted) == (scaled.best_topic, scaled.accepted)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.floats(-0.9, 0.9),
    st.floats(0.0, 0.5),
)
def test_raising_threshold_never_accepts_more(coords, tau, bump):
    svec = np.array(coords)
    if float(np.linalg.norm(svec)) < 1e-9:
        return
    lo = axis_specs(4, 4, threshold=tau)
    hi = axis_specs(4, 4, threshold=tau)
    hi[2].threshold = min(0.99, tau + bump)
    a_lo = assign_sentence(svec, lo)
    a_hi = assign_sentence(svec, hi)
    assert a_lo.best_topic == a_hi.best_topic
    if a_hi.accepted and a_hi.best_topic == 3:
        assert a_lo.accepted


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_removing_a_spec_only_affects_its_own_argmax(coords):
    svec = np.array(coords)
    if float(np.linalg.norm(svec)) < 1e-9:
        return
    specs = axis_specs(4, 4, threshold=0.3)
    full = assign_sentence(svec, specs)
    removed_id = 2
    remaining = [s for s in specs if s.topic_id != removed_id]
    partial = assign_sentence(svec, remaining)
    if full.best_topic != removed_id:
        assert (partial.best_topic, partial.similarity, partial.accepted) == (
            full.best_topic, full.similarity, full.accepted)


# ---------------------------------------------------------------------------
# assign_document
# ---------------------------------------------------------------------------

def doc_store() -> VectorStore:
    return make_store({
        "k0": [1.0, 0.0, 0.0, 0.0],
        "k1": [0.0, 1.0, 0.0, 0.0],
        "k2": [0.0, 0.0, 1.0, 0.0],
        "k3": [0.0, 0.0, 0.0, 1.0],
        "weak": [0.3, 0.3, 0.3, 0.3],
    })


def test_single_keyword_sentence_assigns_its_topic():
    specs = axis_specs(4, 4)
    doc = TokenizedDoc(doc_id="d1", sentences=[["k2", "k2"]])
    assert assign_document(doc, doc_store(), specs).topics == {3}


def test_duplicate_topic_sentences_dedup():
    specs = axis_specs(4, 4)
    doc = TokenizedDoc(doc_id="d1", sentences=[["k1"], ["k1", "k1"]])
    dt, rows = assign_document_detailed(doc, doc_store(), specs)
    assert dt.topics == {2} and dt.n_topics == 1
    assert [r.sentence_index for r in rows] == [0, 1]


def test_all_below_threshold_empty_set():
    specs = axis_specs(4, 4, threshold=0.9)
    doc = TokenizedDoc(doc_id="d1", sentences=[["weak"]])
    dt, rows = assign_document_detailed(doc, doc_store(), specs)
    assert dt.topics == frozenset()
    assert len(rows) == 1 and not rows[0].accepted


def test_empty_doc_and_oov_sentences_skipped():
    specs = axis_specs(4, 4)
    dt, rows = assign_document_detailed(
        TokenizedDoc(doc_id="d", sentences=[[], ["zzz", "qqq"], ["k0"]]),
        doc_store(), specs)
    assert dt.topics == {1}
    assert [r.sentence_index for r in rows] == [2]
    empty = assign_document(TokenizedDoc(doc_id="e", sentences=[]), doc_store(), specs)
    assert empty.topics == frozenset()


def test_preprocessed_doc_decodes_through_vocab():
    vocab = Vocabulary(tokens=["k0", "k1", "k2", "k3"], doc_freq=[1, 1, 1, 1])
    doc = PreprocessedDoc(doc_id="p1", sentences=[[0], [3]])
    dt = assign_document(doc, doc_store(), axis_specs(4, 4), vocab=vocab)
    assert dt.topics == {1, 4}


def test_preprocessed_doc_without_vocab_errors():
    doc = PreprocessedDoc(doc_id="p1", sentences=[[0]])
    with pytest.raises(AssignmentError, match="vocabulary"):
        assign_document(doc, doc_store(), axis_specs(4, 4))


def test_centers_computed_from_keywords():
    store = doc_store()
    specs = [
        TopicSpec(topic_id=1, name="a", keywords=["k0"], threshold=0.5),
        TopicSpec(topic_id=2, name="b", keywords=["k1", "k2"], threshold=0.5),
    ]
    compute_centers(store, specs)
    doc = TokenizedDoc(doc_id="d", sentences=[["k1", "k2"]])
    assert assign_document(doc, store, specs).topics == {2}


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def test_topic_frequencies_single_doc():
    dts = [DocTopics("a", frozenset({1, 3}))]
    freqs = topic_frequencies(dts, topic_ids=[1, 2, 3])
    assert freqs == {1: 1.0, 2: 0.0, 3: 1.0}


def test_topic_frequencies_counting():
    dts = [DocTopics(f"d{i}", frozenset({2} if i < 3 else set())) for i in range(4)]
    assert topic_frequencies(dts, topic_ids=[2])[2] == 0.75


def test_topic_frequencies_empty_cohort_errors():
    dts = [DocTopics("a", frozenset())]
    with pytest.raises(AssignmentError):
        topic_frequencies(dts, topic_ids=[1], cohort=lambda d: False)


def test_topic_frequencies_rows_in_unit_interval_not_normalized():
    dts = [DocTopics("a", frozenset({1, 2, 3})), DocTopics("b", frozenset({1, 2}))]
    freqs = topic_frequencies(dts, topic_ids=[1, 2, 3])
    assert all(0.0 <= v <= 1.0 for v in freqs.values())
    assert sum(freqs.values()) > 1.0  # sets overlap; no distribution constraint


def test_topic_frequencies_match_generator_truth_exactly():
    rows, truth = draw_mentions(seed=11, n_per_group=200,
                                rates={1: (0.55, 0.45), 2: (0.30, 0.30)})
    gender_of = {doc_id: g for doc_id, g, _ in rows}
    dts = [DocTopics(doc_id, frozenset(topics)) for doc_id, _, topics in rows]
    for g_idx, gender in enumerate(truth.groups):
        freqs = topic_frequencies(dts, topic_ids=[1, 2],
                                  cohort=lambda d, g=gender: gender_of[d] == g)
        for t in (1, 2):
            assert freqs[t] == truth.empirical(t)[g_idx]


def test_mean_topic_count_closed_form():
    dts = [DocTopics("a", frozenset({1, 2})), DocTopics("b", frozenset({1, 2, 3}))]
    mean, sd, n = mean_topic_count(dts)
    assert (mean, n) == (2.5, 2)
    assert sd == pytest.approx(0.7071068, abs=1e-7)


def test_mean_topic_count_degenerate_cases():
    same = [DocTopics(str(i), frozenset({1})) for i in range(5)]
    mean, sd, n = mean_topic_count(same)
    assert (mean, sd, n) == (1.0, 0.0, 5)
    mean1, sd1, n1 = mean_topic_count(same[:1])
    assert (mean1, sd1, n1) == (1.0, None, 1)
    with pytest.raises(AssignmentError):
        mean_topic_count(same, cohort=lambda d: False)


def test_mean_topic_count_against_bruteforce():
    rng = np.random.default_rng(4)
    dts = [DocTopics(f"d{i}", frozenset(int(t) for t in
           rng.choice(9, size=rng.integers(0, 6), replace=False)))
           for i in range(1000)]
    mean, sd, n = mean_topic_count(dts)
    counts = np.array([dt.n_topics for dt in dts], dtype=np.float64)
    assert n == 1000
    assert mean == pytest.approx(float(np.mean(counts)), abs=0)
    assert sd == pytest.approx(float(np.std(counts, ddof=1)), rel=1e-12)


def test_docs_with_no_resolvable_sentences_stay_in_denominator():
    specs = axis_specs(4, 4)
    docs = [
        TokenizedDoc(doc_id="hit", sentences=[["k0"]]),
        TokenizedDoc(doc_id="miss", sentences=[["zzz"]]),
    ]
    dts, _ = assign_corpus(docs, doc_store(), specs)
    freqs = topic_frequencies(dts, topic_ids=[1])
    assert freqs[1] == 0.5


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_sentence_csv_roundtrip(tmp_path):
    specs = axis_specs(4, 4)
    docs = [TokenizedDoc(doc_id=f"d{i}", sentences=[["k0", "weak"], ["k3"]])
            for i in range(3)]
    _, rows = assign_corpus(docs, doc_store(), specs)
    path = save_sentence_assignments(rows, tmp_path / "sent.csv")
    again = load_sentence_assignments(path)
    assert again == rows
    path2 = save_sentence_assignments(again, tmp_path / "sent2.csv")
    assert path.read_bytes() == path2.read_bytes()


def test_doc_topics_csv_format(tmp_path):
    dts = [DocTopics("b", frozenset({3, 1})), DocTopics("a", frozenset())]
    path = save_doc_topics(dts, tmp_path / "docs.csv")
    assert path.read_text() == "doc_id,topics\nb,1;3\na,\n"
