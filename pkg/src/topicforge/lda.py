"""Latent Dirichlet Allocation by collapsed Gibbs sampling.

The sampler resamples every token from the standard collapsed conditional

    p(z_i = t | rest) ∝ (n_dk[d,t] + alpha) * (n_wk[w,t] + beta) / (n_k[t] + V*beta)

with the current token removed from all counts (leave-one-out).  phi and
theta are posterior-mean estimates: smoothed count ratios averaged over
post-burn-in sweeps sampled every 10 sweeps starting at burn_in + 1 (a
single final sample if the schedule would otherwise be empty).

The per-sweep hot loop is compiled with numba; the RNG is numba's own
``np.random`` state, seeded once per fit, so a fixed seed reproduces the
model bit for bit.  The driver stays in Python so callers can observe count
invariants after every sweep via ``on_sweep``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numba
import numpy as np

from .corpus import PreprocessedDoc, Vocabulary
from .util import sha256_text, write_text


class LdaError(ValueError):
    pass


@dataclass
class LdaConfig:
    """Sampler configuration; the seed is mandatory (no wall-clock seeding).

    alpha defaults to 50/k and beta to 0.01 when left unset.
    """

    k: int
    seed: int
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 500

    def __post_init__(self) -> None:
        if self.k < 1:
            raise LdaError("k must be >= 1")
        if self.alpha is None:
            self.alpha = 50.0 / self.k
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise LdaError("alpha and beta must be positive")
        if not (self.iterations > self.burn_in >= 0):
            raise LdaError("need iterations > burn_in >= 0")
        if self.seed is None:
            raise LdaError("seed is required")


@dataclass
class LdaModel:
    n_wk: np.ndarray  # V x k word-topic counts
    n_dk: np.ndarray  # D x k doc-topic counts
    n_k: np.ndarray  # k topic totals
    z: np.ndarray  # flat per-token assignments
    doc_offsets: np.ndarray  # D+1 offsets into z
    phi: np.ndarray  # k x V
    theta: np.ndarray  # D x k
    config: LdaConfig
    vocab: Vocabulary | None = field(default=None, repr=False)
    vocab_size: int = 0

    def doc_z(self, d: int) -> np.ndarray:
        return self.z[self.doc_offsets[d] : self.doc_offsets[d + 1]]


@numba.njit(cache=True)
def _seed_rng(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _init_assignments(doc_ids, word_ids, k, n_wk, n_dk, n_k):
    n = word_ids.shape[0]
    z = np.empty(n, dtype=np.int32)
    for i in range(n):
        t = np.random.randint(0, k)
        z[i] = t
        n_wk[word_ids[i], t] += 1
        n_dk[doc_ids[i], t] += 1
        n_k[t] += 1
    return z


@numba.njit(cache=True)
def _gibbs_sweep(doc_ids, word_ids, z, n_wk, n_dk, n_k, alpha, beta, v_beta, k, probs):
    for i in range(word_ids.shape[0]):
        w = word_ids[i]
        d = doc_ids[i]
        t_old = z[i]
        n_wk[w, t_old] -= 1
        n_dk[d, t_old] -= 1
        n_k[t_old] -= 1
        if n_wk[w, t_old] < 0 or n_dk[d, t_old] < 0 or n_k[t_old] < 0:
            return -1
        total = 0.0
        for t in range(k):
            p = (n_dk[d, t] + alpha) * (n_wk[w, t] + beta) / (n_k[t] + v_beta)
            probs[t] = p
            total += p
        r = np.random.random() * total
        acc = 0.0
        t_new = k - 1
        for t in range(k):
            acc += probs[t]
            if r < acc:
                t_new = t
                break
        z[i] = t_new
        n_wk[w, t_new] += 1
        n_dk[d, t_new] += 1
        n_k[t_new] += 1
    return 0


def _flatten(docs: Sequence[PreprocessedDoc], vocab_size: int):
    doc_ids: list[int] = []
    word_ids: list[int] = []
    offsets = [0]
    for d, doc in enumerate(docs):
        for w, c in sorted(doc.bow.items()):
            if w < 0 or w >= vocab_size:
                raise LdaError(f"doc {doc.doc_id!r}: token id {w} outside [0, {vocab_size})")
            doc_ids.extend([d] * c)
            word_ids.extend([w] * c)
        offsets.append(len(word_ids))
    return (
        np.asarray(doc_ids, dtype=np.int32),
        np.asarray(word_ids, dtype=np.int32),
        np.asarray(offsets, dtype=np.int64),
    )


def fit(
    docs: Sequence[PreprocessedDoc],
    config: LdaConfig,
    vocab: Vocabulary | int,
    on_sweep: Callable[[int, "LdaModel"], None] | None = None,
) -> LdaModel:
    """Fit an LDA model on bag-of-words documents.

    Args:
        docs: preprocessed documents (their ``bow`` fields are used; token
            order within a document does not matter under exchangeability).
        config: sampler configuration, seed included.
        vocab: the Vocabulary, or a bare vocabulary size for synthetic runs.
        on_sweep: optional callback invoked as ``on_sweep(sweep, model)``
            after every sweep with live count matrices (read-only use).

    Empty documents are allowed: they contribute no tokens and end with a
    uniform theta row.
    """
    if isinstance(vocab, Vocabulary):
        vocabulary, v = vocab, len(vocab)
    else:
        vocabulary, v = None, int(vocab)
    if v < 1:
        raise LdaError("vocabulary size must be >= 1")
    if not docs:
        raise LdaError("empty corpus")
    doc_ids, word_ids, offsets = _flatten(docs, v)
    if word_ids.shape[0] == 0:
        raise LdaError("corpus has no tokens")

    k = config.k
    alpha = float(config.alpha)
    beta = float(config.beta)
    n_wk = np.zeros((v, k), dtype=np.int64)
    n_dk = np.zeros((len(docs), k), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    probs = np.empty(k, dtype=np.float64)

    _seed_rng(config.seed)
    z = _init_assignments(doc_ids, word_ids, k, n_wk, n_dk, n_k)

    doc_lengths = n_dk.sum(axis=1)
    phi_acc = np.zeros((k, v), dtype=np.float64)
    theta_acc = np.zeros((len(docs), k), dtype=np.float64)
    samples = 0

    model = LdaModel(
        n_wk=n_wk,
        n_dk=n_dk,
        n_k=n_k,
        z=z,
        doc_offsets=offsets,
        phi=phi_acc,
        theta=theta_acc,
        config=config,
        vocab=vocabulary,
        vocab_size=v,
    )

    for sweep in range(1, config.iterations + 1):
        status = _gibbs_sweep(
            doc_ids, word_ids, z, n_wk, n_dk, n_k, alpha, beta, v * beta, k, probs
        )
        if status != 0:
            raise LdaError("negative count during sampling (corrupt state)")
        if sweep > config.burn_in and (sweep - config.burn_in - 1) % 10 == 0:
            phi_acc += (n_wk.T + beta) / (n_k[:, None] + v * beta)
            theta_acc += (n_dk + alpha) / (doc_lengths[:, None] + k * alpha)
            samples += 1
        if on_sweep is not None:
            on_sweep(sweep, model)

    if samples == 0:
        phi_acc += (n_wk.T + beta) / (n_k[:, None] + v * beta)
        theta_acc += (n_dk + alpha) / (doc_lengths[:, None] + k * alpha)
        samples = 1
    model.phi = phi_acc / samples
    model.theta = theta_acc / samples
    return model


def top_words(model: LdaModel, topic: int, n: int) -> list:
    """Top-n entries of phi[topic], ties broken by ascending token id.

    Returns token strings when the model has a vocabulary, ids otherwise.
    n beyond the vocabulary size truncates to V.
    """
    if topic < 0 or topic >= model.config.k:
        raise LdaError(f"topic {topic} out of range [0, {model.config.k})")
    row = model.phi[topic]
    n = min(n, row.shape[0])
    order = np.lexsort((np.arange(row.shape[0]), -row))
    ids = order[:n]
    if model.vocab is not None:
        return [model.vocab.id_to_token[i] for i in ids]
    return [int(i) for i in ids]


def top_word_ids(model: LdaModel, topic: int, n: int) -> list[int]:
    if topic < 0 or topic >= model.config.k:
        raise LdaError(f"topic {topic} out of range [0, {model.config.k})")
    row = model.phi[topic]
    n = min(n, row.shape[0])
    order = np.lexsort((np.arange(row.shape[0]), -row))
    return [int(i) for i in order[:n]]


def perplexity(model: LdaModel, docs: Sequence[PreprocessedDoc]) -> float:
    """exp(-mean log-likelihood per token) under the phi/theta estimates."""
    if len(docs) != model.theta.shape[0]:
        raise LdaError("docs do not match the model's theta rows")
    total_tokens = 0
    log_lik = 0.0
    for d, doc in enumerate(docs):
        if not doc.bow:
            continue
        ids = np.fromiter(doc.bow.keys(), dtype=np.int64)
        counts = np.fromiter(doc.bow.values(), dtype=np.int64)
        if ids.max(initial=0) >= model.vocab_size:
            raise LdaError(f"doc {doc.doc_id!r}: token outside vocabulary")
        p = model.theta[d] @ model.phi[:, ids]
        log_lik += float(np.dot(counts, np.log(p)))
        total_tokens += int(counts.sum())
    if total_tokens == 0:
        raise LdaError("corpus has no tokens")
    return float(np.exp(-log_lik / total_tokens))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_FORMAT = "topicforge-lda/1"


def vocab_hash(vocab: Vocabulary) -> str:
    return sha256_text("\n".join(vocab.id_to_token))


def save_model(model: LdaModel, path: Path | str) -> Path:
    obj = {
        "format": _FORMAT,
        "config": {
            "k": model.config.k,
            "seed": model.config.seed,
            "alpha": model.config.alpha,
            "beta": model.config.beta,
            "iterations": model.config.iterations,
            "burn_in": model.config.burn_in,
        },
        "vocab_size": model.vocab_size,
        "vocab_sha256": vocab_hash(model.vocab) if model.vocab is not None else None,
        "phi": [[float(x) for x in row] for row in model.phi],
        "theta": [[float(x) for x in row] for row in model.theta],
    }
    return write_text(path, json.dumps(obj, separators=(",", ":")) + "\n")


def load_model(path: Path | str, vocab: Vocabulary | None = None) -> LdaModel:
    """Load phi/theta + config; verifies the vocabulary hash when one is given."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != _FORMAT:
        raise LdaError(f"unsupported model format {obj.get('format')!r}")
    if vocab is not None:
        expected = obj.get("vocab_sha256")
        if expected is not None and vocab_hash(vocab) != expected:
            raise LdaError("vocabulary hash mismatch: model was fit on different tokens")
    cfg = LdaConfig(**obj["config"])
    phi = np.array(obj["phi"], dtype=np.float64)
    theta = np.array(obj["theta"], dtype=np.float64)
    k, v = phi.shape
    d = theta.shape[0]
    return LdaModel(
        n_wk=np.zeros((v, k), dtype=np.int64),
        n_dk=np.zeros((d, k), dtype=np.int64),
        n_k=np.zeros(k, dtype=np.int64),
        z=np.zeros(0, dtype=np.int32),
        doc_offsets=np.zeros(d + 1, dtype=np.int64),
        phi=phi,
        theta=theta,
        config=cfg,
        vocab=vocab,
        vocab_size=int(obj["vocab_size"]),
    )
