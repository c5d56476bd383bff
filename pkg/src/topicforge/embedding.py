"""Word-vector store, topic centers, cosine geometry, and 2-D projection.

Vectors are loaded from the word2vec *text* format only (header line
``<count> <dim>``, then one token and ``dim`` decimals per line).  The text
format gives a bit-exact parse contract: saving re-serializes each component
with ``repr``, so load -> save -> load round-trips to identical bytes.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .util import fmt_float, write_text


class VectorFormatError(ValueError):
    pass


class TopicCenterError(ValueError):
    pass


class VectorStore:
    """Immutable token -> dense vector map.

    Lookup normalization chain (first hit wins): lowercase the token, try it
    raw; try it with separators rewritten to underscores; finally fall back
    to the mean of its '-'/'_' parts that are in the store.  The chain
    bridges corpus phrase tokens ("machine_learning", "co-op") and plain
    embedding vocabularies.
    """

    def __init__(self, dim: int, tokens: Sequence[str], matrix: np.ndarray):
        if matrix.shape != (len(tokens), dim):
            raise VectorFormatError("matrix shape does not match tokens/dim")
        if not np.isfinite(matrix).all():
            raise VectorFormatError("non-finite vector component")
        self.dim = dim
        self._tokens = list(tokens)
        self._matrix = np.asarray(matrix, dtype=np.float64)
        self._index = {t: i for i, t in enumerate(self._tokens)}

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def tokens(self) -> list[str]:
        return list(self._tokens)

    def raw(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self._matrix[i]

    def get(self, token: str) -> np.ndarray | None:
        """Lookup with the normalization chain; None when nothing resolves."""
        token = token.lower()
        vec = self.raw(token)
        if vec is not None:
            return vec
        joined = token.replace("-", "_")
        if joined != token:
            vec = self.raw(joined)
            if vec is not None:
                return vec
        parts = [p for p in token.replace("-", "_").split("_") if p]
        if len(parts) > 1:
            found = [self.raw(p) for p in parts]
            found = [v for v in found if v is not None]
            if found:
                return np.mean(found, axis=0)
        return None


def load_vectors(path: Path | str) -> VectorStore:
    """Parse a word2vec text file.

    Raises VectorFormatError (with line numbers) on a malformed header, a
    line with the wrong component count, non-finite values, or a data-line
    count that disagrees with the header.  Duplicate tokens keep their first
    position but take the last value, with a warning.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise VectorFormatError("empty vector file")
    header = lines[0].split()
    if len(header) != 2:
        raise VectorFormatError("line 1: header must be '<count> <dim>'")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise VectorFormatError("line 1: header must be two integers")
    if count < 0 or dim <= 0:
        raise VectorFormatError("line 1: header values out of range")

    data_lines = [ln for ln in lines[1:] if ln.strip()]
    if len(data_lines) != count:
        raise VectorFormatError(
            f"header declares {count} tokens but file has {len(data_lines)} data lines"
        )
    tokens: list[str] = []
    index: dict[str, int] = {}
    rows: list[np.ndarray] = []
    for lineno, line in enumerate(data_lines, start=2):
        parts = line.split()
        if len(parts) != dim + 1:
            raise VectorFormatError(
                f"line {lineno}: expected token + {dim} components, got {len(parts) - 1}"
            )
        token = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise VectorFormatError(f"line {lineno}: non-numeric component")
        if not np.isfinite(vec).all():
            raise VectorFormatError(f"line {lineno}: non-finite component")
        if token in index:
            warnings.warn(f"duplicate token {token!r} at line {lineno}; last value wins")
            rows[index[token]] = vec
        else:
            index[token] = len(tokens)
            tokens.append(token)
            rows.append(vec)
    matrix = np.vstack(rows) if rows else np.zeros((0, dim))
    return VectorStore(dim, tokens, matrix)


def save_vectors(store: VectorStore, path: Path | str) -> Path:
    lines = [f"{len(store)} {store.dim}"]
    for token in store.tokens():
        vec = store.raw(token)
        lines.append(token + " " + " ".join(fmt_float(x) for x in vec))
    return write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# topic specs
# ---------------------------------------------------------------------------

@dataclass
class TopicSpec:
    topic_id: int
    name: str
    keywords: list[str]
    threshold: float
    center: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError(f"topic {self.name!r}: keywords must be non-empty")
        if not (-1.0 < self.threshold < 1.0):
            raise ValueError(
                f"topic {self.name!r}: threshold {self.threshold} outside (-1, 1)"
            )


def load_topic_specs(path: Path | str) -> list[TopicSpec]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    specs = [
        TopicSpec(
            topic_id=int(t["topic_id"]),
            name=str(t["name"]),
            keywords=[str(k) for k in t["keywords"]],
            threshold=float(t["threshold"]),
        )
        for t in obj["topics"]
    ]
    ids = [s.topic_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate topic_id in spec file")
    return specs


def save_topic_specs(specs: Sequence[TopicSpec], path: Path | str) -> Path:
    obj = {
        "topics": [
            {
                "topic_id": s.topic_id,
                "name": s.name,
                "keywords": s.keywords,
                "threshold": s.threshold,
            }
            for s in specs
        ]
    }
    return write_text(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def default_topic_specs() -> list[TopicSpec]:
    """The nine-topic reference configuration shipped with the package."""
    path = resources.files("topicforge").joinpath("data").joinpath("default_topics.json")
    return load_topic_specs(Path(str(path)))


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def sentence_vector(store: VectorStore, tokens: Iterable[str]) -> np.ndarray | None:
    """Mean of in-store token vectors; None when no token resolves."""
    found = [v for v in (store.get(t) for t in tokens) if v is not None]
    if not found:
        return None
    return np.mean(found, axis=0)


def topic_center(store: VectorStore, spec: TopicSpec) -> np.ndarray:
    """Unit-normalized mean of the spec's in-store keyword vectors.

    Caches the result on the spec.  Raises TopicCenterError when no keyword
    resolves or the mean is (numerically) the zero vector.
    """
    found = [v for v in (store.get(k) for k in spec.keywords) if v is not None]
    if not found:
        raise TopicCenterError(f"topic {spec.name!r}: no keyword found in vector store")
    mean = np.mean(found, axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < 1e-12:
        raise TopicCenterError(f"topic {spec.name!r}: degenerate center (zero mean)")
    center = mean / norm
    spec.center = center
    return center


def compute_centers(store: VectorStore, specs: Sequence[TopicSpec]) -> None:
    for spec in specs:
        topic_center(store, spec)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na2 = float(np.dot(a, a))
    nb2 = float(np.dot(b, b))
    if na2 == 0.0 or nb2 == 0.0:
        raise ValueError("cosine similarity undefined for zero vector")
    # sqrt(x*x) == x exactly in IEEE round-to-nearest, so self-similarity is
    # exactly 1.0; separate norms would lose an ulp in the product
    prod = na2 * nb2
    denom = math.sqrt(prod) if math.isfinite(prod) else math.sqrt(na2) * math.sqrt(nb2)
    val = float(np.dot(a, b) / denom)
    return max(-1.0, min(1.0, val))


def project_centers_2d(centers: Sequence[np.ndarray]) -> np.ndarray:
    """Project topic centers to 2-D via top-2 SVD of the mean-centered matrix.

    Sign convention: each singular direction is flipped, if needed, so its
    largest-magnitude component is positive (ties resolved to the lowest
    index by argmax).  With effective rank < 2 the second coordinate is all
    zeros and a warning is emitted.
    """
    if len(centers) < 2:
        raise ValueError("need at least 2 centers to project")
    m = np.vstack([np.asarray(c, dtype=np.float64) for c in centers])
    centered = m - m.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(centered.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    coords = np.zeros((m.shape[0], 2))
    for axis in range(2):
        if axis >= s.size or s[axis] <= tol:
            warnings.warn("centers have rank < 2 after centering; axis %d is zero" % (axis + 1))
            continue
        direction = vt[axis]
        if direction[int(np.argmax(np.abs(direction)))] < 0:
            direction = -direction
        coords[:, axis] = centered @ direction
    return coords
