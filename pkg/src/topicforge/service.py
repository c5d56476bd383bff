"""HTTP curation API.

One project = one directory under the data root, holding the corpus, the
embedding store, fitted models, the coherence curve, an append-only topic
spec log, and immutable assignment snapshots.  The service never recomputes
statistics client-side state could drift from: every number the UI shows
comes from these endpoints.

Spec edits are events: specs.log is line-delimited JSON, replayed on load.
Assignment recompute is single-writer per project (409 on contention);
reads never block.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query, Response
from pydantic import BaseModel, Field

from . import corpus as corpus_mod
from . import lda as lda_mod
from .assignment import DocTopics, assign_corpus, save_doc_topics, save_sentence_assignments
from .coherence import CoherenceCurve, k_sweep, load_curve, save_curve
from .cohorts import (
    FACETS,
    LEGEND,
    CohortRecord,
    CohortError,
    DiffTable,
    attach_topics,
    difference_table,
    income_groups,
    join_census,
    kmeans_education,
    load_census,
    load_postal_map,
    nested_difference_tables,
)
from .embedding import (
    TopicCenterError,
    TopicSpec,
    VectorStore,
    cosine_similarity,
    load_vectors,
    project_centers_2d,
    sentence_vector,
    topic_center,
)
from .synth import cohort_corpus
from .util import json_compact, sha256_file, write_text

API_PREFIX = "/v1"


class ProjectError(ValueError):
    pass


# ---------------------------------------------------------------------------
# project state
# ---------------------------------------------------------------------------

class Project:
    """Lazy-loading view over one project directory."""

    def __init__(self, root: Path):
        if not root.is_dir():
            raise ProjectError(f"no project directory at {root}")
        self.root = root
        self.project_id = root.name
        self.recompute_lock = threading.Lock()
        self._spec_lock = threading.Lock()
        self._store: VectorStore | None = None
        self._tokenized: list[corpus_mod.TokenizedDoc] | None = None
        self._cohort_base: list[CohortRecord] | None = None
        self._tables_cache: dict[tuple[str, str, str], bytes] = {}
        self.specs: dict[int, TopicSpec] = {}
        self.topic_versions: dict[int, int] = {}
        self.version = 0
        self._replay_spec_log()

    # -- config ------------------------------------------------------------

    @property
    def meta(self) -> dict[str, Any]:
        path = self.root / "project.json"
        if not path.exists():
            raise ProjectError(f"{self.project_id}: missing project.json")
        return json.loads(path.read_text(encoding="utf-8"))

    @property
    def store(self) -> VectorStore:
        if self._store is None:
            self._store = load_vectors(self.root / "vectors.txt")
        return self._store

    @property
    def tokenized(self) -> list[corpus_mod.TokenizedDoc]:
        if self._tokenized is None:
            self._tokenized = corpus_mod.load_tokenized(self.root / "tokenized.jsonl")
        return self._tokenized

    # -- spec event log ------------------------------------------------------

    def _replay_spec_log(self) -> None:
        path = self.root / "specs.log"
        self.specs = {}
        self.topic_versions = {}
        self.version = 0
        if not path.exists():
            return
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            event = json.loads(line)
            if event["version"] != self.version + 1:
                raise ProjectError(
                    f"{self.project_id}: specs.log line {line_no} has version "
                    f"{event['version']}, expected {self.version + 1}"
                )
            spec = TopicSpec(
                topic_id=int(event["topic_id"]),
                name=str(event["name"]),
                keywords=[str(k) for k in event["keywords"]],
                threshold=float(event["threshold"]),
            )
            self.specs[spec.topic_id] = spec
            self.version = event["version"]
            self.topic_versions[spec.topic_id] = self.version

    def append_spec_event(self, spec: TopicSpec) -> int:
        with self._spec_lock:
            self.version += 1
            event = {
                "version": self.version,
                "topic_id": spec.topic_id,
                "name": spec.name,
                "keywords": spec.keywords,
                "threshold": spec.threshold,
            }
            with (self.root / "specs.log").open("a", encoding="utf-8") as fh:
                fh.write(json_compact(event) + "\n")
            self.specs[spec.topic_id] = spec
            self.topic_versions[spec.topic_id] = self.version
            return self.version

    def ordered_specs(self) -> list[TopicSpec]:
        return [self.specs[t] for t in sorted(self.specs)]

    def ensure_centers(self) -> list[TopicSpec]:
        specs = self.ordered_specs()
        for spec in specs:
            if spec.center is None:
                topic_center(self.store, spec)
        return specs

    # -- models and curve ----------------------------------------------------

    def model_ks(self) -> list[int]:
        out = []
        for path in sorted((self.root / "models").glob("lda_k*.json")):
            stem = path.stem.removeprefix("lda_k")
            if stem.isdigit():
                out.append(int(stem))
        return sorted(out)

    def load_model(self, k: int) -> lda_mod.LdaModel:
        path = self.root / "models" / f"lda_k{k}.json"
        if not path.exists():
            raise ProjectError(f"{self.project_id}: no fitted model for k={k}")
        vocab_path = self.root / "vocab.txt"
        vocab = corpus_mod.load_vocabulary(vocab_path) if vocab_path.exists() else None
        return lda_mod.load_model(path, vocab)

    def curve(self) -> CoherenceCurve:
        path = self.root / "curve.csv"
        if not path.exists():
            raise ProjectError(f"{self.project_id}: no coherence curve")
        return load_curve(path)

    def chosen_k(self) -> int | None:
        path = self.root / "chosen_k.json"
        if not path.exists():
            return None
        return int(json.loads(path.read_text(encoding="utf-8"))["k"])

    def record_chosen_k(self, k: int) -> None:
        write_text(self.root / "chosen_k.json", json_compact({"k": k}) + "\n")

    # -- snapshots -----------------------------------------------------------

    def snapshot_ids(self) -> list[str]:
        snap_root = self.root / "snapshots"
        if not snap_root.is_dir():
            return []
        return sorted(p.name for p in snap_root.iterdir() if (p / "meta.json").exists())

    def latest_snapshot(self) -> str | None:
        ids = self.snapshot_ids()
        return ids[-1] if ids else None

    def recompute_assignments(self) -> dict[str, Any]:
        """Assign every document against the current specs; write a snapshot.

        Caller must hold recompute_lock.
        """
        specs = self.ensure_centers()
        doc_topics, rows = assign_corpus(self.tokenized, self.store, specs)
        snap_id = f"{len(self.snapshot_ids()) + 1:04d}"
        snap_dir = self.root / "snapshots" / snap_id
        snap_dir.mkdir(parents=True, exist_ok=True)
        save_sentence_assignments(rows, snap_dir / "sentences.csv")
        save_doc_topics(doc_topics, snap_dir / "doc_topics.csv")
        meta = {
            "snapshot_id": snap_id,
            "spec_version": self.version,
            "topics": [[s.topic_id, s.name] for s in specs],
        }
        write_text(snap_dir / "meta.json", json_compact(meta) + "\n")
        return meta

    def snapshot_meta(self, snap_id: str) -> dict[str, Any]:
        path = self.root / "snapshots" / snap_id / "meta.json"
        if not path.exists():
            raise ProjectError(f"{self.project_id}: no snapshot {snap_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def snapshot_doc_topics(self, snap_id: str) -> dict[str, frozenset[int]]:
        path = self.root / "snapshots" / snap_id / "doc_topics.csv"
        out: dict[str, frozenset[int]] = {}
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            doc_id, _, topics = line.partition(",")
            out[doc_id] = frozenset(int(t) for t in topics.split(";") if t)
        return out

    # -- cohort tables ---------------------------------------------------------

    def cohort_base(self) -> list[CohortRecord]:
        """Corpus records joined (when census files exist) and grouped."""
        if self._cohort_base is not None:
            return self._cohort_base
        meta = self.meta
        schema = meta.get("schema") or {"doc_id": "id", "response_text": "text"}
        report = corpus_mod.load_corpus(self.root / "corpus.csv", schema=schema)
        census_path = self.root / "census.csv"
        postal_path = self.root / "postal_to_da.csv"
        if census_path.exists() and postal_path.exists():
            records, _ = join_census(
                report.records, load_postal_map(postal_path), load_census(census_path)
            )
            joined = [r for r in records if r.income is not None]
            if len(joined) >= 4:
                records = income_groups(records)
            if len({r.edu for r in records if r.edu is not None}) >= 2:
                records, _ = kmeans_education(records, k=2, seed=int(meta.get("seed", 0)))
        else:
            records = [
                CohortRecord(doc_id=r.doc_id, gender=r.gender, nationality=r.nationality)
                for r in report.records
            ]
        self._cohort_base = records
        return records

    def tables_json(self, facet_name: str, within_name: str | None,
                    snap_id: str | None) -> bytes:
        snap = snap_id or self.latest_snapshot()
        if snap is None:
            raise ProjectError(f"{self.project_id}: no assignment snapshot yet")
        key = (snap, facet_name, within_name or "")
        cached = self._tables_cache.get(key)
        if cached is not None:
            return cached
        meta = self.snapshot_meta(snap)
        topics = [(int(t), str(name)) for t, name in meta["topics"]]
        records = attach_topics(self.cohort_base(), self.snapshot_doc_topics(snap))
        facet = FACETS[facet_name]()
        if within_name:
            tables = nested_difference_tables(records, topics, facet, FACETS[within_name]())
        else:
            tables = [difference_table(records, topics, facet)]
        payload = json_compact({
            "snapshot": snap,
            "facet": facet_name,
            "within": within_name,
            "legend": LEGEND,
            "tables": [_table_obj(t) for t in tables],
        }).encode("utf-8")
        self._tables_cache[key] = payload
        return payload


def _table_obj(table: DiffTable) -> dict[str, Any]:
    return {
        "facet": table.facet,
        "within": list(table.within) if table.within else None,
        "groups": list(table.groups),
        "group_sizes": table.group_sizes,
        "rows": [
            {
                "topic_id": row.topic_id,
                "topic_name": row.topic_name,
                "mentions": row.mentions,
                "proportions": row.proportions,
                "cells": [
                    {
                        "pair": list(cell.pair),
                        "difference": cell.difference,
                        "z": cell.test.statistic,
                        "p": cell.test.p_value,
                        "stars": cell.test.stars,
                        "degenerate": cell.test.degenerate,
                    }
                    for cell in row.cells
                ],
            }
            for row in table.rows
        ],
    }


# ---------------------------------------------------------------------------
# request bodies
# ---------------------------------------------------------------------------

class SpecUpdate(BaseModel):
    keywords: list[str] = Field(min_length=1)
    threshold: float
    base_version: int | None = None


class ChosenK(BaseModel):
    k: int = Field(ge=1)


# ---------------------------------------------------------------------------
# app factory
# ---------------------------------------------------------------------------

def _field_error(loc: list[Any], msg: str) -> HTTPException:
    return HTTPException(status_code=422, detail=[{"loc": loc, "msg": msg, "type": "value_error"}])


def create_app(data_dir: Path | str, ui_dir: Path | str | None = None) -> FastAPI:
    data_root = Path(data_dir)
    app = FastAPI(title="topicforge curation service", version="1.0")
    app.state.data_dir = data_root
    app.state.projects = {}

    def project(project_id: str) -> Project:
        proj = app.state.projects.get(project_id)
        if proj is None:
            root = data_root / project_id
            if not root.is_dir():
                raise HTTPException(status_code=404, detail=f"unknown project {project_id!r}")
            try:
                proj = Project(root)
            except ProjectError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            app.state.projects[project_id] = proj
        return proj

    def spec_or_404(proj: Project, topic_id: int) -> TopicSpec:
        spec = proj.specs.get(topic_id)
        if spec is None:
            raise HTTPException(status_code=404, detail=f"unknown topic {topic_id}")
        return spec

    @app.get(API_PREFIX + "/projects/{project_id}")
    def project_summary(project_id: str) -> dict[str, Any]:
        proj = project(project_id)
        return {
            "project_id": proj.project_id,
            "spec_version": proj.version,
            "topics": [s.topic_id for s in proj.ordered_specs()],
            "models": proj.model_ks(),
            "snapshots": proj.snapshot_ids(),
            "chosen_k": proj.chosen_k(),
            "corpus_sha256": proj.meta.get("corpus_sha256"),
        }

    @app.get(API_PREFIX + "/projects/{project_id}/coherence")
    def coherence(project_id: str) -> dict[str, Any]:
        proj = project(project_id)
        try:
            curve = proj.curve()
        except ProjectError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "points": [
                {"k": p.k, "mean_cv": p.mean_cv, "std_cv": p.std_cv, "error": p.error}
                if p.error is None else
                {"k": p.k, "mean_cv": None, "std_cv": None, "error": p.error}
                for p in curve.points
            ],
            "chosen_k": proj.chosen_k(),
        }

    @app.put(API_PREFIX + "/projects/{project_id}/coherence/chosen")
    def put_chosen_k(project_id: str, body: ChosenK) -> dict[str, Any]:
        proj = project(project_id)
        if body.k not in proj.model_ks():
            raise _field_error(["body", "k"], f"no fitted model for k={body.k}")
        proj.record_chosen_k(body.k)
        return {"k": body.k, "recorded": True}

    @app.get(API_PREFIX + "/projects/{project_id}/lda/{k}/topics")
    def lda_topics(project_id: str, k: int) -> dict[str, Any]:
        proj = project(project_id)
        try:
            model = proj.load_model(k)
        except ProjectError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        topics = []
        for t in range(model.config.k):
            ids = lda_mod.top_word_ids(model, t, 10)
            words = [
                {
                    "token": model.vocab.id_to_token[i] if model.vocab else str(i),
                    "phi": float(model.phi[t, i]),
                }
                for i in ids
            ]
            topics.append({"topic": t, "words": words})
        return {"k": k, "topics": topics}

    @app.get(API_PREFIX + "/projects/{project_id}/specs")
    def get_specs(project_id: str) -> dict[str, Any]:
        proj = project(project_id)
        return {
            "version": proj.version,
            "specs": [
                {
                    "topic_id": s.topic_id,
                    "name": s.name,
                    "keywords": s.keywords,
                    "threshold": s.threshold,
                    "version": proj.topic_versions[s.topic_id],
                }
                for s in proj.ordered_specs()
            ],
        }

    def validate_spec_fields(proj: Project, keywords: list[str], threshold: float) -> None:
        if not (-1.0 < threshold < 1.0):
            raise _field_error(["body", "threshold"],
                               f"threshold {threshold} outside the open interval (-1, 1)")
        for i, kw in enumerate(keywords):
            if not kw.strip():
                raise _field_error(["body", "keywords", i], "empty keyword")
            if proj.store.get(kw) is None:
                raise _field_error(["body", "keywords", i],
                                   f"keyword {kw!r} resolves to no vector")

    @app.put(API_PREFIX + "/projects/{project_id}/specs/{topic_id}")
    def put_spec(project_id: str, topic_id: int, body: SpecUpdate) -> dict[str, Any]:
        proj = project(project_id)
        old = spec_or_404(proj, topic_id)
        if body.base_version is not None and body.base_version != proj.topic_versions[topic_id]:
            raise HTTPException(
                status_code=409,
                detail={
                    "message": f"topic {topic_id} changed since version {body.base_version}",
                    "current_version": proj.topic_versions[topic_id],
                },
            )
        validate_spec_fields(proj, body.keywords, body.threshold)
        spec = TopicSpec(topic_id=topic_id, name=old.name,
                         keywords=list(body.keywords), threshold=body.threshold)
        topic_center(proj.store, spec)  # cache the new center eagerly
        version = proj.append_spec_event(spec)
        return {
            "topic_id": topic_id,
            "version": version,
            "spec": {"name": spec.name, "keywords": spec.keywords,
                     "threshold": spec.threshold},
        }

    @app.get(API_PREFIX + "/projects/{project_id}/specs/{topic_id}/preview")
    def preview(
        project_id: str,
        topic_id: int,
        sample: int = Query(default=20, ge=1, le=500),
        seed: int = Query(default=0),
        keywords: list[str] | None = Query(default=None),
        threshold: float | None = Query(default=None),
    ) -> dict[str, Any]:
        """Sampled sentences scored against the committed spec or an
        uncommitted draft passed via query params."""
        proj = project(project_id)
        committed = spec_or_404(proj, topic_id)
        draft_keywords = keywords if keywords is not None else committed.keywords
        draft_threshold = threshold if threshold is not None else committed.threshold
        if not draft_keywords:
            raise _field_error(["query", "keywords"], "empty keyword list")
        validate_spec_fields(proj, draft_keywords, draft_threshold)
        draft = TopicSpec(topic_id=topic_id, name=committed.name,
                          keywords=list(draft_keywords), threshold=draft_threshold)
        center = topic_center(proj.store, draft)

        candidates = []
        for doc in proj.tokenized:
            for idx, tokens in enumerate(doc.sentences):
                svec = sentence_vector(proj.store, tokens)
                if svec is None or float(np.linalg.norm(svec)) == 0.0:
                    continue
                candidates.append((doc.doc_id, idx, tokens, svec))
        rng = np.random.default_rng(seed)
        take = min(sample, len(candidates))
        chosen = [candidates[i] for i in rng.choice(len(candidates), size=take, replace=False)] \
            if candidates else []
        items = []
        for doc_id, idx, tokens, svec in chosen:
            sim = cosine_similarity(svec, center)
            items.append({
                "doc_id": doc_id,
                "sentence_index": idx,
                "tokens": list(tokens),
                "similarity": sim,
                "accepted": sim >= draft_threshold,
            })
        items.sort(key=lambda it: (-it["similarity"], it["doc_id"], it["sentence_index"]))
        return {
            "topic_id": topic_id,
            "threshold": draft_threshold,
            "keywords": list(draft_keywords),
            "draft": keywords is not None or threshold is not None,
            "sentences": items,
        }

    @app.post(API_PREFIX + "/projects/{project_id}/assignments", status_code=201)
    def post_assignments(project_id: str) -> dict[str, Any]:
        proj = project(project_id)
        if not proj.recompute_lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="assignment recompute already running")
        try:
            try:
                meta = proj.recompute_assignments()
            except TopicCenterError as exc:
                raise _field_error(["specs"], str(exc))
            return meta
        finally:
            proj.recompute_lock.release()

    @app.get(API_PREFIX + "/projects/{project_id}/tables")
    def tables(
        project_id: str,
        facet: str,
        within: str | None = Query(default=None),
        snapshot: str | None = Query(default=None),
    ) -> Response:
        proj = project(project_id)
        if facet not in FACETS:
            raise _field_error(["query", "facet"],
                               f"unknown facet {facet!r}; expected one of {sorted(FACETS)}")
        if within is not None and within not in FACETS:
            raise _field_error(["query", "within"],
                               f"unknown facet {within!r}; expected one of {sorted(FACETS)}")
        try:
            payload = proj.tables_json(facet, within, snapshot)
        except ProjectError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except CohortError as exc:
            raise _field_error(["query", "facet"], str(exc))
        return Response(content=payload, media_type="application/json")

    @app.get(API_PREFIX + "/projects/{project_id}/centers2d")
    def centers2d(project_id: str) -> dict[str, Any]:
        proj = project(project_id)
        try:
            specs = proj.ensure_centers()
        except TopicCenterError as exc:
            raise _field_error(["specs"], str(exc))
        coords = project_centers_2d([s.center for s in specs])
        return {
            "topics": [
                {"topic_id": s.topic_id, "name": s.name,
                 "x": float(coords[i, 0]), "y": float(coords[i, 1])}
                for i, s in enumerate(specs)
            ]
        }

    resolved_ui = ui_dir or os.environ.get("TOPICFORGE_UI_DIR")
    if resolved_ui and Path(resolved_ui).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(resolved_ui), html=True), name="ui")
    return app


# ---------------------------------------------------------------------------
# demo project
# ---------------------------------------------------------------------------

def seed_demo_project(
    data_dir: Path | str,
    project_id: str = "demo",
    seed: int = 7,
    n_per_group: int = 60,
) -> Path:
    """Build a ready-to-curate project from the synthetic cohort generator.

    Adds two hand-mixed borderline documents whose sentences score ~0.707
    against two topic centers, so threshold edits around 0.5-0.75 visibly
    flip them in previews.
    """
    root = Path(data_dir) / project_id
    root.mkdir(parents=True, exist_ok=True)
    cohort_corpus(root, seed=seed, n_per_group=n_per_group)

    specs = json.loads((root / "topics.json").read_text(encoding="utf-8"))["topics"]
    kw1 = specs[0]["keywords"][:2]
    kw2 = specs[1]["keywords"][:2]
    border_text = " ".join(kw1 + kw2) + "."
    with (root / "corpus.csv").open("a", encoding="utf-8", newline="") as fh:
        fh.write(f"border-0001,{border_text},male\n")
        fh.write(f"border-0002,{border_text},female\n")

    schema = {"doc_id": "id", "response_text": "text", "gender": "gender"}
    report = corpus_mod.load_corpus(root / "corpus.csv", schema=schema)
    tokenized, encoded, vocab, _ = corpus_mod.preprocess_corpus(report.records)
    corpus_mod.save_tokenized(tokenized, root / "tokenized.jsonl")
    corpus_mod.save_docs(encoded, root / "docs.jsonl")
    corpus_mod.save_vocabulary(vocab, root / "vocab.txt")

    (root / "models").mkdir(exist_ok=True)
    for k in (2, 3):
        config = lda_mod.LdaConfig(k=k, seed=seed + k, iterations=120, burn_in=40)
        model = lda_mod.fit(encoded, config, vocab)
        lda_mod.save_model(model, root / "models" / f"lda_k{k}.json")

    curve = k_sweep(encoded, vocab, k_values=[2, 3], base_seed=seed,
                    runs_per_k=1, iterations=60, burn_in=20, alpha=0.1)
    save_curve(curve, root / "curve.csv")

    log_lines = []
    for version, t in enumerate(specs, 1):
        log_lines.append(json_compact({
            "version": version,
            "topic_id": t["topic_id"],
            "name": t["name"],
            "keywords": t["keywords"],
            "threshold": t["threshold"],
        }))
    write_text(root / "specs.log", "\n".join(log_lines) + "\n")

    write_text(root / "project.json", json_compact({
        "project_id": project_id,
        "schema": schema,
        "seed": seed,
        "corpus_sha256": sha256_file(root / "corpus.csv"),
    }) + "\n")

    proj = Project(root)
    with proj.recompute_lock:
        proj.recompute_assignments()
    return root
