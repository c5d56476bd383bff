"""Batch pipeline commands.

Every command is driven by one JSON config (checked into the run's output
directory by convention) plus a mandatory seed, and writes only under the
configured output directory, maintaining a manifest of artifact hashes.
Re-running a command over unchanged inputs rewrites byte-identical outputs.

Exit codes: 0 success, 1 config/validation failure (before any work), 2
runtime failure.  With --json, errors are emitted as a single JSON object
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from . import corpus as corpus_mod
from . import lda as lda_mod
from .assignment import assign_document_detailed, save_doc_topics, save_sentence_assignments
from .coherence import k_sweep, save_curve
from .cohorts import (
    FACETS,
    attach_topics,
    difference_table,
    income_groups,
    join_census,
    kmeans_education,
    load_census,
    load_postal_map,
    nested_difference_tables,
    save_diff_report,
    save_diff_table,
)
from .embedding import (
    compute_centers,
    load_topic_specs,
    load_vectors,
    project_centers_2d,
)
from .synth import cohort_corpus, planted_corpus, save_planted
from .util import fmt_float, json_compact, sha256_file, write_text


class CliValidationError(Exception):
    """Config or argument problem detected before any work started."""


class CliRuntimeError(Exception):
    """Failure while executing a validated command."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; usage errors are validation
        raise CliValidationError(message)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def load_config(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise CliValidationError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliValidationError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise CliValidationError("config must be a JSON object")
    if "seed" not in cfg:
        raise CliValidationError("config must set a seed (reproducibility is not optional)")
    if not isinstance(cfg["seed"], int):
        raise CliValidationError("seed must be an integer")
    if "out" not in cfg:
        raise CliValidationError("config must set an output directory under 'out'")
    cfg.setdefault("paths", {})
    return cfg


def _cfg_path(cfg: dict[str, Any], key: str, required_by: str) -> Path:
    value = cfg["paths"].get(key)
    if not value:
        raise CliValidationError(f"{required_by} requires paths.{key} in the config")
    p = Path(value)
    if not p.exists():
        raise CliValidationError(f"paths.{key}: file not found: {p}")
    return p


def _out_dir(cfg: dict[str, Any]) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stage_file(out: Path, name: str, producer: str) -> Path:
    p = out / name
    if not p.exists():
        raise CliValidationError(f"missing {p}; run the {producer} command first")
    return p


def _update_manifest(out: Path, artifacts: Sequence[Path]) -> None:
    manifest_path = out / "manifest.json"
    entries: dict[str, str] = {}
    if manifest_path.exists():
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    for art in artifacts:
        entries[str(art.relative_to(out))] = sha256_file(art)
    write_text(manifest_path, json_compact(dict(sorted(entries.items()))) + "\n")


def _schema(cfg: dict[str, Any]) -> dict[str, str]:
    schema = cfg.get("schema")
    if not schema:
        raise CliValidationError("config must map corpus columns under 'schema'")
    return {str(k): str(v) for k, v in schema.items()}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_preprocess(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    corpus_path = _cfg_path(cfg, "corpus", "preprocess")
    schema = _schema(cfg)
    out = _out_dir(cfg)
    params = cfg.get("preprocess", {})

    report = corpus_mod.load_corpus(corpus_path, schema=schema)
    tokenized, encoded, vocab, phrases = corpus_mod.preprocess_corpus(
        report.records,
        min_count=int(params.get("min_count", 30)),
        max_n=int(params.get("max_n", 3)),
        min_df=int(params.get("min_df", 1)),
        max_df_ratio=float(params.get("max_df_ratio", 1.0)),
    )
    artifacts = [
        corpus_mod.save_tokenized(tokenized, out / "tokenized.jsonl"),
        corpus_mod.save_docs(encoded, out / "docs.jsonl"),
        corpus_mod.save_vocabulary(vocab, out / "vocab.txt"),
        write_text(out / "preprocess_report.json", json_compact({
            "rows": report.row_count,
            "records": len(report.records),
            "malformed": report.malformed,
            "empty_text": report.empty_text_count,
            "vocabulary_size": len(vocab),
            "phrases": sorted("_".join(p) for p in phrases.phrases),
        }) + "\n"),
    ]
    _update_manifest(out, artifacts)
    print(f"preprocessed {len(report.records)} records; vocabulary {len(vocab)}")


def cmd_sweep(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    out = _out_dir(cfg)
    docs_path = _stage_file(out, "docs.jsonl", "preprocess")
    vocab_path = _stage_file(out, "vocab.txt", "preprocess")
    params = cfg.get("sweep", {})
    k_min = int(params.get("k_min", 1))
    k_max = int(params.get("k_max", 30))
    if not (1 <= k_min <= k_max):
        raise CliValidationError(f"sweep range invalid: k_min={k_min}, k_max={k_max}")

    docs = corpus_mod.load_docs(docs_path)
    vocab = corpus_mod.load_vocabulary(vocab_path)
    curve = k_sweep(
        docs, vocab,
        k_values=range(k_min, k_max + 1),
        base_seed=int(cfg["seed"]),
        runs_per_k=int(params.get("runs_per_k", 3)),
        iterations=int(params.get("iterations", 1000)),
        burn_in=int(params.get("burn_in", 500)),
        alpha=params.get("alpha"),
        beta=float(params.get("beta", 0.01)),
        top_n=int(params.get("top_n", 10)),
        window_size=int(params.get("window_size", 110)),
    )
    artifacts = [save_curve(curve, out / "curve.csv")]
    _update_manifest(out, artifacts)
    best = curve.argmax_k()
    print(f"swept k={k_min}..{k_max}; argmax mean C_v at k={best}")


def cmd_fit(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    out = _out_dir(cfg)
    docs_path = _stage_file(out, "docs.jsonl", "preprocess")
    vocab_path = _stage_file(out, "vocab.txt", "preprocess")
    params = cfg.get("lda", {})
    k = args.k if args.k is not None else params.get("k")
    if k is None:
        raise CliValidationError("fit needs --k or lda.k in the config")
    config = lda_mod.LdaConfig(
        k=int(k),
        seed=int(cfg["seed"]),
        alpha=params.get("alpha"),
        beta=float(params.get("beta", 0.01)),
        iterations=int(params.get("iterations", 1000)),
        burn_in=int(params.get("burn_in", 500)),
    )
    docs = corpus_mod.load_docs(docs_path)
    vocab = corpus_mod.load_vocabulary(vocab_path)
    model = lda_mod.fit(docs, config, vocab)

    models_dir = out / "models"
    model_path = lda_mod.save_model(model, models_dir / f"lda_k{int(k)}.json")
    top_path = models_dir / f"topwords_k{int(k)}.csv"
    with top_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["topic", "rank", "token", "phi"])
        for t in range(model.config.k):
            for rank, wid in enumerate(lda_mod.top_word_ids(model, t, 10), 1):
                writer.writerow([t, rank, vocab.id_to_token[wid], fmt_float(model.phi[t, wid])])
    _update_manifest(out, [model_path, top_path])
    print(f"fitted k={k}; model at {model_path}")


def cmd_assign(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    out = _out_dir(cfg)
    tokenized_path = _stage_file(out, "tokenized.jsonl", "preprocess")
    vectors_path = _cfg_path(cfg, "vectors", "assign")
    specs_path = _cfg_path(cfg, "topic_specs", "assign")

    store = load_vectors(vectors_path)
    specs = load_topic_specs(specs_path)
    compute_centers(store, specs)
    docs = corpus_mod.load_tokenized(tokenized_path)

    workers = max(1, args.threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda d: assign_document_detailed(d, store, specs), docs))
    else:
        results = [assign_document_detailed(d, store, specs) for d in docs]
    doc_topics = [dt for dt, _ in results]
    rows = [r for _, sent_rows in results for r in sent_rows]

    assign_dir = out / "assignments"
    artifacts = [
        save_sentence_assignments(rows, assign_dir / "sentences.csv"),
        save_doc_topics(doc_topics, assign_dir / "doc_topics.csv"),
    ]
    _update_manifest(out, artifacts)
    accepted = sum(1 for r in rows if r.accepted)
    print(f"assigned {len(docs)} documents; {accepted}/{len(rows)} sentences accepted")


def _load_doc_topics_csv(path: Path) -> dict[str, frozenset[int]]:
    out: dict[str, frozenset[int]] = {}
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        doc_id, _, topics = line.partition(",")
        out[doc_id] = frozenset(int(t) for t in topics.split(";") if t)
    return out


def cmd_analyze(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    if args.facet not in FACETS:
        raise CliValidationError(f"unknown facet {args.facet!r}; expected one of {sorted(FACETS)}")
    if args.within is not None and args.within not in FACETS:
        raise CliValidationError(f"unknown facet {args.within!r}; expected one of {sorted(FACETS)}")
    out = _out_dir(cfg)
    corpus_path = _cfg_path(cfg, "corpus", "analyze")
    specs_path = _cfg_path(cfg, "topic_specs", "analyze")
    doc_topics_path = _stage_file(out, "assignments/doc_topics.csv", "assign")

    report = corpus_mod.load_corpus(corpus_path, schema=_schema(cfg))
    census_value = cfg["paths"].get("census")
    postal_value = cfg["paths"].get("postal_map")
    if census_value and postal_value:
        records, join_report = join_census(
            report.records,
            load_postal_map(_cfg_path(cfg, "postal_map", "analyze")),
            load_census(_cfg_path(cfg, "census", "analyze")),
        )
        if sum(1 for r in records if r.income is not None) >= 4:
            records = income_groups(records)
        if len({r.edu for r in records if r.edu is not None}) >= 2:
            records, _ = kmeans_education(records, k=2, seed=int(cfg["seed"]))
    else:
        from .cohorts import CohortRecord

        records = [
            CohortRecord(doc_id=r.doc_id, gender=r.gender, nationality=r.nationality)
            for r in report.records
        ]

    records = attach_topics(records, _load_doc_topics_csv(doc_topics_path))
    topics = [(s.topic_id, s.name) for s in load_topic_specs(specs_path)]
    facet = FACETS[args.facet]()
    if args.within:
        tables = nested_difference_tables(records, topics, facet, FACETS[args.within]())
        stem = f"{args.facet}_within_{args.within}"
    else:
        tables = [difference_table(records, topics, facet)]
        stem = args.facet

    tables_dir = out / "tables"
    artifacts = []
    for table in tables:
        suffix = f"_{table.within[1]}" if table.within else ""
        artifacts.append(save_diff_table(table, tables_dir / f"{stem}{suffix}.csv"))
    artifacts.append(save_diff_report(tables, tables_dir / f"{stem}_report.txt"))
    _update_manifest(out, artifacts)
    print(f"analyzed facet={args.facet}" + (f" within={args.within}" if args.within else "")
          + f"; {len(tables)} table(s) under {tables_dir}")


def cmd_centers2d(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    out = _out_dir(cfg)
    store = load_vectors(_cfg_path(cfg, "vectors", "centers2d"))
    specs = load_topic_specs(_cfg_path(cfg, "topic_specs", "centers2d"))
    compute_centers(store, specs)
    coords = project_centers_2d([s.center for s in specs])
    path = out / "centers2d.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["topic_id", "name", "x", "y"])
        for i, s in enumerate(specs):
            writer.writerow([s.topic_id, s.name, fmt_float(coords[i, 0]), fmt_float(coords[i, 1])])
    _update_manifest(out, [path])
    print(f"projected {len(specs)} centers to {path}")


def cmd_serve(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    from .service import create_app

    service_cfg = cfg.get("service", {})
    data_dir = Path(service_cfg.get("data_dir") or cfg["out"])
    if not data_dir.is_dir():
        raise CliValidationError(f"service data dir not found: {data_dir}")
    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise CliValidationError(f"--listen must be HOST:PORT, got {args.listen!r}")
    app = create_app(data_dir, ui_dir=service_cfg.get("ui_dir"))

    import uvicorn

    uvicorn.run(app, host=host, port=int(port_text), log_level="info")


def cmd_synth(cfg: dict[str, Any], args: argparse.Namespace) -> None:
    out = _out_dir(cfg)
    params = dict(cfg.get("synth", {}))
    kind = params.pop("kind", "cohort")
    seed = int(cfg["seed"])
    if kind == "cohort":
        rates_raw = params.pop("rates", None)
        rates = {int(k): (float(v[0]), float(v[1])) for k, v in rates_raw.items()} \
            if rates_raw else None
        cohort_corpus(
            out, seed=seed,
            n_per_group=int(params.pop("n_per_group", 2000)),
            rates=rates,
            keywords_per_topic=int(params.pop("keywords_per_topic", 4)),
            dim_per_topic=int(params.pop("dim_per_topic", 5)),
        )
        names = ["corpus.csv", "vectors.txt", "topics.json", "expected.json"]
    elif kind == "planted":
        corpus = planted_corpus(
            seed=seed,
            n_topics=int(params.pop("n_topics", 5)),
            words_per_topic=int(params.pop("words_per_topic", 20)),
            n_docs=int(params.pop("n_docs", 500)),
            doc_len=int(params.pop("doc_len", 100)),
            dirichlet=float(params.pop("dirichlet", 0.5)),
        )
        save_planted(corpus, out)
        names = ["docs.jsonl", "vocab.txt", "planted_phi.json"]
    else:
        raise CliValidationError(f"synth.kind must be 'cohort' or 'planted', got {kind!r}")
    if params:
        raise CliValidationError(f"unknown synth parameters: {sorted(params)}")
    _update_manifest(out, [out / n for n in names])
    print(f"synthesized {kind} fixture under {out}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

COMMANDS = {
    "preprocess": cmd_preprocess,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "assign": cmd_assign,
    "analyze": cmd_analyze,
    "centers2d": cmd_centers2d,
    "serve": cmd_serve,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topicforge", description="Motivation-topic pipeline")
    parser.add_argument("--json", action="store_true",
                        help="emit errors as JSON on stderr")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker-thread cap for parallelizable stages")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the run's JSON config")
        return p

    add("preprocess", "tokenize, promote phrases, lemmatize, build the vocabulary")
    add("sweep", "coherence curve over a k range")
    fit = add("fit", "fit one LDA model")
    fit.add_argument("--k", type=int, default=None, help="topic count (overrides lda.k)")
    add("assign", "sentence-to-topic assignment snapshot")
    analyze = add("analyze", "cohort difference tables")
    analyze.add_argument("--facet", required=True, help="gender|nationality|income|education")
    analyze.add_argument("--within", default=None, help="optional outer facet")
    add("centers2d", "project topic centers to 2-D")
    serve = add("serve", "run the curation HTTP service")
    serve.add_argument("--listen", default="127.0.0.1:8000", help="HOST:PORT")
    add("synth", "write synthetic fixtures (planted corpus or cohort effects)")
    return parser


def _emit_error(kind: str, message: str, as_json: bool) -> None:
    if as_json:
        sys.stderr.write(json_compact({"error": {"type": kind, "message": message}}) + "\n")
    else:
        sys.stderr.write(f"topicforge: {kind} error: {message}\n")


def main(argv: Sequence[str] | None = None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json" in raw  # best-effort for errors raised during parsing
    try:
        parser = build_parser()
        args = parser.parse_args(raw)
        as_json = args.json
        if args.threads < 1:
            raise CliValidationError("--threads must be >= 1")
        cfg = load_config(args.config)
        COMMANDS[args.command](cfg, args)
        return 0
    except CliValidationError as exc:
        _emit_error("validation", str(exc), as_json)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _emit_error("runtime", f"{type(exc).__name__}: {exc}", as_json)
        return 2


if __name__ == "__main__":
    sys.exit(main())
