"""Phase Zero preprocessing: ingestion, sentence segmentation, tokenization,
phrase promotion, stopword removal, lemmatization, and bag-of-words encoding.

Pipeline order (fixed by contract):

1. segment text into sentences,
2. tokenize (lowercase, alphabetic runs, internal hyphens kept),
3. promote known bi/tri-gram phrases, longest match first,
4. remove stopwords,
5. lemmatize single-word tokens (phrase and hyphenated tokens pass through).

``preprocess`` produces string tokens (a ``TokenizedDoc``); ``encode`` maps
them onto a ``Vocabulary`` built over the whole corpus, yielding the id-level
``PreprocessedDoc`` used by the modeling stages.  Two stages because the
vocabulary is itself a function of the preprocessed corpus.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .util import json_compact, write_text

GENDERS = ("male", "female", "unspecified")
NATIONALITIES = ("domestic", "international")


class CorpusError(ValueError):
    pass


class DuplicateDocIdError(CorpusError):
    def __init__(self, doc_ids: Sequence[str]):
        self.doc_ids = list(doc_ids)
        super().__init__(f"duplicate doc_id values: {', '.join(self.doc_ids)}")


class SchemaError(CorpusError):
    pass


@dataclass
class RawRecord:
    doc_id: str
    response_text: str
    gender: str = "unspecified"
    nationality: str | None = None
    country: str | None = None
    postal_code: str | None = None
    program: str | None = None
    year: int | None = None
    empty_text: bool = False

    def __post_init__(self) -> None:
        if self.gender not in GENDERS:
            raise CorpusError(f"invalid gender {self.gender!r} for doc {self.doc_id!r}")
        if self.nationality is not None and self.nationality not in NATIONALITIES:
            raise CorpusError(
                f"invalid nationality {self.nationality!r} for doc {self.doc_id!r}"
            )
        self.empty_text = self.response_text.strip() == ""


@dataclass
class LoadReport:
    records: list[RawRecord]
    malformed: list[tuple[int, str]]  # (1-based data row number, reason)
    row_count: int
    empty_text_count: int


@dataclass
class TokenizedDoc:
    """Document after the full string-token pipeline (pre vocabulary)."""

    doc_id: str
    sentences: list[list[str]]

    def all_tokens(self) -> list[str]:
        return [t for sent in self.sentences for t in sent]


@dataclass
class PreprocessedDoc:
    doc_id: str
    sentences: list[list[int]]
    bow: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.bow:
            counts: Counter[int] = Counter()
            for sent in self.sentences:
                counts.update(sent)
            self.bow = dict(sorted(counts.items()))

    def total_tokens(self) -> int:
        return sum(self.bow.values())


@dataclass
class PhraseTable:
    phrases: dict[tuple[str, ...], str]
    min_count: int

    @staticmethod
    def empty() -> "PhraseTable":
        return PhraseTable(phrases={}, min_count=0)


class Vocabulary:
    """Bijective token<->id map with per-token document frequency.

    Ids are dense in [0, V) and assigned in lexicographic token order, so a
    given token set always produces the same ids.
    """

    def __init__(self, tokens: Sequence[str], doc_freq: Sequence[int]):
        if len(tokens) != len(doc_freq):
            raise CorpusError("tokens and doc_freq length mismatch")
        if not tokens:
            raise CorpusError("empty vocabulary")
        self.id_to_token: list[str] = list(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(tokens)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise CorpusError("duplicate tokens in vocabulary")
        self.doc_freq: list[int] = list(doc_freq)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id


# ---------------------------------------------------------------------------
# data files
# ---------------------------------------------------------------------------

def _read_list_file(path: Path | str) -> list[str]:
    """One entry per line, '#' comments and blank lines skipped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    out = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def _packaged(name: str) -> Path:
    return Path(str(resources.files("topicforge").joinpath("data").joinpath(name)))


def load_stopwords(path: Path | str | None = None) -> set[str]:
    return set(_read_list_file(path if path is not None else _packaged("stopwords.txt")))


def load_lemma_exceptions(path: Path | str | None = None) -> dict[str, str]:
    entries = _read_list_file(path if path is not None else _packaged("lemma_exceptions.txt"))
    table = {}
    for entry in entries:
        parts = entry.split()
        if len(parts) != 2:
            raise CorpusError(f"bad lemma exception line: {entry!r}")
        table[parts[0]] = parts[1]
    return table


def load_abbreviations(path: Path | str | None = None) -> set[str]:
    return set(
        a.lower().rstrip(".")
        for a in _read_list_file(path if path is not None else _packaged("abbreviations.txt"))
    )


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

_OPTIONAL_FIELDS = ("gender", "nationality", "country", "postal_code", "program", "year")


def load_corpus(path: Path | str, schema: Mapping[str, str]) -> LoadReport:
    """Load a UTF-8 CSV of raw responses.

    Args:
        path: CSV file with a header row (RFC-4180 quoting).
        schema: maps record fields to column names.  ``doc_id`` and
            ``response_text`` are required; gender, nationality, country,
            postal_code, program, and year are optional.

    Returns:
        LoadReport with one record per well-formed data row.  Malformed rows
        are collected with their row number and reason, never silently
        dropped.

    Raises:
        FileNotFoundError: missing file.
        SchemaError: a mapped column is absent from the header.
        DuplicateDocIdError: repeated doc_id values, all offenders listed.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    for fld in ("doc_id", "response_text"):
        if fld not in schema:
            raise SchemaError(f"schema must map required field {fld!r}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for fld, col in schema.items():
            if col not in header:
                raise SchemaError(f"mapped column {col!r} (field {fld!r}) not in header")
        records: list[RawRecord] = []
        malformed: list[tuple[int, str]] = []
        row_count = 0
        for row_num, row in enumerate(reader, start=1):
            row_count += 1
            try:
                records.append(_row_to_record(row, schema))
            except CorpusError as exc:
                malformed.append((row_num, str(exc)))

    seen: dict[str, int] = {}
    dupes: list[str] = []
    for rec in records:
        seen[rec.doc_id] = seen.get(rec.doc_id, 0) + 1
    dupes = [d for d, n in seen.items() if n > 1]
    if dupes:
        raise DuplicateDocIdError(sorted(dupes))

    empty = sum(1 for r in records if r.empty_text)
    return LoadReport(records=records, malformed=malformed, row_count=row_count, empty_text_count=empty)


def _row_to_record(row: Mapping[str, str], schema: Mapping[str, str]) -> RawRecord:
    def get(fld: str) -> str | None:
        col = schema.get(fld)
        if col is None:
            return None
        val = row.get(col)
        return val.strip() if val is not None else None

    doc_id = get("doc_id") or ""
    if not doc_id:
        raise CorpusError("missing doc_id")
    kwargs: dict = {"doc_id": doc_id, "response_text": get("response_text") or ""}
    gender = get("gender")
    kwargs["gender"] = gender.lower() if gender else "unspecified"
    nationality = get("nationality")
    kwargs["nationality"] = nationality.lower() if nationality else None
    for fld in ("country", "program"):
        val = get(fld)
        if val:
            kwargs[fld] = val
    postal = get("postal_code")
    if postal:
        kwargs["postal_code"] = postal.upper().replace(" ", "")
    year = get("year")
    if year:
        try:
            kwargs["year"] = int(year)
        except ValueError:
            raise CorpusError(f"non-integer year {year!r}")
    return RawRecord(**kwargs)


# ---------------------------------------------------------------------------
# sentence segmentation
# ---------------------------------------------------------------------------

_TERMINATORS = ".!?"


def segment_sentences(text: str, abbreviations: set[str] | None = None) -> list[str]:
    """Split text into sentences on '.', '!', '?' followed by whitespace/end.

    A '.' is not a boundary when the word before it is a known abbreviation
    ("St.", "Dr.", ...).  The concatenation of the returned sentences covers
    the input up to whitespace.  Empty input yields an empty list.
    """
    if abbreviations is None:
        abbreviations = load_abbreviations()
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            # absorb runs like "?!" or "..."
            j = i
            while j + 1 < n and text[j + 1] in _TERMINATORS:
                j += 1
            at_end = j + 1 >= n
            followed_by_space = not at_end and text[j + 1].isspace()
            if (at_end or followed_by_space) and not (
                ch == "." and j == i and _ends_with_abbreviation(text, i, abbreviations)
            ):
                sent = text[start : j + 1].strip()
                if sent:
                    sentences.append(sent)
                start = j + 1
            i = j + 1
        else:
            i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _ends_with_abbreviation(text: str, dot_index: int, abbreviations: set[str]) -> bool:
    j = dot_index - 1
    while j >= 0 and (text[j].isalpha() or text[j] == "."):
        j -= 1
    # "e.g." and "St." both normalize to their dotless lowercase form
    word = text[j + 1 : dot_index].lower().replace(".", "")
    return word in abbreviations


# ---------------------------------------------------------------------------
# tokenization / lemmatization
# ---------------------------------------------------------------------------

def tokenize(sentence: str) -> list[str]:
    """Lowercase alphabetic tokens; internal hyphens kept ("co-op")."""
    tokens: list[str] = []
    word: list[str] = []
    prev_alpha = False
    lowered = sentence.lower()
    n = len(lowered)
    for idx, ch in enumerate(lowered):
        if ch.isalpha():
            word.append(ch)
            prev_alpha = True
        elif ch == "-" and prev_alpha and idx + 1 < n and lowered[idx + 1].isalpha():
            word.append(ch)
            prev_alpha = False
        else:
            if word:
                tokens.append("".join(word))
                word = []
            prev_alpha = False
    if word:
        tokens.append("".join(word))
    return tokens


_VOWELS = set("aeiou")
# stems that regain a trailing 'e' after -ing/-ed stripping: solv -> solve
_E_RESTORE_FINALS = set("uvzc")
_DOUBLED_KEEP = {"ll", "ss", "ee", "oo", "ff", "zz"}


def lemmatize(token: str, exceptions: Mapping[str, str]) -> str:
    """Rule-based suffix lemmatizer.

    Plural nouns and -ing/-ed verb forms are reduced by rule; irregular
    forms and comparatives/superlatives come from the exceptions table.
    Tokens containing '-' or '_' (hyphenated words, promoted phrases) pass
    through untouched.

    The single-step rules are iterated to a fixed point ("weddings" ->
    "wedding" -> "wed"), which makes the function idempotent by
    construction.
    """
    prev = None
    cur = token
    for _ in range(6):
        if cur == prev:
            break
        prev = cur
        cur = _lemmatize_once(cur, exceptions)
    return cur


def _lemmatize_once(token: str, exceptions: Mapping[str, str]) -> str:
    if "_" in token or "-" in token:
        return token
    if token in exceptions:
        return exceptions[token]
    if len(token) <= 3:
        return token

    # plurals
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("es") and len(token) > 4:
        stem = token[:-2]
        if stem.endswith(("s", "x", "z", "ch", "sh")):
            return stem
        # "classes" handled above; generic -es nouns fall through to -s rule
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]

    # verb forms
    if token.endswith("ying") and len(token) > 5:
        return token[:-4] + "y"
    if token.endswith("ing") and len(token) > 5:
        return _fix_stem(token[:-3])
    if token.endswith("ied") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("ed") and len(token) > 4:
        return _fix_stem(token[:-2])
    return token


def _fix_stem(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-2:] not in _DOUBLED_KEEP:
        return stem[:-1]  # running -> runn -> run
    if stem and stem[-1] in _E_RESTORE_FINALS:
        return stem + "e"  # solv -> solve, continu -> continue
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"  # mak -> make, but visit/develop stay put
    return stem


def _measure(stem: str) -> int:
    """Number of vowel-to-consonant transitions (the Porter measure)."""
    m = 0
    prev_vowel = False
    for i, ch in enumerate(stem):
        is_vowel = ch in _VOWELS or (ch == "y" and i > 0 and stem[i - 1] not in _VOWELS)
        if prev_vowel and not is_vowel:
            m += 1
        prev_vowel = is_vowel
    return m


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    c2, v, c1 = stem[-3], stem[-2], stem[-1]
    return (
        c1 not in _VOWELS
        and c1 not in ("w", "x", "y")
        and v in _VOWELS
        and c2 not in _VOWELS
    )


# ---------------------------------------------------------------------------
# phrases
# ---------------------------------------------------------------------------

def build_phrase_table(
    tokenized_sentences: Iterable[Sequence[str]],
    min_count: int = 30,
    max_n: int = 3,
) -> PhraseTable:
    """Count 2..max_n-grams over pre-phrase token streams; keep those with
    corpus frequency >= min_count.  Counts are per occurrence (overlaps
    included) within sentences.
    """
    if max_n < 2 or max_n > 3:
        raise CorpusError("max_n must be 2 or 3")
    counts: Counter[tuple[str, ...]] = Counter()
    for sent in tokenized_sentences:
        for n in range(2, max_n + 1):
            for i in range(len(sent) - n + 1):
                counts[tuple(sent[i : i + n])] += 1
    phrases = {
        gram: "_".join(gram)
        for gram, c in sorted(counts.items())
        if c >= min_count
    }
    return PhraseTable(phrases=phrases, min_count=min_count)


def promote_phrases(tokens: Sequence[str], table: PhraseTable) -> list[str]:
    """Greedy left-to-right longest-match phrase promotion."""
    if not table.phrases:
        return list(tokens)
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 3 <= n and tuple(tokens[i : i + 3]) in table.phrases:
            out.append(table.phrases[tuple(tokens[i : i + 3])])
            i += 3
        elif i + 2 <= n and tuple(tokens[i : i + 2]) in table.phrases:
            out.append(table.phrases[tuple(tokens[i : i + 2])])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

def preprocess(
    record: RawRecord,
    stoplist: set[str],
    phrases: PhraseTable,
    lemma_exceptions: Mapping[str, str] | None = None,
    abbreviations: set[str] | None = None,
) -> TokenizedDoc:
    """Run the full string-token pipeline on one record.

    Sentences that end up empty (all stopwords) are retained as empty token
    lists so sentence indices stay aligned with the segmented text.
    """
    if lemma_exceptions is None:
        lemma_exceptions = load_lemma_exceptions()
    sentences = []
    for sent in segment_sentences(record.response_text, abbreviations):
        tokens = promote_phrases(tokenize(sent), phrases)
        tokens = [t for t in tokens if t not in stoplist]
        tokens = [lemmatize(t, lemma_exceptions) for t in tokens]
        sentences.append(tokens)
    return TokenizedDoc(doc_id=record.doc_id, sentences=sentences)


def build_vocabulary(
    docs: Sequence[TokenizedDoc],
    min_df: int = 1,
    max_df_ratio: float = 1.0,
) -> Vocabulary:
    """Vocabulary over preprocessed docs with document-frequency filtering.

    A token is kept iff min_df <= df <= max_df_ratio * len(docs); both
    boundaries are inclusive.  Ids follow lexicographic token order.
    """
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc.all_tokens()))
    limit = max_df_ratio * len(docs)
    kept = sorted(t for t, d in df.items() if d >= min_df and d <= limit)
    if not kept:
        raise CorpusError("vocabulary is empty after frequency filtering")
    return Vocabulary(kept, [df[t] for t in kept])


def encode(doc: TokenizedDoc, vocab: Vocabulary) -> PreprocessedDoc:
    """Map string tokens to vocabulary ids; out-of-vocabulary tokens drop."""
    sentences = [
        [vocab.token_to_id[t] for t in sent if t in vocab.token_to_id]
        for sent in doc.sentences
    ]
    return PreprocessedDoc(doc_id=doc.doc_id, sentences=sentences)


def preprocess_corpus(
    records: Sequence[RawRecord],
    stoplist: set[str] | None = None,
    lemma_exceptions: Mapping[str, str] | None = None,
    abbreviations: set[str] | None = None,
    min_count: int = 30,
    max_n: int = 3,
    min_df: int = 1,
    max_df_ratio: float = 1.0,
) -> tuple[list[TokenizedDoc], list[PreprocessedDoc], Vocabulary, PhraseTable]:
    """Whole Phase Zero: phrase scan, per-doc pipeline, vocabulary, encoding."""
    if stoplist is None:
        stoplist = load_stopwords()
    if lemma_exceptions is None:
        lemma_exceptions = load_lemma_exceptions()
    if abbreviations is None:
        abbreviations = load_abbreviations()
    raw_sentences = [
        tokenize(sent)
        for rec in records
        for sent in segment_sentences(rec.response_text, abbreviations)
    ]
    table = build_phrase_table(raw_sentences, min_count=min_count, max_n=max_n)
    tokenized = [
        preprocess(rec, stoplist, table, lemma_exceptions, abbreviations) for rec in records
    ]
    vocab = build_vocabulary(tokenized, min_df=min_df, max_df_ratio=max_df_ratio)
    encoded = [encode(doc, vocab) for doc in tokenized]
    return tokenized, encoded, vocab, table


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_docs(docs: Sequence[PreprocessedDoc], path: Path | str) -> Path:
    """One compact JSON object per line: doc_id, sentences, sorted bow pairs."""
    lines = []
    for doc in docs:
        obj = {
            "doc_id": doc.doc_id,
            "sentences": doc.sentences,
            "bow": [[w, c] for w, c in sorted(doc.bow.items())],
        }
        lines.append(json_compact(obj))
    return write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def load_docs(path: Path | str) -> list[PreprocessedDoc]:
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        docs.append(
            PreprocessedDoc(
                doc_id=obj["doc_id"],
                sentences=[list(map(int, s)) for s in obj["sentences"]],
                bow={int(w): int(c) for w, c in obj["bow"]},
            )
        )
    return docs


def save_vocabulary(vocab: Vocabulary, path: Path | str) -> Path:
    lines = [f"{t} {d}" for t, d in zip(vocab.id_to_token, vocab.doc_freq)]
    return write_text(path, "\n".join(lines) + "\n")


def load_vocabulary(path: Path | str) -> Vocabulary:
    tokens: list[str] = []
    freqs: list[int] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        tok, df = line.rsplit(" ", 1)
        tokens.append(tok)
        freqs.append(int(df))
    return Vocabulary(tokens, freqs)


def save_tokenized(docs: Sequence[TokenizedDoc], path: Path | str) -> Path:
    """Sentence-level string tokens, one JSON object per line (for the
    embedding/assignment stages and the curation preview)."""
    lines = [
        json_compact({"doc_id": d.doc_id, "sentences": d.sentences}) for d in docs
    ]
    return write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def load_tokenized(path: Path | str) -> list[TokenizedDoc]:
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        docs.append(TokenizedDoc(doc_id=obj["doc_id"], sentences=obj["sentences"]))
    return docs
