"""Census joins, income/education grouping, and the significance tests
behind the per-cohort comparison tables.

All special-function evaluation (normal, Student t, chi-square tails) lives
in topicforge.special; the tests here only wire statistics to p-values and
star annotations.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import NATIONALITIES, RawRecord
from .special import chi2_sf, normal_sf_two_sided, student_t_sf_two_sided
from .util import fmt_float, write_text


class CohortError(ValueError):
    pass


LEGEND = "***: α = 1%; **: α = 5%; *: α = 10%"

EDU_FIELDS = ("edu_high_school", "edu_college", "edu_bachelor", "edu_advanced")


def stars_for(p_value: float) -> str:
    """Two-sided significance stars; empty string means not significant."""
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.10:
        return "*"
    return ""


@dataclass(frozen=True)
class CensusRow:
    da_id: str
    avg_income: float
    edu: tuple[float, float, float, float]  # high_school, college, bachelor, advanced

    def __post_init__(self) -> None:
        if self.avg_income < 0:
            raise CohortError(f"DA {self.da_id!r}: negative avg_income")
        if len(self.edu) != 4 or any(e < 0 for e in self.edu):
            raise CohortError(f"DA {self.da_id!r}: education proportions must be >= 0")
        if abs(sum(self.edu) - 1.0) > 1e-6:
            raise CohortError(
                f"DA {self.da_id!r}: education proportions sum to {sum(self.edu)}, not 1"
            )


@dataclass
class CohortRecord:
    doc_id: str
    gender: str = "unspecified"
    nationality: str | None = None
    da_id: str | None = None
    income: float | None = None
    edu: tuple[float, float, float, float] | None = None
    income_group: str | None = None  # low | mid | high
    edu_group: str | None = None  # low | high
    topics: frozenset[int] = field(default_factory=frozenset)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float | None
    p_value: float
    stars: str
    degenerate: bool = False  # statistic undefined (e.g. pooled rate 0 or 1)


@dataclass
class JoinReport:
    joined: int = 0
    non_domestic: int = 0
    missing_postal: int = 0
    unmapped_postal: int = 0
    unknown_da: int = 0

    def total_unjoined(self) -> int:
        return self.non_domestic + self.missing_postal + self.unmapped_postal + self.unknown_da


# ---------------------------------------------------------------------------
# census ingestion and join
# ---------------------------------------------------------------------------

def load_census(path: Path | str) -> dict[str, CensusRow]:
    table: dict[str, CensusRow] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"da_id", "avg_income", *EDU_FIELDS} - set(reader.fieldnames or [])
        if missing:
            raise CohortError(f"census file missing columns: {sorted(missing)}")
        for rec in reader:
            da = rec["da_id"].strip()
            if da in table:
                raise CohortError(f"duplicate da_id {da!r} in census table")
            table[da] = CensusRow(
                da_id=da,
                avg_income=float(rec["avg_income"]),
                edu=tuple(float(rec[f]) for f in EDU_FIELDS),  # type: ignore[arg-type]
            )
    if not table:
        raise CohortError("empty census table")
    return table


def load_postal_map(path: Path | str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"postal_code", "da_id"} <= set(reader.fieldnames or []):
            raise CohortError("postal map needs postal_code and da_id columns")
        for rec in reader:
            code = rec["postal_code"].strip().upper().replace(" ", "")
            da = rec["da_id"].strip()
            if code in mapping and mapping[code] != da:
                raise CohortError(f"postal code {code!r} maps to two DAs")
            mapping[code] = da
    return mapping


def join_census(
    records: Sequence[RawRecord],
    postal_to_da: Mapping[str, str],
    census: Mapping[str, CensusRow],
) -> tuple[list[CohortRecord], JoinReport]:
    """Attach income and education vectors to domestic records by postal code.

    No record is dropped: failures leave the optional fields absent and are
    tallied by reason.  Non-domestic records are never joined, so downstream
    income/education groupings only ever cover the domestic cohort.
    """
    out: list[CohortRecord] = []
    report = JoinReport()
    for rec in records:
        cr = CohortRecord(doc_id=rec.doc_id, gender=rec.gender, nationality=rec.nationality)
        if rec.nationality != "domestic":
            report.non_domestic += 1
        elif not rec.postal_code:
            report.missing_postal += 1
        elif rec.postal_code not in postal_to_da:
            report.unmapped_postal += 1
        else:
            da = postal_to_da[rec.postal_code]
            row = census.get(da)
            if row is None:
                report.unknown_da += 1
            else:
                cr.da_id = da
                cr.income = row.avg_income
                cr.edu = row.edu
                report.joined += 1
        out.append(cr)
    return out, report


def attach_topics(
    records: Sequence[CohortRecord], topics_by_doc: Mapping[str, frozenset[int] | set[int]]
) -> list[CohortRecord]:
    return [
        replace(r, topics=frozenset(topics_by_doc.get(r.doc_id, frozenset())))
        for r in records
    ]


# ---------------------------------------------------------------------------
# grouping
# ---------------------------------------------------------------------------

def _nearest_rank(sorted_values: Sequence[float], q: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(q * n))
    return sorted_values[rank - 1]


def income_groups(records: Sequence[CohortRecord]) -> list[CohortRecord]:
    """Quartile income grouping over the joined applicants themselves.

    low: income <= Q1; high: income > Q3; mid otherwise.  Quartiles use the
    nearest-rank method, so cuts are always observed incomes.
    """
    incomes = sorted(r.income for r in records if r.income is not None)
    if len(incomes) < 4:
        raise CohortError(f"need >= 4 records with income, have {len(incomes)}")
    q1 = _nearest_rank(incomes, 0.25)
    q3 = _nearest_rank(incomes, 0.75)
    if incomes[0] == incomes[-1]:
        warnings.warn("all incomes identical; every record grouped mid", stacklevel=2)
        return [
            replace(r, income_group="mid" if r.income is not None else None)
            for r in records
        ]
    out = []
    for r in records:
        if r.income is None:
            out.append(replace(r, income_group=None))
        elif r.income <= q1:
            out.append(replace(r, income_group="low"))
        elif r.income > q3:
            out.append(replace(r, income_group="high"))
        else:
            out.append(replace(r, income_group="mid"))
    return out


@dataclass
class KMeansResult:
    centroids: np.ndarray  # k x d
    labels: np.ndarray  # index into centroids per input point
    objective_history: list[float]  # within-cluster sum of squares per Lloyd step
    cluster_names: list[str]  # per centroid index


def _kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 300) -> tuple[np.ndarray, np.ndarray, list[float]]:
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    # farthest-point seeding: random first centroid, then repeatedly take the
    # point with the largest distance to its nearest chosen centroid
    first = int(rng.integers(0, n))
    chosen = [first]
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    centroids = points[chosen].copy()

    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        dists = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)  # argmin ties -> lowest index
        history.append(float(np.sum(dists[np.arange(n), new_labels])))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                # re-seed an emptied cluster at the worst-served point
                worst = int(np.argmax(dists[np.arange(n), labels]))
                centroids[c] = points[worst]
    return centroids, labels, history


def kmeans_education(
    records: Sequence[CohortRecord], k: int = 2, seed: int = 0
) -> tuple[list[CohortRecord], KMeansResult]:
    """Cluster education vectors with Lloyd's algorithm.

    With k=2 the cluster whose centroid has the larger bachelor+advanced
    share is named "high", the other "low"; other k get positional names
    ordered by that share.
    """
    idx = [i for i, r in enumerate(records) if r.edu is not None]
    if len(idx) < k:
        raise CohortError(f"need >= {k} records with education vectors, have {len(idx)}")
    points = np.array([records[i].edu for i in idx], dtype=np.float64)
    if len(np.unique(points, axis=0)) < k:
        raise CohortError(f"fewer than {k} distinct education vectors")
    centroids, labels, history = _kmeans(points, k, seed)

    share = centroids[:, 2] + centroids[:, 3]  # bachelor + advanced
    order = np.argsort(share, kind="stable")
    if k == 2:
        names = ["", ""]
        names[order[0]] = "low"
        names[order[1]] = "high"
    elif k == 1:
        names = ["high"]
    else:
        names = [""] * k
        for rank, c in enumerate(order):
            names[c] = f"c{rank}"

    out = [replace(r, edu_group=None) for r in records]
    for j, i in enumerate(idx):
        out[i] = replace(out[i], edu_group=names[labels[j]])
    return out, KMeansResult(
        centroids=centroids, labels=labels, objective_history=history, cluster_names=names
    )


# ---------------------------------------------------------------------------
# significance tests
# ---------------------------------------------------------------------------

def two_proportion_test(
    x1: int, n1: int, x2: int, n2: int, pooled: bool = True
) -> TestResult:
    """Two-sided z-test for a difference of proportions (pooled by default)."""
    if n1 < 1 or n2 < 1:
        raise CohortError("trial counts must be >= 1")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise CohortError("success counts must lie in [0, n]")
    p1, p2 = x1 / n1, x2 / n2
    if pooled:
        pooled_rate = (x1 + x2) / (n1 + n2)
        var = pooled_rate * (1.0 - pooled_rate) * (1.0 / n1 + 1.0 / n2)
    else:
        var = p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2
    if var == 0.0:
        return TestResult(statistic=0.0, df=None, p_value=1.0, stars="", degenerate=True)
    z = (p1 - p2) / math.sqrt(var)
    p = normal_sf_two_sided(z)
    return TestResult(statistic=z, df=None, p_value=p, stars=stars_for(p))


def welch_t_test(
    mean1: float, sd1: float, n1: int, mean2: float, sd2: float, n2: int
) -> TestResult:
    """Welch's unequal-variance t-test with Satterthwaite degrees of freedom."""
    if n1 < 2 or n2 < 2:
        raise CohortError("each sample needs n >= 2")
    if sd1 < 0 or sd2 < 0:
        raise CohortError("standard deviations must be >= 0")
    v1, v2 = sd1 * sd1 / n1, sd2 * sd2 / n2
    se2 = v1 + v2
    if se2 == 0.0:
        df = float(n1 + n2 - 2)
        if mean1 == mean2:
            return TestResult(statistic=0.0, df=df, p_value=1.0, stars="")
        return TestResult(
            statistic=math.inf if mean1 > mean2 else -math.inf,
            df=df, p_value=0.0, stars="***", degenerate=True,
        )
    t = (mean1 - mean2) / math.sqrt(se2)
    df = se2 * se2 / (v1 * v1 / (n1 - 1) + v2 * v2 / (n2 - 1))
    p = student_t_sf_two_sided(t, df)
    return TestResult(statistic=t, df=df, p_value=p, stars=stars_for(p))


def chi_square_independence(table: Sequence[Sequence[float]] | np.ndarray) -> TestResult:
    """Pearson chi-square test of independence, no continuity correction."""
    obs = np.asarray(table, dtype=np.float64)
    if obs.ndim != 2:
        raise CohortError("contingency table must be 2-dimensional")
    if np.any(obs < 0):
        raise CohortError("counts must be >= 0")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    for i, s in enumerate(rows):
        if s == 0:
            raise CohortError(f"row {i} sums to zero")
    for j, s in enumerate(cols):
        if s == 0:
            raise CohortError(f"column {j} sums to zero")
    expected = np.outer(rows, cols) / obs.sum()
    stat = float(np.sum((obs - expected) ** 2 / expected))
    df = float((obs.shape[0] - 1) * (obs.shape[1] - 1))
    p = chi2_sf(stat, df)
    return TestResult(statistic=stat, df=df, p_value=p, stars=stars_for(p))


# ---------------------------------------------------------------------------
# difference tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Facet:
    """Named grouping of cohort records; order fixes the difference signs."""

    name: str
    order: tuple[str, ...]
    key: Callable[[CohortRecord], str | None]


def facet_gender() -> Facet:
    return Facet("gender", ("male", "female"),
                 lambda r: r.gender if r.gender in ("male", "female") else None)


def facet_nationality() -> Facet:
    return Facet("nationality", NATIONALITIES, lambda r: r.nationality)


def facet_income() -> Facet:
    return Facet("income", ("low", "mid", "high"), lambda r: r.income_group)


def facet_education() -> Facet:
    return Facet("education", ("low", "high"), lambda r: r.edu_group)


FACETS: dict[str, Callable[[], Facet]] = {
    "gender": facet_gender,
    "nationality": facet_nationality,
    "income": facet_income,
    "education": facet_education,
}


@dataclass(frozen=True)
class DiffCell:
    pair: tuple[str, str]
    difference: float  # first-listed group minus second-listed
    test: TestResult


@dataclass(frozen=True)
class DiffRow:
    topic_id: int
    topic_name: str
    mentions: dict[str, int]
    proportions: dict[str, float]
    cells: tuple[DiffCell, ...]


@dataclass(frozen=True)
class DiffTable:
    facet: str
    groups: tuple[str, ...]
    group_sizes: dict[str, int]
    rows: tuple[DiffRow, ...]
    within: tuple[str, str] | None = None  # (outer facet, outer group value)


def _pairs(groups: tuple[str, ...]) -> list[tuple[str, str]]:
    if len(groups) == 2:
        return [(groups[0], groups[1])]
    # 3-group convention: adjacent pairs then the telescoped ends (L-M, M-H, L-H)
    return [(groups[0], groups[1]), (groups[1], groups[2]), (groups[0], groups[2])]


def difference_table(
    records: Sequence[CohortRecord],
    topics: Sequence[tuple[int, str]],
    facet: Facet,
    within: tuple[str, str] | None = None,
) -> DiffTable:
    """Per-topic mention proportions by facet group with pairwise z-tests."""
    if len(facet.order) not in (2, 3):
        raise CohortError("facet must define 2 or 3 groups")
    members: dict[str, list[CohortRecord]] = {g: [] for g in facet.order}
    for r in records:
        g = facet.key(r)
        if g in members:
            members[g].append(r)
    for g in facet.order:
        if not members[g]:
            raise CohortError(f"facet {facet.name!r}: group {g!r} is empty")
    sizes = {g: len(members[g]) for g in facet.order}
    rows: list[DiffRow] = []
    for topic_id, name in topics:
        mentions = {g: sum(1 for r in members[g] if topic_id in r.topics) for g in facet.order}
        props = {g: mentions[g] / sizes[g] for g in facet.order}
        cells = []
        for a, b in _pairs(facet.order):
            test = two_proportion_test(mentions[a], sizes[a], mentions[b], sizes[b])
            cells.append(DiffCell(pair=(a, b), difference=props[a] - props[b], test=test))
        rows.append(DiffRow(topic_id=topic_id, topic_name=name, mentions=mentions,
                            proportions=props, cells=tuple(cells)))
    return DiffTable(facet=facet.name, groups=facet.order, group_sizes=sizes,
                     rows=tuple(rows), within=within)


def nested_difference_tables(
    records: Sequence[CohortRecord],
    topics: Sequence[tuple[int, str]],
    facet: Facet,
    within: Facet,
) -> list[DiffTable]:
    """One inner-facet table per outer-facet group (interaction view)."""
    tables = []
    for g in within.order:
        subset = [r for r in records if within.key(r) == g]
        if not subset:
            raise CohortError(f"facet {within.name!r}: group {g!r} is empty")
        tables.append(difference_table(subset, topics, facet, within=(within.name, g)))
    return tables


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def save_diff_table(table: DiffTable, path: Path | str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ["topic_id", "topic_name"]
    header += [f"n_{g}" for g in table.groups]
    header += [f"prop_{g}" for g in table.groups]
    for a, b in _pairs(table.groups):
        header += [f"diff_{a}_{b}", f"z_{a}_{b}", f"p_{a}_{b}", f"stars_{a}_{b}"]
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in table.rows:
            rec: list[str] = [str(row.topic_id), row.topic_name]
            rec += [str(row.mentions[g]) for g in table.groups]
            rec += [fmt_float(row.proportions[g]) for g in table.groups]
            for cell in row.cells:
                rec += [fmt_float(cell.difference), fmt_float(cell.test.statistic),
                        fmt_float(cell.test.p_value), cell.test.stars]
            writer.writerow(rec)
    return out


def format_diff_report(tables: Sequence[DiffTable]) -> str:
    """Human-readable table block with percentages and the star legend."""
    lines: list[str] = []
    for table in tables:
        title = f"Topic frequencies by {table.facet}"
        if table.within:
            title += f" [{table.within[0]} = {table.within[1]}]"
        lines.append(title)
        sizes = ", ".join(f"{g}: n={table.group_sizes[g]}" for g in table.groups)
        lines.append(f"  ({sizes})")
        head = ["topic".ljust(24)] + [g.rjust(10) for g in table.groups]
        head += [f"{a}-{b}".rjust(14) for a, b in _pairs(table.groups)]
        lines.append("  " + "".join(head))
        for row in table.rows:
            cols = [row.topic_name[:24].ljust(24)]
            cols += [f"{row.proportions[g] * 100:9.2f}%" for g in table.groups]
            for cell in row.cells:
                cols.append(f"{cell.difference * 100:+10.2f}%{cell.test.stars:<3}")
            lines.append("  " + "".join(cols))
        lines.append("")
    lines.append(LEGEND)
    return "\n".join(lines) + "\n"


def save_diff_report(tables: Sequence[DiffTable], path: Path | str) -> Path:
    return write_text(path, format_diff_report(tables))
