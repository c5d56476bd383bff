"""Cohort tests: census joins, grouping rules, significance tests against
scipy oracles, and the table exports."""

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from topicforge.cohorts import (
    LEGEND,
    CensusRow,
    CohortError,
    CohortRecord,
    attach_topics,
    chi_square_independence,
    difference_table,
    facet_gender,
    facet_income,
    format_diff_report,
    income_groups,
    join_census,
    kmeans_education,
    load_census,
    load_postal_map,
    nested_difference_tables,
    save_diff_table,
    stars_for,
    two_proportion_test,
    welch_t_test,
)
from topicforge.corpus import RawRecord
from topicforge.synth import draw_mentions


# ---------------------------------------------------------------------------
# census rows and files
# ---------------------------------------------------------------------------

def test_census_row_validates_education_simplex():
    CensusRow("35010001", 30000.0, (0.25, 0.25, 0.25, 0.25))
    with pytest.raises(CohortError):
        CensusRow("x", 30000.0, (0.5, 0.5, 0.5, 0.5))
    with pytest.raises(CohortError):
        CensusRow("x", 30000.0, (-0.1, 0.6, 0.25, 0.25))
    with pytest.raises(CohortError):
        CensusRow("x", -1.0, (0.25, 0.25, 0.25, 0.25))


def write_census(tmp_path, rows):
    path = tmp_path / "census.csv"
    lines = ["da_id,avg_income,edu_high_school,edu_college,edu_bachelor,edu_advanced"]
    lines += rows
    path.write_text("\n".join(lines) + "\n")
    return path


def test_load_census_and_duplicate_error(tmp_path):
    path = write_census(tmp_path, ["1,30000,0.4,0.3,0.2,0.1", "2,50000,0.1,0.2,0.3,0.4"])
    table = load_census(path)
    assert table["1"].avg_income == 30000.0
    assert table["2"].edu == (0.1, 0.2, 0.3, 0.4)
    dup = write_census(tmp_path, ["1,30000,0.4,0.3,0.2,0.1", "1,1,0.4,0.3,0.2,0.1"])
    with pytest.raises(CohortError, match="duplicate da_id"):
        load_census(dup)


def test_load_postal_map_conflict(tmp_path):
    path = tmp_path / "map.csv"
    path.write_text("postal_code,da_id\nm5v 1a1,1\nK2P0B4,2\n")
    mapping = load_postal_map(path)
    assert mapping == {"M5V1A1": "1", "K2P0B4": "2"}
    path.write_text("postal_code,da_id\nM5V1A1,1\nM5V1A1,2\n")
    with pytest.raises(CohortError, match="two DAs"):
        load_postal_map(path)


def rec(doc_id, postal=None, nationality="domestic", gender="male"):
    return RawRecord(doc_id=doc_id, response_text="stub text",
                     gender=gender, nationality=nationality, postal_code=postal)


def test_join_census_reasons_and_no_drops():
    census = {"1": CensusRow("1", 30000.0, (0.4, 0.3, 0.2, 0.1))}
    postal = {"M5V1A1": "1", "K2P0B4": "999"}
    records = [
        rec("a", "M5V1A1"),                            # joined
        rec("b", "XXXXXX"),                            # unmapped postal
        rec("c", None),                                # no postal
        rec("d", "K2P0B4"),                            # DA missing from census
        rec("e", "M5V1A1", nationality="international"),  # never joined
    ]
    joined, report = join_census(records, postal, census)
    assert len(joined) == 5
    assert joined[0].income == 30000.0 and joined[0].edu == (0.4, 0.3, 0.2, 0.1)
    assert all(j.income is None for j in joined[1:])
    assert (report.joined, report.unmapped_postal, report.missing_postal,
            report.unknown_da, report.non_domestic) == (1, 1, 1, 1, 1)
    assert report.total_unjoined() == 4


def test_join_census_five_record_fixture():
    census = {str(i): CensusRow(str(i), 10000.0 * (i + 1), (0.4, 0.3, 0.2, 0.1))
              for i in range(4)}
    postal = {f"P{i}": str(i) for i in range(4)} | {"P4": "missing"}
    records = [rec(f"d{i}", f"P{i}") for i in range(5)]
    joined, report = join_census(records, postal, census)
    assert report.joined == 4 and report.unknown_da == 1


# ---------------------------------------------------------------------------
# income grouping
# ---------------------------------------------------------------------------

def crec(doc_id, income=None, edu=None, gender="male", topics=frozenset()):
    return CohortRecord(doc_id=doc_id, gender=gender, nationality="domestic",
                        income=income, edu=edu, topics=frozenset(topics))


def test_income_quartiles_of_four():
    recs = [crec(str(i), income=v) for i, v in enumerate([10, 20, 30, 40])]
    groups = [r.income_group for r in income_groups(recs)]
    assert groups == ["low", "mid", "mid", "high"]


def test_income_groups_skip_missing_and_error_small():
    recs = [crec("a", 10), crec("b", 20), crec("c", None), crec("d", 30), crec("e", 40)]
    out = income_groups(recs)
    assert out[2].income_group is None
    with pytest.raises(CohortError):
        income_groups(recs[:3])


def test_identical_incomes_all_mid_with_warning():
    recs = [crec(str(i), income=5.0) for i in range(6)]
    with pytest.warns(UserWarning):
        out = income_groups(recs)
    assert all(r.income_group == "mid" for r in out)


def test_uniform_incomes_quarter_half_quarter():
    rng = np.random.default_rng(8)
    recs = [crec(str(i), income=float(v)) for i, v in enumerate(rng.uniform(1e4, 9e4, 1000))]
    out = income_groups(recs)
    counts = {g: sum(1 for r in out if r.income_group == g) for g in ("low", "mid", "high")}
    assert counts == {"low": 250, "mid": 500, "high": 250}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=4, max_size=60))
def test_income_grouping_monotone(incomes):
    recs = [crec(str(i), income=v) for i, v in enumerate(incomes)]
    if len(set(incomes)) == 1:
        return
    out = income_groups(recs)
    rank = {"low": 0, "mid": 1, "high": 2}
    ordered = sorted(out, key=lambda r: r.income)
    ranks = [rank[r.income_group] for r in ordered]
    assert ranks == sorted(ranks)


# ---------------------------------------------------------------------------
# k-means education clusters
# ---------------------------------------------------------------------------

def edu_cloud(center, n, rng, spread=0.02):
    pts = []
    for _ in range(n):
        v = np.clip(np.array(center) + rng.normal(0, spread, 4), 0.001, None)
        v = v / v.sum()
        pts.append(tuple(float(x) for x in v))
    return pts


def test_kmeans_recovers_two_separated_clouds():
    rng = np.random.default_rng(3)
    low = edu_cloud([0.55, 0.3, 0.1, 0.05], 40, rng)
    high = edu_cloud([0.1, 0.15, 0.45, 0.3], 40, rng)
    recs = [crec(f"l{i}", edu=e) for i, e in enumerate(low)]
    recs += [crec(f"h{i}", edu=e) for i, e in enumerate(high)]
    out, result = kmeans_education(recs, k=2, seed=0)
    assert all(r.edu_group == "low" for r in out[:40])
    assert all(r.edu_group == "high" for r in out[40:])
    for a, b in zip(result.objective_history, result.objective_history[1:]):
        assert b <= a + 1e-9


def test_kmeans_high_label_has_larger_degree_share():
    rng = np.random.default_rng(5)
    recs = [crec(f"a{i}", edu=e) for i, e in enumerate(edu_cloud([0.6, 0.2, 0.15, 0.05], 30, rng))]
    recs += [crec(f"b{i}", edu=e) for i, e in enumerate(edu_cloud([0.05, 0.15, 0.4, 0.4], 30, rng))]
    _, result = kmeans_education(recs, k=2, seed=11)
    hi = result.cluster_names.index("high")
    lo = result.cluster_names.index("low")
    share = result.centroids[:, 2] + result.centroids[:, 3]
    assert share[hi] > share[lo]


def test_kmeans_k1_centroid_is_global_mean():
    recs = [crec("a", edu=(0.4, 0.3, 0.2, 0.1)), crec("b", edu=(0.1, 0.2, 0.3, 0.4))]
    _, result = kmeans_education(recs, k=1, seed=0)
    assert np.allclose(result.centroids[0], [0.25, 0.25, 0.25, 0.25], atol=1e-12)


def test_kmeans_duplicated_points_same_clustering():
    rng = np.random.default_rng(9)
    base = [crec(f"x{i}", edu=e) for i, e in enumerate(
        edu_cloud([0.5, 0.3, 0.15, 0.05], 20, rng) + edu_cloud([0.1, 0.1, 0.4, 0.4], 20, rng))]
    doubled = base + [crec(f"y{i}", edu=r.edu) for i, r in enumerate(base)]
    out1, _ = kmeans_education(base, k=2, seed=4)
    out2, _ = kmeans_education(doubled, k=2, seed=4)
    assert [r.edu_group for r in out1] == [r.edu_group for r in out2[: len(base)]]
    assert [r.edu_group for r in out2[len(base):]] == [r.edu_group for r in out2[: len(base)]]


def test_kmeans_needs_k_distinct_vectors():
    recs = [crec(str(i), edu=(0.25, 0.25, 0.25, 0.25)) for i in range(5)]
    with pytest.raises(CohortError, match="distinct"):
        kmeans_education(recs, k=2, seed=0)
    with pytest.raises(CohortError):
        kmeans_education([crec("a")], k=1, seed=0)


# ---------------------------------------------------------------------------
# significance tests vs scipy oracles
# ---------------------------------------------------------------------------

def test_stars_legend_boundaries():
    assert stars_for(0.00999) == "***"
    assert stars_for(0.01) == "**"
    assert stars_for(0.049) == "**"
    assert stars_for(0.05) == "*"
    assert stars_for(0.099) == "*"
    assert stars_for(0.10) == ""
    assert stars_for(0.9) == ""


def test_two_proportion_equal_rates():
    res = two_proportion_test(30, 100, 60, 200)
    assert res.statistic == 0.0 and res.p_value == 1.0 and res.stars == ""


def test_two_proportion_antisymmetry():
    a = two_proportion_test(198, 1000, 229, 1000)
    b = two_proportion_test(229, 1000, 198, 1000)
    assert a.statistic == -b.statistic
    assert a.p_value == b.p_value


def test_two_proportion_table3_shape_fixture():
    res = two_proportion_test(198, 1000, 229, 1000)
    pooled = 427 / 2000
    z = (0.198 - 0.229) / math.sqrt(pooled * (1 - pooled) * (2 / 1000))
    assert res.statistic == pytest.approx(z, abs=1e-12)
    assert res.p_value == pytest.approx(2 * scipy.stats.norm.sf(abs(z)), abs=1e-9)


def test_two_proportion_degenerate_pool():
    for x in (0, 100):
        res = two_proportion_test(x, 100, x, 100)
        assert res.degenerate and res.p_value == 1.0 and res.stars == ""


def test_two_proportion_unpooled_flag():
    pooled = two_proportion_test(30, 100, 50, 250)
    unpooled = two_proportion_test(30, 100, 50, 250, pooled=False)
    p1, p2 = 0.3, 0.2
    se = math.sqrt(p1 * (1 - p1) / 100 + p2 * (1 - p2) / 250)
    assert unpooled.statistic == pytest.approx((p1 - p2) / se, abs=1e-12)
    assert pooled.statistic != unpooled.statistic


def test_two_proportion_scipy_fuzz():
    rng = np.random.default_rng(13)
    for _ in range(300):
        n1, n2 = int(rng.integers(2, 500)), int(rng.integers(2, 500))
        x1, x2 = int(rng.integers(0, n1 + 1)), int(rng.integers(0, n2 + 1))
        res = two_proportion_test(x1, n1, x2, n2)
        if res.degenerate:
            assert x1 + x2 in (0, n1 + n2)
            continue
        pooled = (x1 + x2) / (n1 + n2)
        z = (x1 / n1 - x2 / n2) / math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
        assert res.statistic == pytest.approx(z, abs=1e-10)
        assert res.p_value == pytest.approx(2 * scipy.stats.norm.sf(abs(z)), abs=1e-8)


def test_welch_identical_samples():
    res = welch_t_test(5.0, 1.0, 30, 5.0, 1.0, 30)
    assert res.statistic == 0.0 and res.p_value == 1.0 and res.stars == ""


def test_welch_equal_n_equal_sd_df_closed_form():
    res = welch_t_test(2.0, 1.3, 5, 2.5, 1.3, 5)
    assert res.df == 8.0
    res17 = welch_t_test(2.0, 0.7, 17, 2.5, 0.7, 17)
    assert res17.df == 32.0


def test_welch_zero_variance_cases():
    same = welch_t_test(3.0, 0.0, 5, 3.0, 0.0, 7)
    assert same.statistic == 0.0 and same.p_value == 1.0
    diff = welch_t_test(4.0, 0.0, 5, 3.0, 0.0, 7)
    assert diff.degenerate and diff.statistic == math.inf and diff.p_value == 0.0
    assert diff.stars == "***"


def test_welch_scipy_fuzz():
    rng = np.random.default_rng(21)
    for _ in range(300):
        n1, n2 = int(rng.integers(2, 400)), int(rng.integers(2, 400))
        m1, m2 = rng.normal(0, 5), rng.normal(0, 5)
        s1, s2 = rng.uniform(0.1, 4), rng.uniform(0.1, 4)
        res = welch_t_test(m1, s1, n1, m2, s2, n2)
        ref = scipy.stats.ttest_ind_from_stats(m1, s1, n1, m2, s2, n2, equal_var=False)
        assert res.statistic == pytest.approx(ref.statistic, abs=1e-10)
        assert res.p_value == pytest.approx(ref.pvalue, abs=1e-8)
        assert min(n1, n2) - 1 <= res.df <= n1 + n2 - 2 + 1e-9


def test_welch_df_bounds_property():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n1, n2 = int(rng.integers(2, 50)), int(rng.integers(2, 50))
        res = welch_t_test(0.0, rng.uniform(0.01, 9), n1, 1.0, rng.uniform(0.01, 9), n2)
        assert min(n1, n2) - 1 - 1e-9 <= res.df <= n1 + n2 - 2 + 1e-9


def test_chi2_hand_fixture():
    res = chi_square_independence([[10, 20], [20, 10]])
    assert res.statistic == pytest.approx(100 / 15, abs=1e-12)
    assert res.df == 1.0
    ref = scipy.stats.chi2_contingency([[10, 20], [20, 10]], correction=False)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-10)


def test_chi2_independence_outer_product_zero():
    table = np.outer([10, 30], [2, 5, 3])
    res = chi_square_independence(table)
    assert res.statistic == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == 1.0 and res.stars == ""


def test_chi2_transpose_invariance_and_nonneg():
    rng = np.random.default_rng(6)
    for _ in range(100):
        table = rng.integers(1, 60, size=(rng.integers(2, 5), rng.integers(2, 5)))
        a = chi_square_independence(table)
        b = chi_square_independence(table.T)
        assert a.statistic == pytest.approx(b.statistic, rel=1e-12)
        assert a.statistic >= 0
        assert a.df == b.df


def test_chi2_zero_row_or_column_named():
    with pytest.raises(CohortError, match="row 1"):
        chi_square_independence([[1, 2], [0, 0]])
    with pytest.raises(CohortError, match="column 0"):
        chi_square_independence([[0, 2], [0, 3]])


def test_chi2_scipy_fuzz():
    rng = np.random.default_rng(31)
    for _ in range(200):
        table = rng.integers(1, 100, size=(int(rng.integers(2, 6)), int(rng.integers(2, 6))))
        res = chi_square_independence(table)
        ref = scipy.stats.chi2_contingency(table, correction=False)
        assert res.statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert res.p_value == pytest.approx(ref.pvalue, abs=1e-8)
        assert res.df == ref.dof


# ---------------------------------------------------------------------------
# difference tables
# ---------------------------------------------------------------------------

def cohort_from_mentions(seed=7, n=400, rates=None):
    rates = rates or {1: (0.55, 0.45), 2: (0.30, 0.30)}
    rows, truth = draw_mentions(seed=seed, n_per_group=n, rates=rates)
    recs = [CohortRecord(doc_id=d, gender=g, nationality="domestic", topics=frozenset(t))
            for d, g, t in rows]
    return recs, truth


def test_difference_table_matches_generator_truth():
    recs, truth = cohort_from_mentions()
    table = difference_table(recs, [(1, "A"), (2, "B")], facet_gender())
    assert table.groups == ("male", "female")
    for row in table.rows:
        m, f = truth.empirical(row.topic_id)
        assert row.proportions == {"male": m, "female": f}
        assert row.cells[0].difference == pytest.approx(m - f, abs=1e-15)


def test_difference_table_identical_groups_no_stars():
    recs = [CohortRecord(doc_id=f"m{i}", gender="male", topics=frozenset({1} if i < 3 else set()))
            for i in range(10)]
    recs += [CohortRecord(doc_id=f"f{i}", gender="female", topics=frozenset({1} if i < 3 else set()))
             for i in range(10)]
    table = difference_table(recs, [(1, "A")], facet_gender())
    row = table.rows[0]
    assert row.cells[0].difference == 0.0
    assert row.cells[0].test.stars == "" and row.cells[0].test.p_value == 1.0


def test_difference_table_percent_arithmetic():
    recs = [CohortRecord(doc_id=f"m{i}", gender="male",
                         topics=frozenset({1} if i < 1981 else set())) for i in range(10000)]
    recs += [CohortRecord(doc_id=f"f{i}", gender="female",
                          topics=frozenset({1} if i < 2290 else set())) for i in range(10000)]
    table = difference_table(recs, [(1, "A")], facet_gender())
    assert table.rows[0].cells[0].difference == pytest.approx(-0.0309, abs=1e-12)


def test_three_group_telescoping_identity():
    rng = np.random.default_rng(12)
    recs = []
    for g, n in (("low", 120), ("mid", 250), ("high", 130)):
        for i in range(n):
            topics = frozenset({1} if rng.random() < 0.4 else set())
            recs.append(CohortRecord(doc_id=f"{g}{i}", gender="male",
                                     nationality="domestic", income=1.0,
                                     income_group=g, topics=topics))
    table = difference_table(recs, [(1, "A")], facet_income())
    cells = {c.pair: c.difference for c in table.rows[0].cells}
    lm = cells[("low", "mid")]
    mh = cells[("mid", "high")]
    lh = cells[("low", "high")]
    assert (lm + mh) == pytest.approx(lh, abs=1e-12)


def test_difference_table_empty_group_errors():
    recs = [CohortRecord(doc_id="a", gender="male", topics=frozenset({1}))]
    with pytest.raises(CohortError, match="female"):
        difference_table(recs, [(1, "A")], facet_gender())


def test_nested_tables_split_by_outer_facet():
    recs, _ = cohort_from_mentions(seed=9, n=100)
    for i, r in enumerate(recs):
        r.income_group = ("low", "mid", "high")[i % 3]
    tables = nested_difference_tables(recs, [(1, "A")], facet_gender(), facet_income())
    assert [t.within for t in tables] == [
        ("income", "low"), ("income", "mid"), ("income", "high")]
    sizes = [sum(t.group_sizes.values()) for t in tables]
    assert sum(sizes) == len(recs)


def test_attach_topics_by_doc_id():
    recs = [CohortRecord(doc_id="a"), CohortRecord(doc_id="b")]
    out = attach_topics(recs, {"a": {1, 2}})
    assert out[0].topics == {1, 2} and out[1].topics == frozenset()


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def test_diff_table_csv_deterministic(tmp_path):
    recs, _ = cohort_from_mentions(seed=15, n=150)
    table = difference_table(recs, [(1, "A"), (2, "B")], facet_gender())
    p1 = save_diff_table(table, tmp_path / "t1.csv")
    p2 = save_diff_table(table, tmp_path / "t2.csv")
    assert p1.read_bytes() == p2.read_bytes()
    header = p1.read_text().splitlines()[0].split(",")
    assert header[:4] == ["topic_id", "topic_name", "n_male", "n_female"]
    assert "stars_male_female" in header


def test_report_contains_legend_verbatim():
    recs, _ = cohort_from_mentions(seed=16, n=150)
    table = difference_table(recs, [(1, "A")], facet_gender())
    text = format_diff_report([table])
    assert "***: α = 1%; **: α = 5%; *: α = 10%" in text
    assert LEGEND in text
    assert "Topic frequencies by gender" in text
