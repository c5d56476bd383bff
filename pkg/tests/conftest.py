"""Shared pytest config: the acceptance gate reporting.

Tests marked ``@pytest.mark.acceptance(criterion=...)`` are the release
checklist; the terminal summary prints one PASS/FAIL line per criterion so a
full run ends with a readable gate, whatever else is in the session.
"""

import pytest

# gate order; the criterion strings in test_acceptance.py must match
CRITERIA = [
    "planted-topic recovery (fit --k 5: cosine >= 0.85 on >= 4/5 topics, < 60 s)",
    "lda invariants (per-sweep count conservation + normalization, bit-identical reruns)",
    "coherence sweep sanity (argmax in {4,5,6} on >= 4/5 trials; planted > random >= 95/100)",
    "geometry (cosine identities, mean invariance, svd oracle 1e-6, rank-2 distances 1e-9)",
    "assignment (exact-center always accepted, threshold monotone over 1000 sentences, 0.40 boundary)",
    "statistics oracles (z/t/chi2 vs reference 1e-8 x 1000, star boundaries, hand chi2, telescoping)",
    "cohort pipeline end-to-end (planted diff within 2 points and ***, null *** rate < 5%)",
    "k-means (exact cluster recovery, non-increasing objective, 'high' naming)",
    "format round-trips (vectors + docs byte-identical, duplicate doc_id named error)",
    "curation loop (keyword PUT moves preview sims, draft threshold flips borderline, legend verbatim, API needs no UI)",
]


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(criterion): release-gate test tied to one criterion line"
    )
    config._acceptance_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    criterion = marker.kwargs.get("criterion", item.name)
    results = item.config._acceptance_results
    if report.when == "call":
        results[criterion] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        # setup error/skip counts against the criterion; never mask it
        results[criterion] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    known = [c for c in CRITERIA if c in results]
    extra = [c for c in results if c not in CRITERIA]
    for criterion in known + sorted(extra):
        outcome = results[criterion]
        word = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
        terminalreporter.write_line(f"{word}  {criterion}")
