"""The self-verification registry itself: every probe green, fault injection
isolated, reruns deterministic."""

import pytest

from poisonlab.verify import REGISTRY, run_checks

FAST_SUBSET = [
    "core.atoms-sum",
    "core.hamming-metric",
    "learners.dist-simplex",
    "adversaries.scheme-budget",
    "analysis.vc-known",
    "experiments.budget-guard",
]


def test_registry_names_unique_and_namespaced():
    names = [name for name, _ in REGISTRY]
    assert len(names) == len(set(names))
    prefixes = {"core", "learners", "adversaries", "analysis", "experiments"}
    assert all(n.split(".", 1)[0] in prefixes for n in names)


def test_all_checks_pass():
    results = run_checks()
    failed = [r for r in results if not r.passed]
    assert len(results) == len(REGISTRY)
    assert not failed, "; ".join(f"{r.name}: {r.detail}" for r in failed)


def test_subset_run_is_deterministic():
    first = run_checks(names=FAST_SUBSET)
    second = run_checks(names=FAST_SUBSET)
    assert first == second
    assert [r.name for r in first] == FAST_SUBSET


def test_injected_fault_marks_only_its_target():
    results = run_checks(names=FAST_SUBSET, inject_fault="core.hamming-metric")
    by_name = {r.name: r for r in results}
    assert not by_name["core.hamming-metric"].passed
    assert by_name["core.hamming-metric"].detail == "injected fault"
    assert all(r.passed for r in results if r.name != "core.hamming-metric")


def test_unknown_check_name_rejected():
    with pytest.raises(ValueError):
        run_checks(names=["core.no-such-check"])
