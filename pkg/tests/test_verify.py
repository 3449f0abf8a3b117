import json

import numpy as np
import pytest

from cylstable.verify import (
    SCHEMA_VERSION, SUITES, Check, ExperimentReport, exp_equivalence, exp_hs_lower_bound, run_all,
    run_suite,
)


def test_report_requires_failing_negative_control():
    rep = ExperimentReport("x", {})
    rep.check("ok", True, 1.0, "anything")
    assert rep.passed
    rep.set_negative("control", [Check("c", True, 0.0, "t")])
    assert not rep.passed
    assert any("negative control" in f for f in rep.failures())
    rep.set_negative("control", [Check("c", False, 0.0, "t")])
    assert rep.passed


def test_failure_names_tolerance():
    rep = ExperimentReport("x", {})
    rep.check("dev", False, 0.2, "< 0.1")
    assert rep.failures() == ["dev: statistic 0.2 violates '< 0.1'"]


def test_json_is_safe_and_versioned():
    rep = ExperimentReport("x", {"a": np.float64(1.5), "b": np.arange(3)})
    rep.statistics["inf"] = float("inf")
    d = json.loads(rep.to_json())
    assert d["schema"] == SCHEMA_VERSION
    assert d["parameters"] == {"a": 1.5, "b": [0, 1, 2]}
    assert d["statistics"]["inf"] == "inf"
    assert "runtime" not in d


@pytest.mark.parametrize("name", sorted(SUITES))
def test_quick_suites_pass_and_are_deterministic(name):
    a = run_suite(name, seed=7, quick=True)
    assert a.passed, a.failures()
    assert a.negative_control is not None and a.negative_control["failed_as_expected"]
    b = run_suite(name, seed=7, quick=True)
    assert a.to_json() == b.to_json()


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_run_all_subset_timing():
    out = run_all(seed=1, quick=True, timing=True, names=["gamma_ratio"])
    assert out["passed"] and out["reports"][0]["runtime"] > 0


def test_hs_lower_bound_bound_and_inflated_control():
    rep = exp_hs_lower_bound(1.0, 5, 3, n_mc=4000, rank_one=True)
    assert rep.passed and rep.statistics["failures"] == 0
    assert rep.statistics["min_relative_slack"] >= 0
    assert not exp_hs_lower_bound(1.0, 5, 3, n_mc=4000, factor=4.0, rank_one=True).passed


def test_equivalence_scaled_family_shrinks_with_stable_scaling():
    from cylstable.catalog import default_operator
    from cylstable.grid import TimeGrid
    from cylstable.processes import AdaptedStepProcess

    grid = TimeGrid.uniform(1.0, 2)
    phi = default_operator(2, 2)
    family = [AdaptedStepProcess.constant(grid, 2.0 ** -n * phi) for n in range(6)]
    rep = exp_equivalence(1.5, family, 2, 11, n_scenarios=4000)
    m = np.asarray(rep.statistics["sup_metric"])
    assert np.all(np.diff(m) < 0)
    # E|X| is finite at alpha=1.5, so E[|cX| ^ 1] ~ c E|X| once the clipping rarely binds
    assert m[-1] / m[-2] == pytest.approx(0.5, abs=0.05)
