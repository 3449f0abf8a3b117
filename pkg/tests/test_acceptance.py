"""Acceptance criteria at full sample sizes.

Each test runs the corresponding verification suite, then re-derives the
criterion from the reported statistics at its stated tolerance.  A one-line
PASS/FAIL summary per criterion is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from cylstable.verify import run_suite

SEED = 20261015
RESULTS = {}


def run(criterion, suite, extra):
    t0 = time.perf_counter()
    rep = run_suite(suite, SEED)
    elapsed = time.perf_counter() - t0
    problems = list(rep.failures())
    try:
        extra(rep, elapsed)
    except AssertionError as exc:
        problems.append(str(exc) or "independent re-check failed")
    ok = not problems
    line = f"criterion {criterion:2d} [{suite}]: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s)"
    if problems:
        line += " " + "; ".join(problems)
    RESULTS[criterion] = line
    print(line)
    assert ok, line


def _sampler(rep, elapsed):
    for a in (0.5, 1.0, 1.5):
        assert rep.statistics[f"charfn_dev_alpha{a}"] < 0.005, f"alpha={a} charfn deviation"
    assert rep.parameters["n"] == 10**6
    assert elapsed < 30, f"runtime {elapsed:.1f}s >= 30s"


def _radonified(rep, elapsed):
    devs = rep.statistics["deviations"]
    assert len(devs) == 20 and max(devs) < 0.01, "radonified deviation"
    assert rep.parameters["n"] == 10**6 and rep.parameters["d_G"] == rep.parameters["d_H"] == 4
    assert elapsed < 120, f"runtime {elapsed:.1f}s >= 120s"


def _gamma_ratio(rep, elapsed):
    for n in (1, 2, 3, 8):
        for a in (0.5, 1.0, 1.5):
            s = rep.statistics[f"n{n}_alpha{a}"]
            exact = (math.gamma(n / 2) * math.gamma((1 + a) / 2)
                     / (math.gamma(0.5) * math.gamma((n + a) / 2)))
            assert s["exact"] == pytest.approx(exact, rel=1e-12)
            assert abs(s["mc"] - exact) <= 3 * s["stderr"] + 1e-15, f"n={n} alpha={a}"
    assert rep.statistics["n2_alpha1.0"]["exact"] == pytest.approx(2 / math.pi, rel=1e-14)


def _hs_lower_bound(rep, elapsed):
    assert rep.parameters["n_ops"] == 100
    for a in (0.5, 1.0, 1.5):
        assert rep.statistics[f"min_relative_slack_alpha{a}"] >= 0, f"alpha={a} bound violated"


def _modular(rep, elapsed):
    rel = rep.statistics["relative_differences"]
    assert len(rel) == 20 and max(rel) < 0.02, "modular relative difference"


def _integrability(rep, elapsed):
    med = np.asarray(rep.statistics["positive_median_increments"])
    assert np.all(np.diff(med) < 0), "median increments not decreasing"
    assert med[-1] < 1e-2, "final median increment"
    assert rep.statistics["negative_flag_fraction"] >= 0.95, "non-Cauchy flag fraction"
    par = rep.parameters
    assert par["scenarios_negative"] == 200
    assert par["beta_pos"] * par["alpha"] == pytest.approx(0.5)
    assert par["beta_neg"] * par["alpha"] == pytest.approx(1.1)


def _equivalence(rep, elapsed):
    m = np.asarray(rep.statistics["sup_metric"])
    se = np.asarray(rep.statistics["stderr"])
    assert np.all(np.diff(rep.statistics["randomized_norm"]) < 0), "family norms not decreasing"
    assert np.all(m[1:] <= m[:-1] + 2 * np.hypot(se[1:], se[:-1])), "sup metric not decreasing"
    assert m[-1] < 0.05, "final sup metric"
    assert rep.negative_control["failed_as_expected"], "constant family did not fail"


def _decoupling(rep, elapsed):
    for r, se in rep.statistics["deterministic_ratios"]:
        assert abs(r - 1) <= 3 * se, "deterministic ratio"
    fwd, rev = rep.statistics["forward"], rep.statistics["reverse"]
    assert len(fwd) == len(rev) == 50
    assert max(max(fwd), max(rev)) <= 10, "adapted ratio constant"
    assert rep.statistics["constant"] == pytest.approx(max(max(fwd), max(rev)))


def _charfn(rep, elapsed):
    assert rep.parameters["n_inner"] == 10**5 and rep.parameters["n_outer"] == 20
    assert rep.statistics["worst_deviation"] < 0.01, "worst deviation"


def _dominated(rep, elapsed):
    n = rep.parameters["n_scenarios"]
    for key in ("prob_eps0.01", "power_law_prob_eps0.01"):
        p = np.asarray(rep.statistics[key])
        se = np.sqrt(p * (1 - p) / n)
        assert np.all(p[1:] <= p[:-1] + 2 * np.hypot(se[1:], se[:-1])), f"{key} not monotone"
        assert p[-1] < 0.05, f"{key} final"


def _maximal(rep, elapsed):
    cfgs = rep.statistics["configs"]
    assert len(cfgs) == 10
    for c in cfgs:
        assert c["p_sup"] <= c["rhs"] + 3 * c["stderr"], f"config {c}"


def _tail(rep, elapsed):
    assert rep.parameters["n"] == 10**6
    for a, s in rep.statistics["slopes"].items():
        assert abs(s + float(a)) <= 0.15, f"alpha={a} slope {s}"


CRITERIA = [
    (1, "sampler", _sampler),
    (2, "radonified", _radonified),
    (3, "gamma_ratio", _gamma_ratio),
    (4, "hs_lower_bound", _hs_lower_bound),
    (5, "modular", _modular),
    (6, "integrability", _integrability),
    (7, "equivalence", _equivalence),
    (8, "decoupling", _decoupling),
    (9, "charfn", _charfn),
    (10, "dominated", _dominated),
    (11, "maximal", _maximal),
    (12, "tail", _tail),
]


@pytest.mark.acceptance
@pytest.mark.parametrize("criterion, suite, extra", CRITERIA, ids=[f"c{c}_{s}" for c, s, _ in CRITERIA])
def test_criterion(criterion, suite, extra):
    run(criterion, suite, extra)
