import math
import os
from fractions import Fraction
from itertools import permutations

import pytest

import microclust as mc

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def test_subfactorial_is_a_python_int():
    assert mc.subfactorial(5) == 44
    assert mc.subfactorial(20) == 895014631192902121
    d = [1, 0]
    for n in range(2, 31):
        d.append((n - 1) * (d[-1] + d[-2]))
    assert mc.subfactorial(30) == d[30]


def test_match_pmf_against_enumeration():
    n = 5
    counts = [0] * (n + 1)
    for perm in permutations(range(n)):
        counts[sum(perm[i] == i for i in range(n))] += 1
    exact = mc.match_pmf_exact(n)
    assert exact == [Fraction(c, math.factorial(n)) for c in counts]
    assert mc.match_pmf(n) == pytest.approx([float(f) for f in exact])
    assert mc.expected_matches_exact(n) == 1


def test_expectation_bounds_bracket_one():
    lo, hi = mc.expected_matches_bounds(11)
    assert lo <= 1.0 <= hi
    assert hi - lo < 1e-3


def test_histogram_and_report():
    h = mc.NameHistogram.from_sizes([1, 2, 3])
    assert (h.records, h.names) == (6, 3)
    assert mc.prob_all_correct_exact(h) == Fraction(1, 12)
    report = mc.names_report(h, [0.1])
    assert report["expected_proportion_correct"] == pytest.approx(0.5)
    assert len(report["hoeffding_bounds"]) == 1


def test_name_files_and_join():
    table = mc.load_frequency_table(os.path.join(FIXTURES, "surnames_census.csv"))
    assert all(0 < p <= 1 for _, p in table)
    h = mc.independence_join([("A", 0.5), ("B", 0.5)], [("X", 0.5), ("Y", 0.5)], 8)
    assert h.buckets == [(2, 4)]
    with pytest.raises(mc.DataError, match=":3:"):
        mc.load_frequency_table(os.path.join(FIXTURES, "malformed_value.csv"))


def test_assignment():
    means = [[0.0], [1.0], [2.0]]
    assert mc.ml_assign([1.2], means, 0.5) == 1
    r = mc.run_assignment_sim(200, 0.5, replicates=3, seed=4)
    assert len(r["replicate_proportions"]) == 3
    assert 0.0 <= r["proportion_correct_mean"] <= 1.0
    again = mc.run_assignment_sim(200, 0.5, replicates=3, seed=4, jobs=2)
    assert again["replicate_proportions"] == r["replicate_proportions"]
    b = mc.correct_prob_bounds_p(1.0, 0.1, 10)
    assert 0.0 <= b["lower"] <= b["upper"] <= 1.0


def test_bayes_factor_matches_likelihood_ratio():
    w, s2, t2 = [0.2, 0.3, 0.5], 0.4, 9.0
    y = [0.3, -0.1]
    # Odds of y[0] alone in cluster 1 against joining y[1] in cluster 2.
    split = mc.log_config_likelihood(w, s2, t2, y, [1, 2], True)
    merged = mc.log_config_likelihood(w, s2, t2, y, [2, 2], True)
    assert mc.bayes_factor_merge(w, s2, t2, y[0], y[1], 1, 2) == pytest.approx(
        math.exp(split - merged)
    )
    assert mc.adjacency_l0([0, 0, 1], [0, 1, 1]) == 4
    sim = mc.run_bayes_sim(10, 0.5, sweeps=5, burn_in=1)
    assert len(sim["l0_samples"]) == 5


def test_population_estimate():
    # Two lists reduce to Lincoln-Petersen.
    est = mc.estimate_population([0, 30, 20, 10])
    assert est["n_hat"] == pytest.approx(40 * 30 / 10)
    b = mc.beta_b_for_unobserved_fraction(1.0, 3, 0.25)
    assert (b / (1 + b)) ** 3 == pytest.approx(0.25)
    s = mc.run_popest_sim(300, replicates=4, c=0.5)
    assert {"coverage", "prop_correct", "mse_n0"} <= set(s)
    with pytest.raises(ValueError):
        mc.estimate_population([0, 1, 2])
