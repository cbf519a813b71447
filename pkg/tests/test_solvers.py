import math

import numpy as np
import pytest

import nonoblivious.solvers as solvers
from nonoblivious.bits import popcount, to_mask
from nonoblivious.errors import DomainError, ScaleError
from nonoblivious.matroids import ExplicitMatroid, PartitionMatroid, UniformMatroid, all_bases
from nonoblivious.objectives import ExplicitOracle, random_monotone_submodular
from nonoblivious.potential import coefficient_table, g_exact, harmonic, sample_count
from nonoblivious.solvers import (
    ALGORITHMS,
    CONVERGED,
    ERROR,
    FALLBACK,
    SolveConfig,
    brute_force_opt,
    check_fg_inequality,
    curvature_guesses,
    fg_slack,
    greedy,
    nonoblivious_exact,
    nonoblivious_sampled,
    oblivious_local_search,
    partial_enumeration,
    rho,
    sampled_parameters,
    solve,
    unknown_curvature,
)


def additive(weights):
    n = len(weights)
    return ExplicitOracle(n, [sum(weights[j] for j in range(n) if i >> j & 1) for i in range(1 << n)])


def test_rho_values():
    assert rho(1.0) == pytest.approx(1 - 1 / math.e, abs=1e-15)
    assert rho(0.0) == 1.0
    assert rho(1e-10) == pytest.approx(1.0, abs=1e-9)
    grid = np.linspace(1e-6, 1, 2001)
    vals = [rho(float(c)) for c in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_rho_slope_bounded_by_half():
    grid = np.linspace(0.001, 1, 1000)
    for eps in (0.05, 0.3, 0.5):
        for c in grid:
            if c + eps <= 1:
                assert rho(float(c + eps)) >= rho(float(c)) - eps / 2


def test_greedy_examples():
    f = additive([3.0, 1.0, 2.0])
    assert greedy(UniformMatroid(3, 1), f.value) == 0b001
    m = PartitionMatroid(6, [0, 0, 1, 1, 2, 2], [1, 1, 1])
    assert popcount(greedy(m, random_monotone_submodular(6, 0).value)) == 3


def test_greedy_tie_break_smallest_id():
    assert greedy(UniformMatroid(3, 1), additive([1.0, 1.0, 1.0]).value) == 0b001


@pytest.mark.parametrize("seed", range(6))
def test_greedy_on_g_is_half_approximate(seed):
    c = 1.0 if seed % 2 else 0.5
    f = random_monotone_submodular(9, seed, "coverage", curvature_cap=c)
    m = UniformMatroid(9, 3)
    t = coefficient_table(c, 3)
    g = lambda A: g_exact(f, A, t)
    best = max(g(B) for B in all_bases(m))
    assert g(greedy(m, g)) >= 0.5 * best - 1e-12


def test_oblivious_examples():
    f = additive([0.5, 4.0, 1.0, 2.0])
    rep = oblivious_local_search(UniformMatroid(4, 2), f, 0.1)
    assert rep.iterations == 0 and rep.solution == 0b1010
    g = random_monotone_submodular(10, 3)
    before = g.calls
    rep = oblivious_local_search(UniformMatroid(10, 3), g, 0.1)
    assert rep.oracle_calls == g.calls - before
    assert rep.f_value >= (0.5 - 0.1) * brute_force_opt(UniformMatroid(10, 3), g.value)[1]


def test_eps1_example():
    rep = nonoblivious_exact(UniformMatroid(5, 2), random_monotone_submodular(5, 0), 1.0, 0.1)
    assert rep.params["eps1"] == pytest.approx(1 / 30, abs=1e-15)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("kind", ["coverage", "budget-additive"])
def test_exact_algorithm_guarantee_and_trace(seed, kind):
    c = 0.5 if seed % 2 else 1.0
    f = random_monotone_submodular(10, seed, kind, curvature_cap=c)
    m = UniformMatroid(10, 4) if seed < 4 else PartitionMatroid(10, [0, 1, 2, 3] * 2 + [0, 1], [1, 1, 1, 1])
    eps = 0.1
    rep = nonoblivious_exact(m, f, c, eps)
    opt = brute_force_opt(m, f.value)[1]
    assert m.is_base(rep.solution)
    assert rep.f_value >= (rho(c) - eps) * opt - 1e-12
    assert rep.iterations <= rep.params["iteration_bound"]
    eps1 = rep.params["eps1"]
    trace = rep.details["potential_trace"]
    assert all(b > (1 + eps1) * a for a, b in zip(trace, trace[1:]))


def test_exact_potential_modes_agree():
    f = random_monotone_submodular(9, 5)
    m = UniformMatroid(9, 3)
    a = nonoblivious_exact(m, f, 1.0, 0.05, potential="exact")
    b = nonoblivious_exact(m, f, 1.0, 0.05, potential="coverage")
    assert a.solution == b.solution and a.iterations == b.iterations


def test_exact_scale_error():
    f = random_monotone_submodular(8, 0)
    with pytest.raises(ScaleError):
        nonoblivious_exact(UniformMatroid(8, 5), f, 1.0, 0.1, potential="exact", exact_cap=4)


def test_exact_max_iterations_reports_error():
    f = random_monotone_submodular(12, 1, "budget-additive")
    m = UniformMatroid(12, 4)
    full = nonoblivious_exact(m, f, 1.0, 0.01)
    if full.iterations:
        assert nonoblivious_exact(m, f, 1.0, 0.01, max_iterations=0).status == ERROR


def test_sampled_parameters_match_formulas():
    c, eps, alpha, n, r = 0.7, 0.5, 1.5, 11, 3
    p = sampled_parameters(c, eps, alpha, n, r)
    eps2 = eps / (4 * r * harmonic(r))
    I = math.ceil((((1 + eps2) / (1 - eps2)) * (2 + 3 * r * eps2) - 1) / eps2)
    assert p["eps2"] == eps2 and p["I"] == I
    assert p["N"] == sample_count(c, n, r, eps2, I, alpha)


def test_sampled_fifty_seeds():
    f = random_monotone_submodular(12, 21)
    m = UniformMatroid(12, 3)
    opt = brute_force_opt(m, f.value)[1]
    good = 0
    for seed in range(50):
        rep = nonoblivious_sampled(m, f, 1.0, 0.5, 1.0, seed)
        assert m.is_base(rep.solution)
        assert rep.iterations <= rep.params["I"]
        assert rep.params["N"] == sample_count(1.0, 12, 3, rep.params["eps2"], rep.params["I"], 1.0)
        good += rep.status == CONVERGED and rep.f_value >= (1 - 1 / math.e - 0.5) * opt
    assert good >= 48


def test_sampled_determinism():
    f = random_monotone_submodular(10, 2, "rank-sum")
    m = PartitionMatroid(10, [0, 1, 2] * 3 + [0], [1, 1, 1])
    a = nonoblivious_sampled(m, f, 1.0, 0.5, 1.0, 77)
    b = nonoblivious_sampled(m, f, 1.0, 0.5, 1.0, 77)
    assert a.to_dict() == b.to_dict()


def test_sampled_fallbacks():
    f = random_monotone_submodular(6, 0)
    rep = nonoblivious_sampled(UniformMatroid(6, 1), f, 1.0, 0.5, 1.0, 0)
    assert rep.status == FALLBACK and popcount(rep.solution) == 1
    assert rep.f_value == max(f.value(1 << x) for x in range(6))
    rep = nonoblivious_sampled(UniformMatroid(6, 3), f, 1.0, 2.0, 1.0, 0)
    assert rep.status == FALLBACK and rep.params["fallback"] == "nonoblivious-exact"


def test_sampled_error_status_is_surfaced(monkeypatch):
    real = solvers.sampled_parameters

    def no_budget(*args):
        p = real(*args)
        return {**p, "I": 0}

    monkeypatch.setattr(solvers, "sampled_parameters", no_budget)
    rep = nonoblivious_sampled(UniformMatroid(8, 3), random_monotone_submodular(8, 0), 1.0, 0.5, 1.0, 0)
    assert rep.status == ERROR and not rep.converged


def test_partial_enumeration_trivial():
    f = ExplicitOracle(1, [0.0, 2.0])
    rep = partial_enumeration(UniformMatroid(1, 1), f, 1.0, 1.0, 0)
    assert rep.solution == 1 and rep.f_value == 2.0


def test_derived_instance_arithmetic():
    for r in range(2, 30):
        for c in np.linspace(0.01, 1, 25):
            theta_a = 1 - 1 / r
            theta_b = (1 + 1 / r) * (1 - rho(float(c)))
            assert 1 - theta_a * theta_b >= rho(float(c)) - 1e-15


@pytest.mark.parametrize("seed", range(5))
def test_partial_enumeration_ratio(seed):
    f = random_monotone_submodular(8, seed, "coverage" if seed % 2 else "rank-sum")
    m = UniformMatroid(8, 3)
    rep = partial_enumeration(m, f, 1.0, 1.0, seed)
    assert rep.status == CONVERGED and m.is_base(rep.solution)
    assert rep.f_value >= rho(1.0) * brute_force_opt(m, f.value)[1] - 1e-9
    assert rep.params["epsilon"] == pytest.approx((1 - rho(1.0)) / 3)


def test_curvature_guess_sets():
    assert curvature_guesses(0.3) == pytest.approx([0.3, 0.6, 0.9, 1.0])
    assert curvature_guesses(1.0) == [1.0]
    assert curvature_guesses(0.25) == pytest.approx([0.25, 0.5, 0.75, 1.0])
    with pytest.raises(DomainError):
        curvature_guesses(1.5)


def test_unknown_curvature_runs():
    f = random_monotone_submodular(8, 4, "budget-additive", curvature_cap=0.4)
    m = UniformMatroid(8, 3)
    rep = unknown_curvature(m, f, 0.3, 1.0, 0)
    assert [r["c"] for r in rep.details["runs"]] == pytest.approx([0.3, 0.6, 0.9, 1.0])
    assert m.is_base(rep.solution)
    one = unknown_curvature(m, f, 1.0, 1.0, 0)
    assert len(one.details["runs"]) == 1


def test_brute_force_examples():
    f = additive([1.0, 5.0, 3.0, 4.0, 2.0])
    S, v = brute_force_opt(UniformMatroid(5, 2), f.value)
    assert S == 0b01010 and v == 9.0
    g = random_monotone_submodular(8, 9)
    m = PartitionMatroid(8, [0, 0, 1, 1, 2, 2, 3, 3], [1, 2, 1, 1])
    _, v = brute_force_opt(m, g.value)
    assert v >= g.value(greedy(m, g.value))
    every = max(g.value(A) for A in range(256) if m.is_independent(A))
    assert v == every
    with pytest.raises(ScaleError):
        brute_force_opt(UniformMatroid(40, 20), g.value)


def test_fg_inequality_identity_case():
    f = random_monotone_submodular(8, 1)
    m = UniformMatroid(8, 3)
    assert check_fg_inequality(m, f, 1.0, 0b111, 0b111)


@pytest.mark.parametrize("seed", range(6))
def test_fg_inequality_local_optimum_vs_opt(seed):
    c = 0.5 if seed % 2 else 1.0
    f = random_monotone_submodular(9, seed, "coverage", curvature_cap=c)
    m = UniformMatroid(9, 3)
    A = nonoblivious_exact(m, f, c, 0.05).solution
    B = brute_force_opt(m, f.value)[0]
    assert fg_slack(m, f, c, A, B) >= -1e-9


def test_every_solver_returns_a_base():
    f = random_monotone_submodular(9, 13)
    m = PartitionMatroid(9, [0, 0, 0, 1, 1, 1, 2, 2, 2], [1, 2, 1])
    for algo in ALGORITHMS:
        rep = solve(m, f, SolveConfig(algo, 1.0, 0.3, 1.0, 5))
        assert m.is_base(rep.solution), algo
        assert rep.f_value == f.value(rep.solution)


def test_explicit_matroid_solve():
    m = ExplicitMatroid(3, [0, 1, 2, 4, 3, 5])
    f = random_monotone_submodular(3, 0)
    rep = solve(m, f, SolveConfig("nonoblivious-exact"))
    assert m.is_base(rep.solution)


def test_solve_config_validation():
    with pytest.raises(DomainError):
        SolveConfig("nope")
    with pytest.raises(DomainError):
        SolveConfig(c=0.0)
    with pytest.raises(DomainError):
        SolveConfig(epsilon=0)
    with pytest.raises(DomainError):
        SolveConfig(alpha=-1)


def test_report_serializes():
    rep = solve(UniformMatroid(5, 2), random_monotone_submodular(5, 0), SolveConfig())
    d = rep.to_dict()
    assert d["solution"] == sorted(d["solution"]) and d["status"] == CONVERGED
    assert to_mask(d["solution"]) == rep.solution
