"""Greedy, local search and the non-oblivious local search family.

All solvers take a :class:`~nonoblivious.matroids.Matroid` and a
:class:`~nonoblivious.objectives.ValueOracle` and return a
:class:`SolveReport`.  Scans are in ascending element order and ties go to
the smallest id, so a solve is a deterministic function of its inputs and
seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bits import elements, popcount
from .errors import DomainError, ScaleError
from .matroids import Matroid, all_bases, brualdi_bijection, contract, swap_neighborhood
from .objectives import CoverageOracle, ValueOracle, contract_function
from .potential import (
    EXACT_CAP,
    CoefficientTable,
    PotentialEvaluator,
    coefficient_table,
    g_exact,
    harmonic,
    kappa,
    sample_count,
)
from .seeding import derive_seed

CONVERGED = "converged"
ERROR = "error"
FALLBACK = "fallback-used"

ALGORITHMS = (
    "greedy",
    "oblivious",
    "nonoblivious-exact",
    "nonoblivious-sampled",
    "partial-enum",
    "unknown-curvature",
)


@dataclass
class SolveReport:
    algorithm: str
    solution: int
    f_value: float
    status: str = CONVERGED
    potential_value: float | None = None
    init_f: float | None = None
    init_potential: float | None = None
    iterations: int = 0
    oracle_calls: int = 0
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status != ERROR

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "solution": elements(self.solution),
            "f_value": self.f_value,
            "status": self.status,
            "potential_value": self.potential_value,
            "init_f": self.init_f,
            "init_potential": self.init_potential,
            "iterations": self.iterations,
            "oracle_calls": self.oracle_calls,
            "params": self.params,
            "details": self.details,
        }


@dataclass(frozen=True)
class SolveConfig:
    algo: str = "nonoblivious-exact"
    c: float = 1.0
    epsilon: float = 0.1
    alpha: float = 1.0
    seed: int = 0
    exact_cap: int = EXACT_CAP
    max_iterations: int | None = None

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise DomainError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}")
        if not 0 < self.c <= 1:
            raise DomainError(f"c must lie in (0, 1], got {self.c}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")


def rho(c: float) -> float:
    """(1 - e^-c)/c, with rho(0) = 1."""
    if not 0 <= c <= 1:
        raise DomainError(f"rho is defined on [0, 1], got {c}")
    if c < 1e-8:
        return 1.0 - c / 2 + c * c / 6
    return -math.expm1(-c) / c


def curvature_guesses(epsilon: float) -> list[float]:
    """{k eps : 1 <= k <= floor(1/eps)} together with 1, ascending."""
    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    kmax = math.floor(1.0 / epsilon + 1e-12)
    guesses = [k * epsilon for k in range(1, kmax + 1) if k * epsilon < 1 - 1e-12]
    return guesses + [1.0]


def greedy(m: Matroid, h: Callable[[int], float]) -> int:
    """Standard greedy: repeatedly add the feasible element maximizing h(S + x)."""
    S = 0
    outside = elements(m.ground_mask)
    while True:
        best, best_val = None, -math.inf
        for x in outside:
            cand = S | (1 << x)
            if not m._independent(cand):
                continue
            val = h(cand)
            if val > best_val:
                best, best_val = x, val
        if best is None:
            return S
        S |= 1 << best
        outside.remove(best)


def _report_greedy(m, f):
    calls0 = f.calls
    S = greedy(m, f.value)
    val = f.value(S)
    return SolveReport("greedy", S, val, init_f=val, oracle_calls=f.calls - calls0)


def oblivious_local_search(m: Matroid, f: ValueOracle, epsilon: float) -> SolveReport:
    """Greedy start, then first-improvement swaps judged by f itself."""
    calls0 = f.calls
    r = m.rank
    eps1 = epsilon / (r * harmonic(r)) if r else 0.0
    S = greedy(m, f.value)
    cur = init = f.value(S)
    iterations = 0
    improved = r > 0
    while improved:
        improved = False
        for move in swap_neighborhood(m, S):
            val = f.value(move.result)
            if val > (1 + eps1) * cur:
                S, cur = move.result, val
                iterations += 1
                improved = True
                break
    return SolveReport(
        "oblivious", S, cur, init_f=init, iterations=iterations,
        oracle_calls=f.calls - calls0, params={"epsilon": epsilon, "eps1": eps1, "r": r},
    )


def _potential_mode(f, potential):
    if potential == "auto":
        return "coverage" if isinstance(f, CoverageOracle) else "exact"
    return potential


def nonoblivious_exact(m: Matroid, f: ValueOracle, c: float, epsilon: float, potential: str = "auto",
                       exact_cap: int = EXACT_CAP, max_iterations: int | None = None) -> SolveReport:
    """Local search on the exact potential g, accepting the first swap that
    raises g by more than a factor 1 + eps/(r H_r)."""
    if not 0 < c <= 1:
        raise DomainError(f"c must lie in (0, 1], got {c}")
    calls0 = f.calls
    r = m.rank
    mode = _potential_mode(f, potential)
    if mode == "exact" and r > exact_cap:
        raise ScaleError(f"rank {r} exceeds the exact-potential cap {exact_cap}; use the sampled algorithm")
    if r == 0:
        return SolveReport("nonoblivious-exact", 0, f.value(0), potential_value=0.0,
                           oracle_calls=f.calls - calls0, params={"r": 0})
    eps1 = epsilon / (r * harmonic(r))
    table = coefficient_table(c, r)
    g = PotentialEvaluator(f, table, mode, exact_cap=exact_cap)
    S = greedy(m, g)
    gS = g_init = g(S)
    init_f = f.value(S)
    trace = [gS]
    iterations = 0
    status = CONVERGED
    improved = True
    while improved:
        improved = False
        if max_iterations is not None and iterations >= max_iterations:
            status = ERROR
            break
        for move in swap_neighborhood(m, S):
            val = g.swap_value(S, move.out, move.add)
            if val > (1 + eps1) * gS:
                S, gS = move.result, val
                trace.append(gS)
                iterations += 1
                improved = True
                break
    return SolveReport(
        "nonoblivious-exact", S, f.value(S), status=status, potential_value=gS, init_f=init_f,
        init_potential=g_init, iterations=iterations, oracle_calls=f.calls - calls0,
        params={"c": c, "epsilon": epsilon, "eps1": eps1, "r": r, "potential": mode,
                "iteration_bound": math.ceil(math.log(2) / math.log1p(eps1))},
        details={"potential_trace": trace},
    )


def sampled_parameters(c: float, epsilon: float, alpha: float, n: int, r: int) -> dict:
    """eps2, the iteration budget I (rounded up) and the per-estimate sample count N."""
    eps2 = epsilon / (4 * r * harmonic(r))
    ratio = (1 + eps2) / (1 - eps2)
    I = math.ceil((ratio * (2 + 3 * r * eps2) - 1) / eps2)
    N = sample_count(c, n, r, eps2, I, alpha)
    return {"eps2": eps2, "I": I, "N": N}


def _best_singleton(m, f):
    best, best_val = 0, -math.inf
    for x in elements(m.ground_mask):
        if m._independent(1 << x):
            v = f.value(1 << x)
            if v > best_val:
                best, best_val = 1 << x, v
    return best


def nonoblivious_sampled(m: Matroid, f: ValueOracle, c: float, epsilon: float, alpha: float,
                         seed: int, exact_cap: int = EXACT_CAP) -> SolveReport:
    """Local search on the sampled potential with at most I improvements.

    Each potential evaluation draws N fresh samples; the current solution's
    estimate is cached in ``v`` and replaced by the accepted candidate's.
    Returns status ``"error"`` if the budget of I improvements runs out.
    Outside the standing assumptions (rank >= 2, epsilon <= 1) the request
    is routed to an exact method and reported as ``"fallback-used"``.
    """
    if not 0 < c <= 1:
        raise DomainError(f"c must lie in (0, 1], got {c}")
    calls0 = f.calls
    r = m.rank
    n = m.size
    if r < 2:
        S = _best_singleton(m, f) if r == 1 else 0
        return SolveReport("nonoblivious-sampled", S, f.value(S), status=FALLBACK,
                           oracle_calls=f.calls - calls0,
                           params={"r": r, "n": n, "fallback": "brute-force-singletons"})
    if epsilon > 1:
        rep = nonoblivious_exact(m, f, c, epsilon, exact_cap=exact_cap)
        rep.algorithm = "nonoblivious-sampled"
        rep.status = FALLBACK if rep.status == CONVERGED else rep.status
        rep.params["fallback"] = "nonoblivious-exact"
        rep.oracle_calls = f.calls - calls0
        return rep
    p = sampled_parameters(c, epsilon, alpha, n, r)
    eps2, I, N = p["eps2"], p["I"], p["N"]
    rng = np.random.default_rng(seed)
    table = coefficient_table(c, r)
    g = PotentialEvaluator(f, table, "sampled", samples=N, rng=rng)
    S = greedy(m, g)
    v = v_init = g(S)
    init_f = f.value(S)
    iterations = 0
    status = ERROR
    for _ in range(I):
        done = True
        for move in swap_neighborhood(m, S):
            v_new = g(move.result)
            if v_new > (1 + eps2) * v:
                v, S = v_new, move.result
                iterations += 1
                done = False
                break
        if done:
            status = CONVERGED
            break
    return SolveReport(
        "nonoblivious-sampled", S, f.value(S), status=status, potential_value=v, init_f=init_f,
        init_potential=v_init, iterations=iterations, oracle_calls=f.calls - calls0,
        params={"c": c, "epsilon": epsilon, "alpha": alpha, "seed": seed, "r": r, "n": n, **p},
        details={"potential_evaluations": g.evaluations},
    )


def partial_enumeration(m: Matroid, f: ValueOracle, c: float, alpha: float, seed: int,
                        exact_cap: int = EXACT_CAP) -> SolveReport:
    """Guess one element x, solve the contracted instance with eps = (1 - rho(c))/r,
    keep the best ``S_x + x``.

    The contracted objective is shifted by ``f({x})`` so that it is normalized;
    that changes no marginal and no argmax.
    """
    calls0 = f.calls
    r = m.rank
    if r == 0:
        return SolveReport("partial-enum", 0, f.value(0), oracle_calls=f.calls - calls0, params={"r": 0})
    eps = (1 - rho(c)) / r
    best, best_val, best_x = None, -math.inf, None
    subruns = []
    any_error = False
    for x in elements(m.ground_mask):
        bit = 1 << x
        if not m._independent(bit):
            continue
        sub = nonoblivious_sampled(contract(m, x), contract_function(f, x, shift=True), c, eps, alpha,
                                   derive_seed(seed, "contract", x), exact_cap=exact_cap)
        cand = sub.solution | bit
        val = f.value(cand)
        subruns.append({"x": x, "status": sub.status, "f_value": val, "iterations": sub.iterations})
        if sub.status == ERROR:
            any_error = True
            continue
        if val > best_val:
            best, best_val, best_x = cand, val, x
    if best is None:
        # every sub-run failed; fall back to the greedy base so a base is still reported
        best = greedy(m, f.value)
        best_val = f.value(best)
    return SolveReport(
        "partial-enum", best, best_val, status=ERROR if any_error else CONVERGED,
        oracle_calls=f.calls - calls0,
        params={"c": c, "alpha": alpha, "seed": seed, "r": r, "epsilon": eps},
        details={"best_x": best_x, "subruns": subruns},
    )


def unknown_curvature(m: Matroid, f: ValueOracle, epsilon: float, alpha: float, seed: int,
                      exact_cap: int = EXACT_CAP) -> SolveReport:
    """Run the sampled algorithm for every curvature guess with error eps/2; keep the best."""
    calls0 = f.calls
    guesses = curvature_guesses(epsilon)
    best, best_val, best_c = None, -math.inf, None
    runs = []
    any_error = False
    for i, cg in enumerate(guesses):
        sub = nonoblivious_sampled(m, f, cg, epsilon / 2, alpha, derive_seed(seed, "curvature", i),
                                   exact_cap=exact_cap)
        runs.append({"c": cg, "status": sub.status, "f_value": sub.f_value, "iterations": sub.iterations})
        if sub.status == ERROR:
            any_error = True
            continue
        if sub.f_value > best_val:
            best, best_val, best_c = sub.solution, sub.f_value, cg
    if best is None:
        best = greedy(m, f.value)
        best_val = f.value(best)
    return SolveReport(
        "unknown-curvature", best, best_val, status=ERROR if any_error else CONVERGED,
        oracle_calls=f.calls - calls0,
        params={"epsilon": epsilon, "alpha": alpha, "seed": seed, "guesses": guesses},
        details={"best_c": best_c, "runs": runs},
    )


def brute_force_opt(m: Matroid, f: Callable[[int], float], limit: int = 1_000_000) -> tuple[int, float]:
    """Exact maximum over all bases; ties go to the lexicographically first base."""
    best, best_val = 0, -math.inf
    for B in all_bases(m, limit):
        v = f(B)
        if v > best_val:
            best, best_val = B, v
    return best, best_val


def fg_slack(m: Matroid, f: ValueOracle, c: float, A: int, B: int,
             table: CoefficientTable | None = None) -> float:
    """kappa(c) f(A) - [f(B) + sum_i (g(A) - g(A - a_i + pi(a_i)))] with the
    exchange bijection pi from A to B."""
    r = popcount(A)
    if r > EXACT_CAP:
        raise ScaleError(f"exact g limited to |A| <= {EXACT_CAP}")
    table = table or coefficient_table(c, max(r, 1))
    pi = brualdi_bijection(m, A, B)
    gA = g_exact(f, A, table)
    lost = math.fsum(gA - g_exact(f, (A & ~(1 << a)) | (1 << b), table) for a, b in pi.items())
    return kappa(c) * f.value(A) - (f.value(B) + lost)


def check_fg_inequality(m: Matroid, f: ValueOracle, c: float, A: int, B: int,
                        table: CoefficientTable | None = None, tol: float = 1e-9) -> bool:
    return fg_slack(m, f, c, A, B, table) >= -tol


def solve(m: Matroid, f: ValueOracle, config: SolveConfig) -> SolveReport:
    algo = config.algo
    if algo == "greedy":
        return _report_greedy(m, f)
    if algo == "oblivious":
        return oblivious_local_search(m, f, config.epsilon)
    if algo == "nonoblivious-exact":
        return nonoblivious_exact(m, f, config.c, config.epsilon, exact_cap=config.exact_cap,
                                  max_iterations=config.max_iterations)
    if algo == "nonoblivious-sampled":
        return nonoblivious_sampled(m, f, config.c, config.epsilon, config.alpha, config.seed,
                                    exact_cap=config.exact_cap)
    if algo == "partial-enum":
        return partial_enumeration(m, f, config.c, config.alpha, config.seed, exact_cap=config.exact_cap)
    return unknown_curvature(m, f, config.epsilon, config.alpha, config.seed, exact_cap=config.exact_cap)
