"""The auxiliary potential g and its coefficient tables.

For a curvature bound ``c`` let ``P`` be the distribution on [0, 1] with
density ``c e^{cp} / (e^c - 1)`` and

    m[a][b] = E_{p~P} p^b (1-p)^(a-b)
    g(A)    = sum over B <= A of m[|A|-1][|B|-1] * f(B)      (m[.][-1] = 0)

``tau[k]`` is the total coefficient mass of a k-set and ``ell[k]`` is the
per-point weight used by the coverage form of g.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import mpmath
import numpy as np
from scipy import integrate

from .bits import elements, popcount, submasks
from .errors import DomainError, PreconditionError, ScaleError
from .objectives import CoverageInstance, CoverageOracle, ValueOracle

EXACT_CAP = 22
ENUM_LIMIT = 4096
FY_BLOCK = 1 << 17


def kappa(c: float) -> float:
    """``c e^c / (e^c - 1)``, which tends to 1 as c -> 0."""
    if c == 0:
        return 1.0
    return c / -math.expm1(-c)


def harmonic(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))


def _check_c(c):
    if not (0 < c <= 1):
        raise DomainError(f"curvature bound must lie in (0, 1], got {c}")


def compute_m_table(c: float, a_max: int) -> np.ndarray:
    """m[a][b] for 0 <= b <= a <= a_max via the integration-by-parts recurrence

        c m[a][b] = (a-b) m[a-1][b] - b m[a-1][b-1]
                    + ([a=b] c e^c - [b=0] c) / (e^c - 1).

    The forward recurrence amplifies rounding error roughly like
    ``(2a/c)^a``, so it runs in extended precision and is rounded once at
    the end.
    """
    _check_c(c)
    if a_max < 0:
        raise DomainError(f"a_max must be >= 0, got {a_max}")
    dps = 30 + math.ceil(a_max * math.log10(2 * a_max / c + 2))
    out = np.zeros((a_max + 1, a_max + 1))
    with mpmath.workdps(dps):
        cm = mpmath.mpf(c)
        denom = mpmath.expm1(cm)
        top = cm * mpmath.exp(cm) / denom
        bottom = cm / denom
        prev = [mpmath.mpf(1)]
        out[0, 0] = 1.0
        for a in range(1, a_max + 1):
            row = []
            for b in range(a + 1):
                t = (a - b) * prev[b] if b < a else mpmath.mpf(0)
                if b:
                    t -= b * prev[b - 1]
                if a == b:
                    t += top
                if b == 0:
                    t -= bottom
                row.append(t / cm)
            out[a, : a + 1] = [float(x) for x in row]
            prev = row
    return out


def m_quadrature(c: float, a: int, b: int) -> float:
    """m[a][b] by adaptive quadrature of its defining integral."""
    if not 0 <= b <= a:
        raise DomainError(f"need 0 <= b <= a, got a={a}, b={b}")
    scale = c / math.expm1(c)
    val, _ = integrate.quad(
        lambda p: scale * math.exp(c * p) * p**b * (1 - p) ** (a - b),
        0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    return val


def ell_quadrature(c: float, k: int) -> float:
    """ell[k] = E_{p~P} (1 - (1-p)^k) / p by quadrature."""
    scale = c / math.expm1(c)

    def integrand(p):
        # (1 - (1-p)^k)/p written without the removable 0/0 at p = 0
        return scale * math.exp(c * p) * math.fsum((1 - p) ** j for j in range(k))

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def compute_tau(m: np.ndarray) -> np.ndarray:
    """tau[k] = sum_{j=1..k} C(k, j) m[k-1][j-1], tau[0] = 0, for k <= a_max + 1."""
    a_max = m.shape[0] - 1
    tau = np.zeros(a_max + 2)
    for k in range(1, a_max + 2):
        tau[k] = math.fsum(math.comb(k, j) * m[k - 1, j - 1] for j in range(1, k + 1))
    return tau


def compute_ell_table(m: np.ndarray, k_max: int | None = None) -> np.ndarray:
    """ell[0] = 0, ell[k+1] = ell[k] + m[k][0]."""
    k_max = m.shape[0] if k_max is None else k_max
    if k_max > m.shape[0]:
        raise DomainError(f"ell[{k_max}] needs m rows up to {k_max - 1}")
    ell = np.zeros(k_max + 1)
    for k in range(k_max):
        ell[k + 1] = ell[k] + m[k, 0]
    return ell


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    c: float
    a_max: int
    m: np.ndarray
    tau: np.ndarray
    ell: np.ndarray
    _size_cdf: dict = field(default_factory=dict, repr=False)

    def coef(self, a: int, b: int) -> float:
        if a < 0 or b < 0:
            return 0.0
        return float(self.m[a, b])

    def size_probs(self, s: int) -> np.ndarray:
        """P(|B| = k) under nu_A for |A| = s, as an array indexed k-1."""
        if s < 1 or s > self.a_max + 1:
            raise DomainError(f"no size distribution for |A| = {s} (a_max = {self.a_max})")
        if s not in self._size_cdf:
            p = np.array([math.comb(s, k) * self.m[s - 1, k - 1] for k in range(1, s + 1)])
            self._size_cdf[s] = p / p.sum()
        return self._size_cdf[s]


@lru_cache(maxsize=64)
def coefficient_table(c: float, a_max: int) -> CoefficientTable:
    """Cached, read-only table covering sets of size up to ``a_max + 1``."""
    m = compute_m_table(c, a_max)
    m.flags.writeable = False
    tau = compute_tau(m)
    tau.flags.writeable = False
    ell = compute_ell_table(m)
    ell.flags.writeable = False
    return CoefficientTable(c, a_max, m, tau, ell)


def tau(table: CoefficientTable, k: int) -> float:
    if not 0 <= k <= table.a_max + 1:
        raise DomainError(f"tau[{k}] outside table range 0..{table.a_max + 1}")
    return float(table.tau[k])


def _need_rows(table, s):
    if s - 1 > table.a_max:
        raise DomainError(f"coefficient table (a_max={table.a_max}) too small for |A| = {s}")


def g_exact(f: ValueOracle, A: int, table: CoefficientTable, cap: int = EXACT_CAP) -> float:
    s = popcount(A)
    if s > cap:
        raise ScaleError(f"exact g limited to |A| <= {cap}, got {s}")
    if s == 0:
        return 0.0
    _need_rows(table, s)
    row = table.m[s - 1].tolist()
    total = 0.0
    for B in submasks(A):
        if B:
            total += row[popcount(B) - 1] * f.value(B)
    return total


def g_marginal_exact(f: ValueOracle, A: int, x: int, table: CoefficientTable, cap: int = EXACT_CAP) -> float:
    """g(A + x) - g(A) as the weighted average sum_{B <= A} m[|A|][|B|] f_B(x)."""
    bit = 1 << x
    if A & bit:
        raise PreconditionError(f"element {x} already in A")
    s = popcount(A)
    if s > cap:
        raise ScaleError(f"exact g limited to |A| <= {cap}, got {s}")
    _need_rows(table, s + 1)
    row = table.m[s].tolist()
    total = 0.0
    for B in submasks(A):
        total += row[popcount(B)] * (f.value(B | bit) - f.value(B))
    return total


def g_table(T: np.ndarray, k: int, table: CoefficientTable) -> np.ndarray:
    """g over every subset of a k-element ground set from the dense value table T.

    Uses per-size subset-sum (zeta) transforms rather than submask enumeration,
    so it is an independent route to the same numbers as :func:`g_exact`.
    """
    if k > 20:
        raise ScaleError("g_table is limited to 20 elements")
    if k and k - 1 > table.a_max:
        raise DomainError(f"coefficient table (a_max={table.a_max}) too small for {k} elements")
    size = 1 << k
    idx = np.arange(size)
    pc = np.zeros(size, dtype=np.int64)
    for j in range(k):
        pc += (idx >> j) & 1
    g = np.zeros(size)
    for j in range(1, k + 1):
        h = np.where(pc == j, T, 0.0)
        for i in range(k):
            v = h.reshape(-1, 2, 1 << i)
            v[:, 1, :] += v[:, 0, :]
        sel = pc >= j
        g[sel] += table.m[pc[sel] - 1, j - 1] * h[sel]
    return g


# -- sampling ------------------------------------------------------------------


def sample_nu(A: int, table: CoefficientTable, rng: np.random.Generator) -> int:
    """One draw B ~ nu_A: size from its categorical law, then a uniform subset
    of that size by partial Fisher-Yates."""
    elems = elements(A)
    s = len(elems)
    if s == 0:
        raise PreconditionError("nu_A is undefined for empty A")
    p = table.size_probs(s)
    k = min(int(np.searchsorted(np.cumsum(p), rng.random(), side="right")) + 1, s)
    for i in range(k):
        j = i + int(rng.integers(0, s - i))
        elems[i], elems[j] = elems[j], elems[i]
    B = 0
    for e in elems[:k]:
        B |= 1 << e
    return B


def sample_p(c: float, rng: np.random.Generator, size: int | None = None):
    """Draws from P by inverse CDF, p = ln(1 + u (e^c - 1)) / c.  Test use only."""
    _check_c(c)
    u = rng.random(size)
    return np.log1p(u * math.expm1(c)) / c


def sample_mu(A: int, c: float, rng: np.random.Generator) -> int:
    """One draw from mu_A: p ~ P, then keep each element of A with probability p."""
    p = sample_p(c, rng)
    B = 0
    for e in elements(A):
        if rng.random() < p:
            B |= 1 << e
    return B


def _fy_rows(elems: np.ndarray, ks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized partial Fisher-Yates: row r keeps a uniform ks[r]-subset."""
    rows = ks.size
    s = elems.size
    arr = np.tile(elems, (rows, 1))
    r_idx = np.arange(rows)
    kmax = int(ks.max())
    for i in range(kmax):
        j = i + np.minimum((rng.random(rows) * (s - i)).astype(np.int64), s - i - 1)
        a, b = arr[r_idx, i].copy(), arr[r_idx, j]
        arr[r_idx, i] = b
        arr[r_idx, j] = a
    keep = np.arange(s)[None, :] < ks[:, None]
    return np.where(keep, np.left_shift(np.int64(1), arr), 0).sum(axis=1)


def _draw_masks(elems: list[int], ks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if elems and elems[-1] >= 62:
        raise ScaleError("vectorized sampling supports element ids below 62")
    e = np.asarray(elems, dtype=np.int64)
    out = np.empty(ks.size, dtype=np.int64)
    for start in range(0, ks.size, FY_BLOCK):
        out[start:start + FY_BLOCK] = _fy_rows(e, ks[start:start + FY_BLOCK], rng)
    return out


def sample_nu_batch(A: int, table: CoefficientTable, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws from nu_A as an int64 mask array."""
    elems = elements(A)
    s = len(elems)
    if s == 0:
        raise PreconditionError("nu_A is undefined for empty A")
    ks = rng.choice(np.arange(1, s + 1), size=size, p=table.size_probs(s))
    return _draw_masks(elems, ks, rng)


def g_sampled(f: ValueOracle, A: int, table: CoefficientTable, N: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate tau(A) * mean f(B_i) over N draws B_i ~ nu_A.

    The N draws are tallied rather than materialized: the number of draws of
    each size is multinomial, and the draws of one size are spread uniformly
    over the subsets of that size.  ``f`` is queried once per distinct subset
    drawn.  Empty and singleton A are returned exactly.
    """
    if N < 1:
        raise DomainError(f"sample count must be >= 1, got {N}")
    elems = elements(A)
    s = len(elems)
    if s == 0:
        return 0.0
    if s == 1:
        return f.value(A)
    _need_rows(table, s)
    per_size = rng.multinomial(N, table.size_probs(s))
    total = 0.0
    for k, nk in enumerate(per_size.tolist(), start=1):
        if nk == 0:
            continue
        if k == s:
            total += nk * f.value(A)
            continue
        ncomb = math.comb(s, k)
        if ncomb <= ENUM_LIMIT:
            counts = rng.multinomial(nk, np.full(ncomb, 1.0 / ncomb)).tolist()
            for combo, cnt in zip(combinations(elems, k), counts):
                if cnt:
                    B = 0
                    for e in combo:
                        B |= 1 << e
                    total += cnt * f.value(B)
        else:
            masks = _draw_masks(elems, np.full(nk, k, dtype=np.int64), rng)
            uniq, counts = np.unique(masks, return_counts=True)
            for B, cnt in zip(uniq.tolist(), counts.tolist()):
                total += cnt * f.value(B)
    return float(table.tau[s]) * total / N


def sample_count(c: float, n: int, r: int, eps2: float, I: int, alpha: float) -> int:
    """ceil(1/2 (kappa(c) H_n / eps2)^2 ln((I + 1) r n^(1 + alpha)))."""
    if min(c, n, r, eps2, I, alpha) <= 0:
        raise DomainError("sample_count inputs must all be positive")
    x = kappa(c) * harmonic(n) / eps2
    return math.ceil(0.5 * x * x * math.log((I + 1) * r * n ** (1 + alpha)))


def hoeffding_bound(eps: float, N: int, tau_value: float) -> float:
    """2 exp(-2 eps^2 N / tau^2): tail bound on the relative error of g_sampled."""
    return 2.0 * math.exp(-2.0 * eps * eps * N / (tau_value * tau_value))


# -- coverage form -------------------------------------------------------------


class CoverageState:
    """Per-point cover counts for a set A, giving g(A) = sum_x ell[count_x] w_x."""

    def __init__(self, cov: CoverageInstance, ell: np.ndarray, A: int = 0, membership: np.ndarray | None = None):
        self.M = cov.membership() if membership is None else membership
        self.Mi = self.M.astype(np.int64)
        self.w = np.asarray(cov.weights, dtype=float)
        self.ell = np.asarray(ell)
        self.reset(A)

    def reset(self, A: int):
        elems = elements(A)
        if elems and elems[-1] >= self.M.shape[0]:
            raise DomainError("set has ids outside the coverage family")
        self.mask = A
        self.counts = self.Mi[elems].sum(axis=0) if elems else np.zeros(self.M.shape[1], dtype=np.int64)
        if self.counts.max(initial=0) >= self.ell.size:
            raise DomainError("ell table too short for the cover counts")
        self.value = float(self.w @ self.ell[self.counts])

    def swap_value(self, out: int, add: int) -> float:
        """g(A - out + add) without touching the state."""
        if not self.mask >> out & 1:
            raise PreconditionError(f"element {out} not in A")
        if self.mask >> add & 1:
            raise PreconditionError(f"element {add} already in A")
        aff = self.M[out] | self.M[add]
        old = self.counts[aff]
        new = old - self.Mi[out, aff] + self.Mi[add, aff]
        w = self.w[aff]
        return self.value + float(w @ self.ell[new] - w @ self.ell[old])

    def apply(self, out: int, add: int):
        if not self.mask >> out & 1 or self.mask >> add & 1:
            raise PreconditionError("swap must remove a member and add a non-member")
        self.counts = self.counts - self.Mi[out] + self.Mi[add]
        self.mask = (self.mask & ~(1 << out)) | (1 << add)
        self.value = float(self.w @ self.ell[self.counts])


def g_coverage(cov: CoverageInstance, A: int, ell: np.ndarray) -> float:
    return CoverageState(cov, ell, A).value


def g_coverage_delta(state: CoverageState, out: int, add: int) -> float:
    return state.swap_value(out, add)


# -- evaluator -------------------------------------------------------------------


class PotentialEvaluator:
    """Access to g (or its estimate) for one oracle and coefficient table.

    ``mode`` is ``"exact"`` (subset sums), ``"sampled"`` (fresh N-sample
    estimate per call) or ``"coverage"`` (count-based exact g).
    """

    def __init__(self, oracle: ValueOracle, table: CoefficientTable, mode: str = "exact",
                 samples: int | None = None, rng: np.random.Generator | None = None,
                 exact_cap: int = EXACT_CAP):
        self.oracle = oracle
        self.table = table
        self.mode = mode
        self.exact_cap = exact_cap
        self.evaluations = 0
        if mode == "sampled":
            if samples is None or samples < 1:
                raise DomainError("sampled mode needs samples >= 1")
            if rng is None:
                raise DomainError("sampled mode needs an rng")
        elif mode == "coverage":
            if not isinstance(oracle, CoverageOracle):
                raise DomainError("coverage mode needs a coverage oracle")
            self._state = CoverageState(oracle.instance, table.ell)
        elif mode != "exact":
            raise DomainError(f"unknown potential mode {mode!r}")
        self.samples = samples
        self.rng = rng

    def __call__(self, A: int) -> float:
        self.evaluations += 1
        if self.mode == "exact":
            return g_exact(self.oracle, A, self.table, self.exact_cap)
        if self.mode == "sampled":
            return g_sampled(self.oracle, A, self.table, self.samples, self.rng)
        self._sync(A)
        return self._state.value

    def _sync(self, S: int):
        st = self._state
        if st.mask == S:
            return
        gone, new = st.mask & ~S, S & ~st.mask
        if popcount(gone) == 1 and popcount(new) == 1:
            st.apply(gone.bit_length() - 1, new.bit_length() - 1)
        else:
            st.reset(S)

    def swap_value(self, S: int, out: int, add: int) -> float:
        """Potential of ``S - out + add``."""
        if self.mode != "coverage":
            return self((S & ~(1 << out)) | (1 << add))
        self.evaluations += 1
        self._sync(S)
        return self._state.swap_value(out, add)
