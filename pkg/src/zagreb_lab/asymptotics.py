"""Limit constants, plane limit moments and numeric checks of the transfer rules.

Non-plane trees: ``E Z_n ~ mu_k n`` and ``Var Z_n ~ var_k n`` where both
constants are series ``2 sum_{j>=2} b_j / (j (j + 1))`` over the toll of the
corresponding two-sided recurrence.  The toll sequences are built from the
exact-engine tables; series truncation errors are estimated from the gap
between the partial sums at ``J`` and ``J / 2``.

Plane trees (``k >= 3``): ``E(Z_n^r R_n^s) ~ g[r, s] n^{(kr + s)/2}`` with
``g`` defined by the two recurrences implemented in :func:`g_table`.  The
table lives in log space because ``g`` grows like ``sqrt((kr + s)!)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from . import exact
from .errors import ContractError, InvalidOrderError
from .special import EULER_GAMMA, SQRT_PI, log_factorial, log_gamma, log_sum_exp
from .trees import TreeModel

LOG_SQRT_PI = 0.5 * math.log(math.pi)


# ------------------------------------------------------------- constants

@dataclass(frozen=True)
class LimitConstants:
    k: int
    mu: float
    mu_err: float
    var: float
    var_err: float
    J: int
    var_J: int

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "mu": self.mu,
            "mu_err": self.mu_err,
            "var": self.var,
            "var_err": self.var_err,
            "sigma": self.sigma,
            "J": self.J,
            "var_J": self.var_J,
        }


def series_constant(b: np.ndarray) -> np.ndarray:
    """Partial sums ``S[m] = 2 sum_{j=2}^{m} b_j / (j (j + 1))`` (``b[j]`` indexed by ``j``)."""
    j = np.arange(len(b), dtype=float)
    terms = np.zeros(len(b))
    terms[2:] = 2.0 * b[2:] / (j[2:] * (j[2:] + 1.0))
    return np.cumsum(terms)


# The tails here decay like log(J)/J, for which |S(J) - S(J/2)| undershoots
# the true tail by up to a factor 1.75 at J >= 10.
ERROR_SAFETY = 2.0


def _richardson(partial: np.ndarray, J: int) -> tuple[float, float]:
    return float(partial[J]), ERROR_SAFETY * abs(float(partial[J] - partial[J // 2]))


def mean_toll_nonplane(k: int, J: int) -> np.ndarray:
    """Float toll ``b_j`` (index ``j``) of the non-plane mean recurrence."""
    R = exact.root_degree_moments(TreeModel.NONPLANE, J, k - 1)
    prefix = np.cumsum(R, axis=0)  # prefix[j] = sum_{i<=j} E R_i^l
    b = np.zeros(J + 1)
    for j in range(2, J + 1):
        b[j] = sum(math.comb(k, l) * 2.0 * prefix[j - 1, l] / (j - 1) for l in range(k))
    return b


def mu_k(k: int, J: int = 10_000) -> tuple[float, float]:
    """Series value of the linear mean constant and its truncation estimate."""
    if k < 2:
        raise InvalidOrderError("k must be >= 2")
    if J < 10:
        raise ContractError("truncation index J must be >= 10")
    return _richardson(series_constant(mean_toll_nonplane(k, J)), J)


@dataclass(frozen=True)
class VarianceToll:
    """Toll of the variance recurrence split into its three non-negative pieces.

    ``square[n]`` is the mean of ``T^2``; ``left`` / ``right`` are the mean
    cross terms ``2 E(Zbar_j T)`` and ``2 E(Zbar_{n-j} T)``.  Each is a
    non-negative quantity whenever the covariances of ``Z`` with powers of
    ``R`` are non-negative.
    """

    square: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cov: np.ndarray  # cov[j, l] = Cov(Z_j, R_j^l)
    variance: np.ndarray  # exact-table Var(Z_n)

    @property
    def total(self) -> np.ndarray:
        return self.square + self.left + self.right


def variance_toll(k: int, N: int) -> VarianceToll:
    """Rebuild ``T_{n,j}`` and ``Delta(n)`` from a float non-plane table.

    ``T_{n,j} = f(R_j) + f(R'_{n-j}) + Delta_{n,j}`` with
    ``Delta_{n,j} = mu(j) + mu(n-j) - mu(n)``; the toll averages
    ``E T^2 + 2 E(Zbar_j T) + 2 E(Zbar'_{n-j} T)`` over the uniform split.
    """
    tab = exact.moment_table(TreeModel.NONPLANE, k, N, 2 * k, kind="float")
    dt = np.longdouble
    ns = range(1, N + 1)
    col = lambda i, l: np.array([0] + [tab.moment(n, i, l) for n in ns], dtype=dt)
    mu = col(1, 0)
    R = [col(0, l) for l in range(2 * k - 1)]
    f_coef = [math.comb(k, l) for l in range(k)]
    Ef = sum(c * R[l] for l, c in enumerate(f_coef))
    Ef2 = np.zeros(N + 1, dtype=dt)
    for a, ca in enumerate(f_coef):
        for b, cb in enumerate(f_coef):
            Ef2 += ca * cb * R[a + b]
    varf = Ef2 - Ef**2
    cov = np.zeros((N + 1, k), dtype=dt)
    for l in range(k):
        cov[:, l] = col(1, l) - mu * R[l]
    cov_f = sum(c * cov[:, l] for l, c in enumerate(f_coef))
    square = np.zeros(N + 1, dtype=dt)
    left = np.zeros(N + 1, dtype=dt)
    right = np.zeros(N + 1, dtype=dt)
    for n in range(2, N + 1):
        j = np.arange(1, n)
        delta = mu[j] + mu[n - j] - mu[n]
        mean_t = Ef[j] + Ef[n - j] + delta
        square[n] = (varf[j] + varf[n - j] + mean_t**2).sum() / (n - 1)
        left[n] = 2 * cov_f[j].sum() / (n - 1)
        right[n] = 2 * cov_f[n - j].sum() / (n - 1)
    var = col(2, 0) - mu**2
    return VarianceToll(square, left, right, cov, var)


def var_k(k: int, J: int = 2000, toll: VarianceToll | None = None) -> tuple[float, float]:
    """Series value of ``lim Var(Z_n) / n`` and its truncation estimate."""
    if k < 2:
        raise InvalidOrderError("k must be >= 2")
    if J < 10:
        raise ContractError("truncation index J must be >= 10")
    toll = variance_toll(k, J) if toll is None else toll
    if len(toll.total) < J + 1:
        raise ContractError(f"variance toll covers n <= {len(toll.total) - 1}, need J = {J}")
    b = np.asarray(toll.total[: J + 1], dtype=float)
    neg = [n for n in range(2, J + 1) if min(toll.square[n], toll.left[n], toll.right[n]) < -1e-9 * (1 + abs(b[n]))]
    if neg:
        raise ArithmeticError(f"negative variance toll pieces at n = {neg[:5]}")
    return _richardson(series_constant(b), J)


def limit_constants(k: int, J: int = 10_000, var_J: int = 2000) -> LimitConstants:
    mu, mu_err = mu_k(k, J)
    var, var_err = var_k(k, min(J, var_J))
    return LimitConstants(k, mu, mu_err, var, var_err, J, min(J, var_J))


# -------------------------------------------------------------- g table

@dataclass
class GTable:
    """``logg[r][s] = log g[r, s]``; row ``r`` is wider for small ``r``.

    The recurrence for ``g[r, s]`` reads ``g[r-1, s+k-1]``, so row ``r`` is
    filled up to ``s_max + (r_max - r)(k - 1)``.
    """

    k: int
    r_max: int
    s_max: int
    logg: list[np.ndarray] = field(repr=False)

    def log(self, r: int, s: int) -> float:
        return float(self.logg[r][s])

    def value(self, r: int, s: int) -> float:
        """``g[r, s]`` as a float (``inf`` on overflow)."""
        v = self.log(r, s)
        return math.exp(v) if v < 709.0 else math.inf

    def width(self, r: int) -> int:
        return len(self.logg[r]) - 1

    def items(self):
        """Yield ``(r, s, log g)`` over the requested ``r <= r_max, s <= s_max`` block."""
        for r in range(self.r_max + 1):
            for s in range(self.s_max + 1):
                yield r, s, self.log(r, s)


def rayleigh_log_moment(s: int) -> float:
    """``log(s! sqrt(pi) / Gamma((s + 1) / 2))``, the ``s``-th moment of Rayleigh(sqrt 2)."""
    if s == 0:
        return 0.0
    return log_factorial(s) + LOG_SQRT_PI - log_gamma((s + 1) / 2)


def _log_comb(r: int, l: int) -> float:
    return log_factorial(r) - log_factorial(l) - log_factorial(r - l)


def _grs_row0_term(logg, k, r, s):
    # log of sum_{l=1}^{r} C(r,l) g[l,0] g[r-l,s] Gamma((kl-1)/2) Gamma((k(r-l)+s+1)/2)
    terms = []
    for l in range(1, r + 1):
        terms.append(
            _log_comb(r, l)
            + logg[l][0]
            + logg[r - l][s]
            + log_gamma((k * l - 1) / 2)
            + log_gamma((k * (r - l) + s + 1) / 2)
        )
    return terms


def g_table(k: int, r_max: int, s_max: int) -> GTable:
    """Fill ``g[r, s]`` in lexicographic order.

    * ``g[0, s]`` are the Rayleigh(sqrt 2) moments;
    * ``s = 0``: ``g[r,0] = (sqrt(pi)(kr-2) Gamma((kr-1)/2))^-1 sum_{l=1}^{r-1} C(r,l) g[l,0] g[r-l,0]
      Gamma((kl-1)/2) Gamma((k(r-l)+1)/2) + kr Gamma(kr/2-1) / Gamma((kr-1)/2) g[r-1,k-1]``;
    * ``s > 0``: ``g[r,s] = (2 sqrt(pi) Gamma((kr+s+1)/2))^-1 sum_{l=1}^{r} C(r,l) g[l,0] g[r-l,s]
      Gamma((kl-1)/2) Gamma((k(r-l)+s+1)/2) + Gamma((kr+s)/2) / Gamma((kr+s+1)/2) (kr g[r-1,k+s-1] + s g[r,s-1])``.
    """
    if k < 3:
        raise InvalidOrderError("plane limit moments need k >= 3; k = 2 uses a shifted normalization")
    if r_max < 0 or s_max < 0:
        raise ContractError("r_max and s_max must be >= 0")
    widths = [s_max + (r_max - r) * (k - 1) for r in range(r_max + 1)]
    logg: list[np.ndarray] = [np.array([rayleigh_log_moment(s) for s in range(widths[0] + 1)])]
    for r in range(1, r_max + 1):
        row = np.empty(widths[r] + 1)
        logg.append(row)
        kr = k * r
        # s = 0
        parts = []
        if r >= 2:
            inner = [
                _log_comb(r, l)
                + logg[l][0]
                + logg[r - l][0]
                + log_gamma((k * l - 1) / 2)
                + log_gamma((k * (r - l) + 1) / 2)
                for l in range(1, r)
            ]
            parts.append(log_sum_exp(inner) - LOG_SQRT_PI - math.log(kr - 2) - log_gamma((kr - 1) / 2))
        parts.append(math.log(kr) + log_gamma(kr / 2 - 1) - log_gamma((kr - 1) / 2) + logg[r - 1][k - 1])
        row[0] = log_sum_exp(parts)
        for s in range(1, widths[r] + 1):
            first = log_sum_exp(_grs_row0_term(logg, k, r, s)) - math.log(2.0) - LOG_SQRT_PI - log_gamma((kr + s + 1) / 2)
            ratio = log_gamma((kr + s) / 2) - log_gamma((kr + s + 1) / 2)
            second = ratio + log_sum_exp([math.log(kr) + logg[r - 1][k + s - 1], math.log(s) + row[s - 1]])
            row[s] = log_sum_exp([first, second])
    return GTable(k, r_max, s_max, logg)


def mean_constant_plane(k: int) -> float:
    """Coefficient of ``n^{k/2}`` in the plane mean: ``2 k! sqrt(pi) / ((k-2) Gamma((k-1)/2))``."""
    if k < 3:
        raise InvalidOrderError("k must be >= 3")
    return 2 * math.factorial(k) * SQRT_PI / ((k - 2) * math.gamma((k - 1) / 2))


@dataclass
class Report:
    """Generic check outcome: ``passed`` plus the numbers that decided it."""

    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details, "violations": self.violations}


def g_consistency_check(table: GTable, rel_tol: float = 1e-10, rayleigh_tol: float = 1e-12) -> Report:
    """Compare table entries against independently computed closed forms.

    * ``g[1,0]`` vs ``2 k! sqrt(pi) / ((k - 2) Gamma((k - 1)/2))``;
    * ``g[0,s]`` vs ``2^s Gamma(1 + s/2)`` (Rayleigh moments via the
      duplication formula) and the ratio ``g[0,s+2] / g[0,s] = 2(s + 2)``;
    * the ``s > 0`` recurrence at ``r = 0`` reproduces the Rayleigh row.
    """
    k = table.k
    violations = []
    details: dict = {}
    if table.r_max >= 1:
        rec = table.value(1, 0)
        closed = mean_constant_plane(k)
        gap = abs(rec - closed) / closed
        details.update(g10_recurrence=rec, g10_closed=closed, g10_rel_gap=gap)
        if gap > rel_tol:
            violations.append(("g10", gap))
    worst = 0.0
    for s in range(min(table.width(0), 170) + 1):
        ref = s * math.log(2.0) + log_gamma(1 + s / 2)
        rel = abs(math.expm1(table.log(0, s) - ref))
        worst = max(worst, rel)
        if rel > rayleigh_tol:
            violations.append(("rayleigh", s, rel))
        if s + 2 <= table.width(0):
            ratio = math.exp(table.log(0, s + 2) - table.log(0, s))
            rr = abs(ratio / (2 * (s + 2)) - 1)
            if rr > rayleigh_tol:
                violations.append(("rayleigh_ratio", s, rr))
        if s >= 1:
            via_rec = log_gamma(s / 2) - log_gamma((s + 1) / 2) + math.log(s) + table.log(0, s - 1)
            rel_rec = abs(math.expm1(via_rec - table.log(0, s)))
            if rel_rec > rayleigh_tol:
                violations.append(("rayleigh_recurrence", s, rel_rec))
    details["rayleigh_max_rel_gap"] = worst
    return Report("g_consistency", not violations, details, violations)


def carleman_diagnostic(table: GTable, R: int | None = None, window: tuple[int, int] | None = None, band: float = 0.2) -> Report:
    """Behaviour of the Carleman terms ``t_r = g[r,0]^(-1/(2r))``.

    Reports partial sums of ``t_r``, the products ``t_r r`` and
    ``t_r r^(k/4)``, and a log-log slope fitted over ``window`` (default the
    upper half ``[R/2, R]``).  A slope shallower than ``-1.125`` (midway
    between the ``1/r`` decay of ``k = 4`` and the ``r^(-5/4)`` decay of
    ``k = 5``) is flagged "divergent-like".
    """
    R = table.r_max if R is None else R
    if R > table.r_max or R < 2:
        raise ContractError(f"need 2 <= R <= r_max = {table.r_max}")
    k = table.k
    r = np.arange(1, R + 1)
    logt = np.array([-table.log(int(x), 0) / (2 * x) for x in r])
    t = np.exp(logt)
    lo, hi = window if window is not None else (R // 2, R)
    sel = (r >= lo) & (r <= hi)
    slope = float(np.polyfit(np.log(r[sel]), logt[sel], 1)[0])
    by_r = t * r
    by_rk = t * r ** (k / 4)

    def spread(x):
        seg = x[sel]
        return float(seg.max() / seg.min() - 1)

    details = {
        "k": k,
        "R": R,
        "window": [int(lo), int(hi)],
        "partial_sums": np.cumsum(t).tolist(),
        "terms": t.tolist(),
        "term_times_r": by_r.tolist(),
        "term_times_r_k4": by_rk.tolist(),
        "slope": slope,
        "spread_r": spread(by_r),
        "spread_r_k4": spread(by_rk),
        "band": band,
        "classification": "divergent-like" if slope > -1.125 else "convergent-like",
    }
    stable = details["spread_r_k4"] <= band
    return Report("carleman", stable, details)


def appendix_bound_check(table: GTable, A_grid=None) -> Report:
    """Least ``A`` in the grid with ``log g[r,s] <= (kr+s) log A + log((kr+s)!) / 2`` everywhere."""
    if A_grid is None:
        A_grid = [1.0 + 0.25 * i for i in range(1, 400)]
    k = table.k
    need = -math.inf
    binding = None
    for r, s, lg in table.items():
        m = k * r + s
        if m == 0:
            continue
        req = (lg - 0.5 * log_factorial(m)) / m
        if req > need:
            need, binding = req, (r, s)
    a_min = math.exp(need)
    feasible = sorted(a for a in A_grid if a >= a_min)
    details = {"A_min": a_min, "binding": binding, "k": k}
    if not feasible:
        details["max_violation_log"] = need - math.log(max(A_grid))
        return Report("appendix_bound", False, details)
    details["A"] = feasible[0]
    return Report("appendix_bound", True, details)


def gamma_ratio_check(a_max: int = 60, tol: float = 1e-12) -> Report:
    """``Gamma(a/2) Gamma(b/2) / (sqrt(pi) Gamma((a+b-1)/2)) <= 1`` on the integer grid."""
    bad = []
    worst = 0.0
    for a in range(1, a_max + 1):
        for b in range(1, a_max + 1):
            v = math.exp(log_gamma(a / 2) + log_gamma(b / 2) - LOG_SQRT_PI - log_gamma((a + b - 1) / 2))
            worst = max(worst, v)
            if v > 1 + tol:
                bad.append((a, b, v))
    return Report("gamma_ratio", not bad, {"max_ratio": worst}, bad)


def binomial_domination_check(r_max: int = 20, s_max: int = 10, ks=(2, 3, 4, 5)) -> Report:
    """``C(r,l)^2 <= C(kr+s, kl)`` in exact integers."""
    bad = []
    for k in ks:
        for r in range(r_max + 1):
            for l in range(r + 1):
                lhs = math.comb(r, l) ** 2
                for s in range(s_max + 1):
                    if lhs > math.comb(k * r + s, k * l):
                        bad.append((k, r, l, s))
    return Report("binomial_domination", not bad, {"cases": len(ks) * (r_max + 1) * (r_max + 2) // 2 * (s_max + 1)}, bad)


# ------------------------------------------------------- transfer checks

TRANSFER_LEMMAS = ("NP-one-sided", "NP-two-sided-i", "NP-two-sided-ii", "P-one-sided", "P-two-sided-i", "P-two-sided-ii")


def _np_linear_constant(c: float, alpha: float, terms: int = 80) -> float:
    """``2 c sum_{j>=2} j^alpha / (j (j + 1))`` via ``1/(j+1) = sum_m (-1)^m j^(-m-1)``."""
    m = np.arange(terms)
    tail = scipy.special.zeta(2 + m - alpha, 2)  # sum_{j>=2} j^-(2+m-alpha)
    return float(2 * c * np.sum((-1.0) ** m * tail))


def _transfer_prediction(lemma: str, c: float, alpha: float, n: int) -> float:
    if lemma == "NP-one-sided":
        if alpha < 0:
            raise ContractError("NP-one-sided needs alpha >= 0")
        return c * math.log(n) if alpha == 0 else c * (alpha + 1) / alpha * n**alpha
    if lemma == "NP-two-sided-i":
        if not 0 <= alpha < 1:
            raise ContractError("NP-two-sided-i needs 0 <= alpha < 1")
        return _np_linear_constant(c, alpha) * n
    if lemma == "NP-two-sided-ii":
        if alpha <= 1:
            raise ContractError("NP-two-sided-ii needs alpha > 1")
        return c * (alpha + 1) * n**alpha / (alpha - 1)
    if lemma == "P-one-sided":
        if alpha <= -0.5:
            raise ContractError("P-one-sided needs alpha > -1/2")
        return c * math.exp(log_gamma(alpha + 0.5) - log_gamma(alpha + 1)) * n ** (alpha + 0.5)
    if lemma == "P-two-sided-i":
        if alpha != 0.5:
            raise ContractError("P-two-sided-i is stated for a toll ~ c sqrt(n) (alpha = 1/2)")
        return c * n * math.log(n) / SQRT_PI
    if lemma == "P-two-sided-ii":
        if alpha <= 0.5:
            raise ContractError("P-two-sided-ii needs alpha > 1/2")
        return c * math.exp(log_gamma(alpha - 0.5) - log_gamma(alpha)) * n ** (alpha + 0.5)
    raise ContractError(f"unknown lemma {lemma!r}; choose from {TRANSFER_LEMMAS}")


def transfer_check(lemma: str, c: float = 1.0, alpha: float = 0.0, N: int = 100_000) -> Report:
    """Solve the recurrence with toll ``b_n = c n^alpha`` and compare ``a_N`` with the prediction."""
    predicted = _transfer_prediction(lemma, c, alpha, N)
    model = TreeModel.NONPLANE if lemma.startswith("NP") else TreeModel.PLANE
    n = np.arange(1, N + 1, dtype=float)
    b = c * n**alpha
    solver = exact.solve_one_sided if lemma.endswith("one-sided") else exact.solve_two_sided
    a = solver(model, b, N, kind="float")
    a_N = float(a[-1])
    return Report(
        lemma,
        True,
        {"lemma": lemma, "c": c, "alpha": alpha, "N": N, "a_N": a_N, "predicted": predicted, "ratio": a_N / predicted},
    )


# --------------------------------------------------------- mean predictions

def plane_k2_linear_coefficient() -> float:
    return 4 * math.log(2) + 2 * EULER_GAMMA - 2


def predicted_mean(model: TreeModel | str, k: int, n: float, mu: float | None = None) -> float:
    """First-order (plane ``k = 2``: two-term) prediction of ``E Z_n``."""
    model = TreeModel.parse(model)
    if k < 2:
        raise InvalidOrderError("k must be >= 2")
    if model is TreeModel.NONPLANE:
        if mu is None:
            mu = 6.0 if k == 2 else mu_k(k)[0]
        return mu * n
    if k == 2:
        return 2 * n * math.log(n) + plane_k2_linear_coefficient() * n
    return mean_constant_plane(k) * n ** (k / 2)
