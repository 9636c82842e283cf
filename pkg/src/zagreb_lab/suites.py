"""Verification suites: each cross-checks independent computation routes.

A suite returns a :class:`SuiteResult` whose ``checks`` are
:class:`~zagreb_lab.asymptotics.Report` objects; ``failures`` is the
machine-readable list the CLI prints on a red run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import asymptotics as asy
from . import exact, montecarlo
from .asymptotics import Report
from .special import EULER_GAMMA, SQRT_PI, harmonic
from .trees import TreeModel

MODELS = (TreeModel.NONPLANE, TreeModel.PLANE)


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[dict]:
        return [c.to_json() for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "failures": [c.name for c in self.checks if not c.passed],
        }


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ----------------------------------------------------------------- exact

def oracle_suite(n_max: int = 7, ks=(2, 3, 4), weight: int = 8) -> SuiteResult:
    """Enumeration, joint law and moment table agree exactly on ``k*i + l <= weight``."""
    out = SuiteResult("oracle")
    for model in MODELS:
        enums = {n: exact.enumerate_all(model, n) for n in range(1, n_max + 1)}
        for k in ks:
            table = exact.moment_table(model, k, n_max, weight)
            mismatches = []
            compared = 0
            for n in range(1, n_max + 1):
                pmf = exact.joint_pmf(model, k, n)
                if pmf.entries != enums[n].joint(k):
                    mismatches.append({"n": n, "what": "joint law"})
                for i, l in exact.weight_entries(k, weight):
                    a = enums[n].moment(k, i, l)
                    b = pmf.moment(i, l)
                    c = table.moment(n, i, l)
                    compared += 1
                    if not a == b == c:
                        mismatches.append({"n": n, "i": i, "l": l, "enum": str(a), "pmf": str(b), "table": str(c)})
            out.checks.append(
                Report(f"oracle:{model.value}:k={k}", not mismatches, {"n_max": n_max, "compared": compared}, mismatches)
            )
    return out


def closed_forms_suite(n_max: int = 200, mean_range: tuple[int, int] = (100, 2000)) -> SuiteResult:
    """Exact closed forms against the DP, then the plane ``k = 2`` mean remainder."""
    out = SuiteResult("closed-forms")
    np_tab = exact.moment_table(TreeModel.NONPLANE, 2, n_max, 2)
    p_tab = exact.moment_table(TreeModel.PLANE, 2, n_max, 2)
    bad_np = [n for n in range(1, n_max + 1) if np_tab.moment(n, 0, 1) != harmonic(n - 1)]
    bad_r = [n for n in range(1, n_max + 1) if p_tab.moment(n, 0, 1) != exact.plane_mean_rootdeg(n)]
    bad_z = [n for n in range(1, n_max + 1) if p_tab.moment(n, 1, 0) != exact.plane_mean_z2(n)]
    out.checks.append(Report("nonplane_mean_rootdeg", not bad_np, {"n_max": n_max}, bad_np))
    out.checks.append(Report("plane_mean_rootdeg", not bad_r, {"n_max": n_max}, bad_r))
    out.checks.append(Report("plane_mean_z2", not bad_z, {"n_max": n_max}, bad_z))
    out.checks.append(plane_mean_remainder_check(*mean_range))
    return out


def plane_mean_remainder_check(lo: int = 100, hi: int = 2000) -> Report:
    """``d_n = (E Z_n - 2n log n - c2 n) / sqrt(n)`` stays bounded with no growth trend.

    Boundedness: ``max |d_n|`` over the upper half of the range does not exceed
    the maximum over the lower half.  Trend: the least-squares slope of
    ``|d_n|`` against ``log n`` is not positive.
    """
    tab = exact.moment_table(TreeModel.PLANE, 2, hi, 2, kind="float", n_limit=hi)
    ns = np.arange(lo, hi + 1)
    d = np.array([(float(tab.moment(int(n), 1, 0)) - asy.predicted_mean(TreeModel.PLANE, 2, int(n))) / math.sqrt(n) for n in ns])
    mid = (lo + hi) // 2
    first, second = np.abs(d[ns <= mid]).max(), np.abs(d[ns > mid]).max()
    slope = float(np.polyfit(np.log(ns), np.abs(d), 1)[0])
    details = {
        "range": [lo, hi],
        "max_abs_lower_half": float(first),
        "max_abs_upper_half": float(second),
        "slope_vs_log_n": slope,
        "d_first": float(d[0]),
        "d_last": float(d[-1]),
        "limit_hint": -2 * SQRT_PI,
        "linear_coefficient": 4 * math.log(2) + 2 * EULER_GAMMA - 2,
    }
    return Report("plane_mean_remainder", bool(second <= first and slope <= 0), details)


# ------------------------------------------------------------ asymptotics

def constants_suite(k: int = 2, J: int = 10_000, target: float = 6.0, tol: float = 1e-2) -> SuiteResult:
    """``mu_2`` within ``tol`` of 6, with a truncation estimate covering the gap."""
    out = SuiteResult("constants")
    mu, err = asy.mu_k(k, J)
    gap = abs(mu - target)
    out.checks.append(Report("mu", gap < tol and gap <= err, {"k": k, "J": J, "mu": mu, "mu_err": err, "gap": gap, "tol": tol}))
    mu2, err2 = asy.mu_k(k, 2 * J)
    out.checks.append(
        Report("mu_cauchy", abs(mu2 - mu) <= err, {"mu_J": mu, "mu_2J": mu2, "step": abs(mu2 - mu), "mu_err": err})
    )
    return out


TRANSFER_EXAMPLES = (
    # lemma, c, alpha, target of a_N / normalization, relative tolerance
    ("P-one-sided", 1.0, 0.0, SQRT_PI, 0.02),
    ("P-two-sided-i", 1.0, 0.5, 1 / SQRT_PI, 0.05),
    ("NP-two-sided-ii", 1.0, 2.0, 3.0, 0.02),
)


def _normalization(lemma: str, alpha: float, N: int) -> float:
    if lemma == "P-one-sided":
        return N ** (alpha + 0.5)
    if lemma == "P-two-sided-i":
        return N * math.log(N)
    return float(N) ** alpha


def transfer_suite(N: int = 100_000) -> SuiteResult:
    out = SuiteResult("transfer")
    for lemma, c, alpha, target, tol in TRANSFER_EXAMPLES:
        rep = asy.transfer_check(lemma, c, alpha, N)
        value = rep.details["a_N"] / _normalization(lemma, alpha, N)
        rel = abs(value / target - 1)
        rep.details.update(normalized=value, target=target, rel_gap=rel, tol=tol)
        rep.passed = rel < tol
        out.checks.append(rep)
    return out


def gtable_suite(ks=(3, 4, 5), R: int = 60, s_max: int = 20) -> SuiteResult:
    """Consistency of ``g`` for each ``k`` and the Carleman bands for ``k = 4, 5``."""
    out = SuiteResult("gtable")
    SQ = SQRT_PI
    closed = {3: 12 * SQ, 4: 48.0}
    for k in ks:
        table = asy.g_table(k, R, s_max)
        rep = asy.g_consistency_check(table)
        rep.name = f"g_consistency:k={k}"
        if k in closed:
            gap = abs(table.value(1, 0) / closed[k] - 1)
            rep.details["g10_vs_literal"] = gap
            rep.passed = rep.passed and gap < 1e-10
        out.checks.append(rep)
        if k in (4, 5):
            c = asy.carleman_diagnostic(table, R, window=(30, 60))
            c.name = f"carleman:k={k}"
            c.details = {key: v for key, v in c.details.items() if key not in ("terms", "partial_sums", "term_times_r", "term_times_r_k4")}
            out.checks.append(c)
    return out


def appendix_suite(ks=(3, 4, 5), r_max: int = 30, s_max: int = 10) -> SuiteResult:
    out = SuiteResult("appendix")
    for k in ks:
        rep = asy.appendix_bound_check(asy.g_table(k, r_max, s_max))
        rep.name = f"appendix_bound:k={k}"
        out.checks.append(rep)
    out.checks.append(asy.gamma_ratio_check())
    out.checks.append(asy.binomial_domination_check())
    return out


# ------------------------------------------------------------ simulation

def clt_suite(seed: int, sizes=(1_000, 10_000), replicates: int = 100_000, k: int = 2, workers=None) -> SuiteResult:
    out = SuiteResult("clt")
    cfg = montecarlo.SimConfig(TreeModel.NONPLANE, k, tuple(sizes), replicates, seed, workers)
    summary = montecarlo.simulate(cfg)
    constants = asy.limit_constants(k)
    rep = montecarlo.clt_check(summary, constants)
    out.checks.append(rep)
    return out


def plane_limit_suite(seed: int, sizes=(100, 1_000, 10_000), replicates: int = 20_000, ks=(3, 4), workers=None) -> SuiteResult:
    out = SuiteResult("plane-limit")
    for k in ks:
        cfg = montecarlo.SimConfig(TreeModel.PLANE, k, tuple(sizes), replicates, seed, workers)
        rep = montecarlo.plane_limit_check(montecarlo.simulate(cfg), asy.g_table(k, 4, 4))
        rep.name = f"plane_limit:k={k}"
        out.checks.append(rep)
    return out


SUITES = {
    "oracle": oracle_suite,
    "closed-forms": closed_forms_suite,
    "constants": constants_suite,
    "transfer": transfer_suite,
    "gtable": gtable_suite,
    "appendix": appendix_suite,
    "clt": clt_suite,
    "plane-limit": plane_limit_suite,
}
SEEDED = ("clt", "plane-limit")
