"""Seeded Monte Carlo simulation of Zagreb index and root degree.

Replicates of one size ``n`` are grouped into fixed blocks of
``BLOCK_SIZE`` trees.  Block ``b`` of size ``n`` draws from the PCG64
sub-stream ``(n, b)`` of the master seed, so every replicate is a pure
function of ``(seed, n, replicate index)`` and the number of workers never
changes a result.  Per-block moment accumulators are merged along a fixed
binary tree over block indices.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.stats

from . import _kernels, exact
from .asymptotics import GTable, LimitConstants, Report
from .errors import ContractError, InvalidOrderError, InvalidSizeError, ResourceError
from .special import harmonic
from .trees import TreeModel, draw_choices, grow_tree, make_rng
from .zagreb import zagreb_index

BLOCK_SIZE = 256
MAX_ORDER = 8
INT64_SAFE = 1 << 62
THREADS_ENV = "ZAGREB_LAB_THREADS"


# ------------------------------------------------------------ accumulator

@dataclass
class Moments:
    """Count, mean and centered power sums ``M[p] = sum (x - mean)^p`` for ``p <= 8``."""

    count: int = 0
    mean: float = 0.0
    M: list = field(default_factory=lambda: [0.0] * (MAX_ORDER + 1))

    @classmethod
    def from_values(cls, x: np.ndarray) -> "Moments":
        x = np.asarray(x, dtype=np.float64)
        if len(x) == 0:
            return cls()
        mean = float(x.mean())
        d = x - mean
        M = [0.0, 0.0]
        pw = d.copy()
        for _ in range(2, MAX_ORDER + 1):
            pw = pw * d
            M.append(float(pw.sum()))
        return cls(len(x), mean, M)

    def merge(self, other: "Moments") -> "Moments":
        """Pairwise combination of centered power sums (exact in real arithmetic)."""
        if other.count == 0:
            return Moments(self.count, self.mean, list(self.M))
        if self.count == 0:
            return Moments(other.count, other.mean, list(other.M))
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        A, B = self.M, other.M
        out = [0.0, 0.0]
        for p in range(2, MAX_ORDER + 1):
            acc = A[p] + B[p]
            for j in range(1, p - 1):
                acc += math.comb(p, j) * delta**j * ((-nb / n) ** j * A[p - j] + (na / n) ** j * B[p - j])
            acc += (na * nb / n * delta) ** p * (1.0 / nb ** (p - 1) - (-1.0 / na) ** (p - 1))
            out.append(acc)
        return Moments(n, self.mean + delta * nb / n, out)

    def central(self, p: int) -> float:
        """Population central moment ``M[p] / count``."""
        if p == 0:
            return 1.0
        if p == 1:
            return 0.0
        return self.M[p] / self.count

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        return self.M[2] / (self.count - 1) if self.count > 1 else 0.0

    def standardized(self, p: int) -> float:
        m2 = self.central(2)
        return self.central(p) / m2 ** (p / 2) if m2 > 0 else math.nan

    def raw(self, r: int, scale: float = 1.0) -> float:
        """``E (x / scale)^r`` from the centered sums."""
        mu = self.mean / scale
        return sum(math.comb(r, p) * mu ** (r - p) * self.central(p) / scale**p for p in range(r + 1))

    def raw_stderr(self, r: int, scale: float = 1.0) -> float:
        if 2 * r > MAX_ORDER:
            raise ContractError(f"standard error of order {r} needs moments up to {2 * r}")
        v = self.raw(2 * r, scale) - self.raw(r, scale) ** 2
        return math.sqrt(max(v, 0.0) / self.count)

    def standardized_stderr(self, p: int) -> float:
        """Standard error of the mean of ``u^p`` for the standardized variable ``u``."""
        if 2 * p > MAX_ORDER:
            raise ContractError(f"standard error of order {p} needs moments up to {2 * p}")
        v = self.standardized(2 * p) - self.standardized(p) ** 2
        return math.sqrt(max(v, 0.0) / self.count)

    def to_json(self) -> dict:
        return {"count": self.count, "mean": self.mean, "M": self.M}

    @classmethod
    def from_json(cls, data: dict) -> "Moments":
        return cls(int(data["count"]), float(data["mean"]), [float(x) for x in data["M"]])


def tree_reduce(parts: list[Moments]) -> Moments:
    """Merge in a fixed balanced binary tree over list positions."""
    if not parts:
        return Moments()
    while len(parts) > 1:
        nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


# --------------------------------------------------------------- config

HIST_STATS = ("z_scaled", "z_per_n", "r_scaled")


@dataclass(frozen=True)
class HistSpec:
    stat: str = "z_scaled"
    lo: float = 0.0
    hi: float = 1.0
    bins: int = 50

    def __post_init__(self):
        if self.stat not in HIST_STATS:
            raise ContractError(f"histogram stat must be one of {HIST_STATS}")
        if not self.hi > self.lo or self.bins < 1:
            raise ContractError("histogram needs lo < hi and bins >= 1")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)


@dataclass(frozen=True)
class SimConfig:
    model: TreeModel
    k: int
    sizes: tuple
    replicates: int
    seed: int = 0
    workers: int | None = None
    r_max: int = 4
    hist: HistSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", TreeModel.parse(self.model))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if self.k < 2:
            raise InvalidOrderError("k must be >= 2")
        if self.replicates < 1:
            raise ContractError("replicates must be >= 1")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise InvalidSizeError("sizes must be non-empty and >= 1")
        if list(self.sizes) != sorted(set(self.sizes)):
            raise ContractError("sizes must be strictly ascending")
        if not 1 <= self.r_max <= MAX_ORDER // 2:
            raise ContractError(f"r_max must lie in 1..{MAX_ORDER // 2}")

    def to_json(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        d["sizes"] = list(self.sizes)
        d.pop("workers")  # results never depend on it
        return d


def resolve_workers(workers: int | None) -> int:
    """Worker count: ``ZAGREB_LAB_THREADS`` wins over the argument; default 1."""
    env = os.environ.get(THREADS_ENV)
    if env:
        workers = int(env)
    elif workers is None:
        workers = 1
    if workers < 1:
        raise ContractError("workers must be >= 1")
    return workers


# -------------------------------------------------------------- summary

@dataclass
class SizeSummary:
    n: int
    zagreb: Moments
    root: Moments
    scale_z: float
    scale_r: float
    hist: list | None = None
    bigint_rows: int = 0

    def z_moment(self, r: int) -> float:
        return self.zagreb.raw(r, self.scale_z)

    def r_moment(self, s: int) -> float:
        return self.root.raw(s, self.scale_r)

    def to_json(self, r_max: int) -> dict:
        z, R = self.zagreb, self.root
        out = {
            "n": self.n,
            "replicates": z.count,
            "z_mean": z.mean,
            "z_mean_stderr": math.sqrt(z.variance / z.count),
            "z_var": z.variance,
            "z_skew": z.standardized(3),
            "z_kurt": z.standardized(4),
            "z_skew_stderr": z.standardized_stderr(3),
            "z_kurt_stderr": z.standardized_stderr(4),
            "r_mean": R.mean,
            "r_var": R.variance,
            "scale_z": self.scale_z,
            "scale_r": self.scale_r,
            "z_scaled_moments": [self.z_moment(r) for r in range(1, r_max + 1)],
            "z_scaled_stderr": [z.raw_stderr(r, self.scale_z) for r in range(1, r_max + 1)],
            "r_scaled_moments": [self.r_moment(s) for s in range(1, r_max + 1)],
            "r_scaled_stderr": [R.raw_stderr(s, self.scale_r) for s in range(1, r_max + 1)],
            "bigint_rows": self.bigint_rows,
            "accumulators": {"zagreb": z.to_json(), "root": R.to_json()},
        }
        if self.hist is not None:
            out["histogram"] = self.hist
        return out


@dataclass
class SimSummary:
    config: SimConfig
    sizes: dict
    partial: bool = False

    def __getitem__(self, n: int) -> SizeSummary:
        return self.sizes[n]

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "partial": self.partial,
            "block_size": BLOCK_SIZE,
            "sizes": [self.sizes[n].to_json(self.config.r_max) for n in sorted(self.sizes)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def csv_rows(self):
        """``(n, stat, order, value, stderr)`` rows."""
        for n in sorted(self.sizes):
            s = self.sizes[n]
            z, R = s.zagreb, s.root
            yield n, "z_mean", 1, z.mean, math.sqrt(z.variance / z.count)
            yield n, "z_var", 2, z.variance, math.sqrt(max(z.central(4) - z.central(2) ** 2, 0) / z.count)
            yield n, "z_std_moment", 3, z.standardized(3), z.standardized_stderr(3)
            yield n, "z_std_moment", 4, z.standardized(4), z.standardized_stderr(4)
            for r in range(1, self.config.r_max + 1):
                yield n, "z_scaled", r, s.z_moment(r), z.raw_stderr(r, s.scale_z)
            for r in range(1, self.config.r_max + 1):
                yield n, "r_scaled", r, s.r_moment(r), R.raw_stderr(r, s.scale_r)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "stat", "order", "value", "stderr"])
        for row in self.csv_rows():
            w.writerow([row[0], row[1], row[2], repr(float(row[3])), repr(float(row[4]))])
        return buf.getvalue()

    def histogram_csv(self, n: int) -> str:
        s = self.sizes[n]
        if s.hist is None:
            raise ContractError("no histogram was requested")
        edges = self.config.hist.edges
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        for i, c in enumerate(s.hist):
            w.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), c])
        return buf.getvalue()


def zagreb_scale(model: TreeModel, k: int, n: int) -> float:
    """``n^{k/2}``, the plane normalization; also used for non-plane moment columns."""
    return float(n) ** (k / 2)


# ------------------------------------------------------------ simulation

def _block_values(config: SimConfig, n: int, block: int, count: int):
    model, k = config.model, config.k
    rng = make_rng(config.seed, n, block)
    choices = draw_choices(rng, model, n, count)
    zs, rs, maxdeg, _ = _kernels.grow_stats_batch(choices, model.is_plane, k, False)
    z = zs.astype(np.float64)
    bigint = 0
    for row in np.nonzero(n * maxdeg.astype(object) ** k >= INT64_SAFE)[0]:
        z[row] = float(zagreb_index(grow_tree(model, choices[row]), k))
        bigint += 1
    return z, rs.astype(np.float64), bigint


def _run_block(config: SimConfig, n: int, block: int, count: int):
    z, r, bigint = _block_values(config, n, block, count)
    sz = zagreb_scale(config.model, config.k, n)
    sr = math.sqrt(n)
    hist = None
    if config.hist is not None:
        h = config.hist
        vals = {"z_scaled": z / sz, "z_per_n": z / n, "r_scaled": r / sr}[h.stat]
        hist = np.histogram(vals, bins=h.edges)[0]
    return Moments.from_values(z), Moments.from_values(r), hist, bigint


def _blocks(replicates: int) -> list[tuple[int, int]]:
    full, rest = divmod(replicates, BLOCK_SIZE)
    out = [(b, BLOCK_SIZE) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out


def simulate(config: SimConfig) -> SimSummary:
    """Run every size of the ladder; all-or-nothing on resource failure."""
    workers = resolve_workers(config.workers)
    sizes = {}
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for n in config.sizes:
                jobs = _blocks(config.replicates)
                results = list(pool.map(lambda job: _run_block(config, n, *job), jobs))
                hist = None
                if config.hist is not None:
                    hist = np.sum([res[2] for res in results], axis=0).astype(int).tolist()
                sizes[n] = SizeSummary(
                    n,
                    tree_reduce([res[0] for res in results]),
                    tree_reduce([res[1] for res in results]),
                    zagreb_scale(config.model, config.k, n),
                    math.sqrt(n),
                    hist,
                    sum(res[3] for res in results),
                )
    except MemoryError as exc:
        raise ResourceError(f"simulation ran out of memory at n = {n}", attempted=config.replicates) from exc
    return SimSummary(config, sizes)


# --------------------------------------------------------------- checks

def gaussian_moment(r: int) -> float:
    """``E N(0,1)^r``: zero for odd ``r``, ``(2m)! / (2^m m!)`` for ``r = 2m``."""
    if r % 2:
        return 0.0
    m = r // 2
    return math.factorial(2 * m) / (2**m * math.factorial(m))


def constant_normalized_moment(z: Moments, r: int, shift: float, scale: float) -> float:
    """``E ((x - shift) / scale)^r`` from centered sums."""
    delta = (z.mean - shift) / scale
    return sum(math.comb(r, p) * delta ** (r - p) * z.central(p) / scale**p for p in range(r + 1))


def clt_check(summary: SimSummary, constants: LimitConstants, skew_tol: float = 0.1, kurt_tol: float = 0.15, root_tol: float = 0.15) -> Report:
    """Gaussian shape of the non-plane index, self-normalized and constant-normalized.

    Passing needs ``|m3*| < skew_tol`` and ``|m4* - 3| < kurt_tol`` at the
    largest size and a shrinking deviation along the ladder.  The root-degree
    statistic ``(R - log n) / sqrt(log n)`` is reported with its exact finite-n
    bias ``(H_{n-1} - log n) / sqrt(log n)``; it does not affect ``passed``.
    """
    cfg = summary.config
    if cfg.model is not TreeModel.NONPLANE:
        raise ContractError("clt_check applies to non-plane summaries")
    if constants.k != cfg.k:
        raise ContractError(f"constants are for k = {constants.k}, summary for k = {cfg.k}")
    rows = []
    for n in sorted(summary.sizes):
        s = summary.sizes[n]
        z, R = s.zagreb, s.root
        skew, kurt = z.standardized(3), z.standardized(4)
        scale = constants.sigma * math.sqrt(n)
        const = {r: constant_normalized_moment(z, r, constants.mu * n, scale) for r in range(1, 5)}
        ln = math.log(n) if n > 1 else math.nan
        root_stat = (R.mean - ln) / math.sqrt(ln) if n > 1 else math.nan
        root_bias = (float(harmonic(n - 1)) - ln) / math.sqrt(ln) if n > 1 else math.nan
        rows.append(
            {
                "n": n,
                "skew": skew,
                "kurt": kurt,
                "skew_z": skew / z.standardized_stderr(3) if z.count > 1 else math.nan,
                "kurt_z": (kurt - 3) / z.standardized_stderr(4) if z.count > 1 else math.nan,
                "deviation": max(abs(skew), abs(kurt - 3)),
                "constant_normalized": const,
                "gaussian_targets": {r: gaussian_moment(r) for r in range(1, 5)},
                "root_stat": root_stat,
                "root_stderr": math.sqrt(R.variance / R.count / ln) if n > 1 else math.nan,
                "root_exact_bias": root_bias,
                "root_within_tol": abs(root_stat) < root_tol,
            }
        )
    last = rows[-1]
    shrinking = all(a["deviation"] > b["deviation"] for a, b in zip(rows, rows[1:]))
    passed = abs(last["skew"]) < skew_tol and abs(last["kurt"] - 3) < kurt_tol and shrinking
    details = {
        "rows": rows,
        "skew_tol": skew_tol,
        "kurt_tol": kurt_tol,
        "root_tol": root_tol,
        "shrinking": shrinking,
        "tolerance_note": "Gaussian sampling SE sqrt(6/N), sqrt(24/N) plus finite-n margin",
    }
    return Report("clt", passed, details)


def plane_limit_check(summary: SimSummary, table: GTable, z_tol: float = 0.15, r_tol: float = 0.03, orders: int | None = None) -> Report:
    """Sample moments of ``Z/n^{k/2}`` and ``R/sqrt(n)`` against ``g[r,0]`` and ``g[0,s]``.

    Passing needs the first moments at the largest size within ``z_tol`` and
    ``r_tol`` (relative) and a strictly decreasing first-moment deviation of
    the scaled index along the size ladder.
    """
    cfg = summary.config
    if cfg.k == 2:
        raise InvalidOrderError("k = 2 plane trees need a different normalization; use predicted_mean for the mean expansion")
    if cfg.model is not TreeModel.PLANE:
        raise ContractError("plane_limit_check applies to plane summaries")
    if table.k != cfg.k:
        raise ContractError(f"g-table is for k = {table.k}, summary for k = {cfg.k}")
    orders = cfg.r_max if orders is None else orders
    if orders > table.r_max or orders > table.width(0):
        raise ContractError("g-table too small for the requested orders")
    rows = []
    for n in sorted(summary.sizes):
        s = summary.sizes[n]
        zdev = {r: s.z_moment(r) / table.value(r, 0) - 1 for r in range(1, orders + 1)}
        rdev = {q: s.r_moment(q) / table.value(0, q) - 1 for q in range(1, orders + 1)}
        exact_r = (exact.plane_mean_rootdeg(n) if n <= 5000 else math.nan)
        rows.append(
            {
                "n": n,
                "z_moments": {r: s.z_moment(r) for r in zdev},
                "z_rel_dev": zdev,
                "z_stderr": {r: s.zagreb.raw_stderr(r, s.scale_z) for r in zdev},
                "r_moments": {q: s.r_moment(q) for q in rdev},
                "r_rel_dev": rdev,
                "r_exact_mean_scaled": float(exact_r) / math.sqrt(n) if exact_r == exact_r else math.nan,
            }
        )
    devs = [abs(row["z_rel_dev"][1]) for row in rows]
    monotone = all(a > b for a, b in zip(devs, devs[1:]))
    last = rows[-1]
    passed = abs(last["z_rel_dev"][1]) < z_tol and abs(last["r_rel_dev"][1]) < r_tol and monotone
    details = {"rows": rows, "z_tol": z_tol, "r_tol": r_tol, "monotone": monotone, "g10": table.value(1, 0)}
    return Report("plane_limit", passed, details)


def empirical_split_check(model: TreeModel | str, n: int, replicates: int, seed: int, alpha: float = 1e-3, sds: float = 3.0) -> Report:
    """Chi-square and per-cell binomial z-scores of the left-most subtree size."""
    model = TreeModel.parse(model)
    if n < 2:
        raise InvalidSizeError("split law needs n >= 2")
    law = exact.split_law(model, n)
    p = np.array([float(w) for w in law.weights])
    counts = np.zeros(n - 1, dtype=np.int64)
    for block, count in _blocks(replicates):
        choices = draw_choices(make_rng(seed, n, block), model, n, count)
        sp = _kernels.grow_stats_batch(choices, model.is_plane, 2, True)[3]
        counts += np.bincount(sp, minlength=n)[1:n]
    expected = replicates * p
    cell_z = (counts - expected) / np.sqrt(replicates * p * (1 - p)) if n > 2 else np.zeros(1)
    if n > 2:
        stat, pval = scipy.stats.chisquare(counts, expected)
    else:
        stat, pval = 0.0, 1.0
    max_z = float(np.max(np.abs(cell_z)))
    details = {
        "n": n,
        "model": model.value,
        "replicates": replicates,
        "counts": counts.tolist(),
        "expected": expected.tolist(),
        "chi2": float(stat),
        "p_value": float(pval),
        "max_cell_z": max_z,
        "alpha": alpha,
        "sds": sds,
    }
    return Report("empirical_split", bool(pval > alpha and max_z <= sds) or n == 2, details)
