"""Exact ground truth: split laws, recurrence solvers, joint laws, moment tables.

Two facts drive everything here.  Cutting a recursive tree of size ``n`` at
the edge between the root and its left-most subtree leaves two independent
recursive trees of sizes ``j`` and ``n - j``; and the left-most subtree size
has law ``pi[n, j]`` (uniform for non-plane trees, Catalan weighted for plane
trees).  If ``(Z, R)`` of the two parts are ``(z1, d1)`` and ``(z2, d2)``
then the glued tree has

    Z = z1 + f(d1) + z2 + f(d2),   R = d2 + 1,   f(d) = (d + 1)^k - d^k.

Exact computations work with *integer totals* over all trees of a size
(``sum over trees of Z^i R^l``); the number of trees with a size-``j``
left-most subtree is ``mult(n, j) * #trees(j) * #trees(n - j)`` where
``mult`` counts relabelings.  Moments are totals divided by the tree count.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import ContractError, InvalidOrderError, InvalidSizeError, ResourceError
from .special import catalan, harmonic, harmonic_sequence
from .trees import TreeModel, count_trees

Number = Fraction | float

EXACT_N_LIMIT = 1000
ENUMERATION_N_LIMIT = 9


# ---------------------------------------------------------------- split laws

@dataclass(frozen=True)
class SplitLaw:
    """Law of the left-most root-subtree size: ``weights[j - 1] = P(I_n = j)``."""

    model: TreeModel
    n: int
    weights: tuple[Fraction, ...]

    def __getitem__(self, j: int) -> Fraction:
        return self.weights[j - 1]

    def as_float(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])


def split_multiplicity(model: TreeModel, n: int, j: int) -> int:
    """Relabelings that glue a size-``j`` left-most subtree to a size-``n-j`` rest."""
    if model is TreeModel.NONPLANE:
        # node 2 is always the left-most subtree's root
        return math.comb(n - 2, j - 1)
    return math.comb(n - 1, j)


def split_law(model: TreeModel | str, n: int) -> SplitLaw:
    model = TreeModel.parse(model)
    if n < 2:
        raise InvalidSizeError(f"split law needs n >= 2, got {n}")
    if model is TreeModel.NONPLANE:
        w = tuple(Fraction(1, n - 1) for _ in range(n - 1))
    else:
        den = n * catalan(n)
        w = tuple(Fraction(2 * (n - j) * catalan(j) * catalan(n - j), den) for j in range(1, n))
    return SplitLaw(model, n, w)


def _scaled_catalan(n_max: int, dtype=np.float64) -> np.ndarray:
    """``c[m] = C_m / 4^m`` for ``m = 0..n_max`` (``c[0]`` unused, set to 0)."""
    c = np.zeros(n_max + 1, dtype=dtype)
    if n_max >= 1:
        c[1] = 0.25
        for m in range(1, n_max):
            c[m + 1] = c[m] * (2 * m - 1) / (2 * (m + 1))
    return c


def split_weights_float(model: TreeModel, n: int, dtype=np.float64, _cat=None) -> np.ndarray:
    """Floating ``pi[n, 1..n-1]`` without big-integer intermediates."""
    if model is TreeModel.NONPLANE:
        return np.full(n - 1, dtype(1) / dtype(n - 1), dtype=dtype)
    c = _scaled_catalan(n, dtype) if _cat is None else _cat
    j = np.arange(1, n)
    return (2 * (n - j)).astype(dtype) * c[1:n] * c[n - 1 : 0 : -1] / (n * c[n])


# ------------------------------------------------------- recurrence solvers

def _check_toll(b: Sequence, N: int) -> None:
    if N < 1:
        raise InvalidSizeError("N must be >= 1")
    if len(b) != N:
        raise ContractError(f"toll sequence has length {len(b)}, expected N = {N} (b[0] is b_1, unused)")


def _exact_solve(model: TreeModel, b: Sequence, N: int, two_sided: bool) -> list[Fraction]:
    a = [Fraction(0)] * (N + 1)
    for n in range(2, N + 1):
        law = split_law(model, n)
        acc = Fraction(b[n - 1])
        for j in range(1, n):
            rest = a[n - j] + (a[j] if two_sided else 0)
            acc += law[j] * rest
        a[n] = acc
    return a[1:]


def _fast_solve(model: TreeModel, b: Sequence, N: int, two_sided: bool) -> np.ndarray:
    b = np.asarray(b, dtype=float).copy()
    b[0] = 0.0
    if model is TreeModel.NONPLANE:
        a = np.zeros(N)
        factor = 2.0 if two_sided else 1.0
        running = 0.0
        for n in range(2, N + 1):
            running += a[n - 2]
            a[n - 1] = factor * running / (n - 1) + b[n - 1]
        return a
    # Plane: with c_m = C_m 4^-m and d_t = binom(2t, t) 4^-t the recurrences
    # become x = y * d (a convolution), where
    #   one-sided:  x_n = n c_n a_n,  y_n = n c_n b_n
    #   two-sided:  x_n =   c_n a_n,  y_n =   c_n b_n
    c = _scaled_catalan(N)
    idx = np.arange(N + 1, dtype=float)
    weight = c if two_sided else idx * c
    y = np.zeros(N + 1)
    y[2:] = weight[2:] * b[1:]
    d = np.ones(N + 1)
    for t in range(N):
        d[t + 1] = d[t] * (2 * t + 1) / (2 * t + 2)
    x = fftconvolve(y, d)[: N + 1]
    a = np.zeros(N)
    a[1:] = x[2:] / weight[2:]
    return a


def solve_one_sided(model: TreeModel | str, b: Sequence, N: int, kind: str = "exact"):
    """Solve ``a_n = sum_j pi[n,j] a_{n-j} + b_n`` with ``a_1 = 0``.

    ``b`` has length ``N`` with ``b[n-1] = b_n``; ``b[0]`` is ignored.
    ``kind='exact'`` sums the split law directly in rationals;
    ``kind='float'`` uses prefix sums (non-plane) or an FFT convolution of
    the generating-function solution (plane) and scales to ``N ~ 10^6``.
    """
    model = TreeModel.parse(model)
    _check_toll(b, N)
    if kind == "exact":
        return _exact_solve(model, b, N, two_sided=False)
    if kind == "float":
        return _fast_solve(model, b, N, two_sided=False)
    raise ContractError(f"unknown kind {kind!r}")


def solve_two_sided(model: TreeModel | str, b: Sequence, N: int, kind: str = "exact"):
    """Solve ``a_n = sum_j pi[n,j] (a_j + a_{n-j}) + b_n`` with ``a_1 = 0``."""
    model = TreeModel.parse(model)
    _check_toll(b, N)
    if kind == "exact":
        return _exact_solve(model, b, N, two_sided=True)
    if kind == "float":
        return _fast_solve(model, b, N, two_sided=True)
    raise ContractError(f"unknown kind {kind!r}")


def one_sided_closed_uniform(b: Sequence, N: int) -> list[Fraction]:
    """Closed solution of the uniform one-sided recurrence: ``b_n + sum_{j=2}^{n-1} b_j / j``."""
    _check_toll(b, N)
    out = [Fraction(0)]
    tail = Fraction(0)
    for n in range(2, N + 1):
        out.append(Fraction(b[n - 1]) + tail)
        tail += Fraction(b[n - 1], n)
    return out


# ---------------------------------------------------------------- joint law

@dataclass(frozen=True)
class JointPMF:
    model: TreeModel
    k: int
    n: int
    entries: dict[tuple[int, int], Fraction]

    def moment(self, i: int, l: int) -> Fraction:
        return sum((p * z**i * d**l for (z, d), p in self.entries.items()), Fraction(0))

    def marginal_z(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for (z, _), p in self.entries.items():
            out[z] = out.get(z, Fraction(0)) + p
        return out

    def marginal_d(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for (_, d), p in self.entries.items():
            out[d] = out.get(d, Fraction(0)) + p
        return out


def _check_k(k: int) -> None:
    if k < 2:
        raise InvalidOrderError(f"Zagreb order must be >= 2, got {k}")


def joint_counts(model: TreeModel | str, k: int, n: int, max_support: int = 2_000_000) -> list[Counter]:
    """``counts[m][(z, d)]`` = number of size-``m`` trees with index ``z`` and root degree ``d``."""
    model = TreeModel.parse(model)
    _check_k(k)
    if n < 1:
        raise InvalidSizeError("n must be >= 1")
    f = [(d + 1) ** k - d**k for d in range(n + 1)]
    counts: list[Counter] = [Counter(), Counter({(0, 0): 1})]
    left: list[Counter] = [Counter(), Counter({f[0]: 1})]
    right: list[Counter] = [Counter(), Counter({(f[0], 1): 1})]
    for m in range(2, n + 1):
        law: Counter = Counter()
        for j in range(1, m):
            mult = split_multiplicity(model, m, j)
            for (u2, v2), c2 in right[m - j].items():
                w = mult * c2
                for u1, c1 in left[j].items():
                    law[(u1 + u2, v2)] += w * c1
        if len(law) > max_support:
            raise ResourceError(f"joint support of size {len(law)} at n = {m} exceeds {max_support}", attempted=m)
        counts.append(law)
        lft: Counter = Counter()
        rgt: Counter = Counter()
        for (z, d), c in law.items():
            lft[z + f[d]] += c
            rgt[(z + f[d], d + 1)] += c
        left.append(lft)
        right.append(rgt)
    return counts


def joint_pmf(model: TreeModel | str, k: int, n: int, max_support: int = 2_000_000) -> JointPMF:
    """Exact law of ``(Z_n, R_n)`` built from the split decomposition."""
    model = TreeModel.parse(model)
    law = joint_counts(model, k, n, max_support)[n]
    total = count_trees(model, n)
    return JointPMF(model, k, n, {key: Fraction(c, total) for key, c in sorted(law.items())})


# ------------------------------------------------------------- moment table

def weight_entries(k: int, W: int) -> list[tuple[int, int]]:
    """All ``(i, l)`` with ``k*i + l <= W`` in lexicographic order."""
    return [(i, l) for i in range(W // k + 1) for l in range(W - k * i + 1)]


def _poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for a, x in enumerate(p):
        if x:
            for b, y in enumerate(q):
                out[a + b] += x * y
    return out


def _lift_map(k: int, entries: list[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Linear map from moments of ``(Z, R)`` to moments of ``(Z + f(R), R + 1)``.

    Row ``e`` lists ``(source index, integer coefficient)`` pairs giving
    ``E[(Z + f(R))^b (R + 1)^l]`` for ``entries[e] = (b, l)``.
    """
    index = {e: t for t, e in enumerate(entries)}
    f_poly = [math.comb(k, l) for l in range(k)]
    rows = []
    for b, l in entries:
        acc: dict[int, int] = {}
        shift = [math.comb(l, t) for t in range(l + 1)]
        for c in range(b + 1):
            poly = shift
            for _ in range(b - c):
                poly = _poly_mul(poly, f_poly)
            for e, coef in enumerate(poly):
                if coef:
                    t = index[(c, e)]
                    acc[t] = acc.get(t, 0) + math.comb(b, c) * coef
        rows.append(sorted(acc.items()))
    return rows


@dataclass
class MomentTable:
    """Mixed moments ``E(Z_n^i R_n^l)`` for ``1 <= n <= N`` and ``k*i + l <= W``.

    ``kind='exact'`` stores integer totals and returns :class:`Fraction`;
    ``kind='float'`` stores extended precision (``numpy.longdouble``) values.
    """

    model: TreeModel
    k: int
    N: int
    W: int
    kind: str
    entries: list[tuple[int, int]]
    _data: object = field(repr=False)
    _counts: list[int] | None = field(default=None, repr=False)

    def __post_init__(self):
        self._index = {e: t for t, e in enumerate(self.entries)}

    def moment(self, n: int, i: int, l: int) -> Number:
        if not 1 <= n <= self.N:
            raise ContractError(f"n = {n} outside table range 1..{self.N}")
        key = (i, l)
        if key not in self._index:
            raise ContractError(f"entry {key} exceeds weight cap W = {self.W} (k = {self.k})")
        t = self._index[key]
        if self.kind == "exact":
            return Fraction(self._data[n][t], self._counts[n])
        return self._data[n, t]

    def __getitem__(self, n: int) -> dict[tuple[int, int], Number]:
        return {e: self.moment(n, *e) for e in self.entries}

    def column(self, i: int, l: int) -> list[Number]:
        """``[E(Z_n^i R_n^l) for n = 1..N]``."""
        return [self.moment(n, i, l) for n in range(1, self.N + 1)]

    def totals(self, n: int) -> list[int]:
        if self.kind != "exact":
            raise ContractError("totals exist only for exact tables")
        return list(self._data[n])


def moment_table(
    model: TreeModel | str,
    k: int,
    N: int,
    W: int,
    kind: str = "exact",
    n_limit: int = EXACT_N_LIMIT,
    require_mean: bool = True,
) -> MomentTable:
    """Propagate raw mixed moments through the split decomposition.

    ``E(Z_n^i R_n^l) = sum_j pi[n,j] sum_a C(i,a) E[U_j^a] E[U_{n-j}^{i-a} V_{n-j}^l]``
    with ``U = Z + f(R)`` and ``V = R + 1``; both subtrees are strictly
    smaller than ``n`` so entries are filled in increasing ``n``.

    ``require_mean=False`` lets callers ask for pure root-degree tables
    (``W < k``).
    """
    model = TreeModel.parse(model)
    _check_k(k)
    if N < 1:
        raise InvalidSizeError("N must be >= 1")
    if require_mean and W < k:
        raise ContractError(f"weight cap W = {W} must be >= k = {k}")
    if kind == "exact" and N > n_limit:
        raise ResourceError(f"exact table with N = {N} exceeds limit {n_limit}; use kind='float'", attempted=N)
    entries = weight_entries(k, W)
    lift = _lift_map(k, entries)
    index = {e: t for t, e in enumerate(entries)}
    a_max = W // k
    left_idx = [index[(a, 0)] for a in range(a_max + 1)]
    # plan[t] lists (a, C(i,a), index of (i-a, l)) for entries[t] = (i, l)
    plan = [[(a, math.comb(i, a), index[(i - a, l)]) for a in range(i + 1)] for i, l in entries]
    if kind == "exact":
        return _exact_table(model, k, N, W, entries, lift, left_idx, plan)
    if kind == "float":
        return _float_table(model, k, N, W, entries, lift, left_idx, plan)
    raise ContractError(f"unknown kind {kind!r}")


def _apply_lift(lift, vec):
    return [sum(coef * vec[s] for s, coef in row) for row in lift]


def _exact_table(model, k, N, W, entries, lift, left_idx, plan) -> MomentTable:
    nE = len(entries)
    base = [1 if e == (0, 0) else 0 for e in entries]
    totals: list[list[int]] = [[], base]
    lifted: list[list[int]] = [[], _apply_lift(lift, base)]
    counts = [0] + [count_trees(model, n) for n in range(1, N + 1)]
    for n in range(2, N + 1):
        # conv[a][t] = sum_j mult(n,j) L_j[a] R_{n-j}[t]
        acc = [0] * nE
        for j in range(1, n):
            mult = split_multiplicity(model, n, j)
            lj = lifted[j]
            rj = lifted[n - j]
            for t, terms in enumerate(plan):
                s = 0
                for a, binom, src in terms:
                    x = lj[left_idx[a]]
                    if x:
                        s += binom * x * rj[src]
                acc[t] += mult * s
        totals.append(acc)
        lifted.append(_apply_lift(lift, acc))
    return MomentTable(model, k, N, W, "exact", entries, totals, counts)


def _float_table(model, k, N, W, entries, lift, left_idx, plan) -> MomentTable:
    dt = np.longdouble
    nE = len(entries)
    L = np.zeros((nE, nE), dtype=dt)
    for t, row in enumerate(lift):
        for s, coef in row:
            L[t, s] = coef
    data = np.zeros((N + 1, nE), dtype=dt)
    data[1, entries.index((0, 0))] = 1
    lifted_T = np.zeros((nE, N + 1), dtype=dt)  # lifted moments, one row per entry
    lifted_T[:, 1] = L @ data[1]
    cat = _scaled_catalan(N, dt) if model is TreeModel.PLANE else None
    n_left = len(left_idx)
    for n in range(2, N + 1):
        w = split_weights_float(model, n, dt, cat)
        rest = lifted_T[:, n - 1 : 0 : -1]  # sizes n-1 .. 1  <->  j = 1 .. n-1
        conv = np.empty((n_left, nE), dtype=dt)
        for a in range(n_left):
            coeff = w * lifted_T[left_idx[a], 1:n]
            conv[a] = (rest * coeff).sum(axis=1)  # pairwise over j
        row = np.zeros(nE, dtype=dt)
        for t, terms in enumerate(plan):
            row[t] = sum(binom * conv[a, src] for a, binom, src in terms)
        data[n] = row
        lifted_T[:, n] = L @ row
    return MomentTable(model, k, N, W, "float", entries, data)


def centered_moments(table: MomentTable, r: int) -> list[Number]:
    """``[E((Z_n - E Z_n)^r) for n = 1..N]`` by binomial transform of raw moments."""
    if r < 0:
        raise ContractError("order must be >= 0")
    if table.k * r > table.W:
        raise ContractError(f"centered order {r} needs W >= {table.k * r}, table has {table.W}")
    out = []
    for n in range(1, table.N + 1):
        if r == 0:
            out.append(table.moment(n, 0, 0))
            continue
        mu = table.moment(n, 1, 0)
        out.append(sum(math.comb(r, c) * table.moment(n, c, 0) * (-mu) ** (r - c) for c in range(r + 1)))
    return out


# ---------------------------------------------------- root-degree moments

def root_degree_moments(model: TreeModel | str, N: int, L: int, kind: str = "float") -> np.ndarray | list:
    """``out[n][l] = E(R_n^l)`` for ``n = 0..N`` (row 0 unused), ``l = 0..L``.

    Uses ``R_n = R'_{n - I_n} + 1`` directly; the float path is ``O(N L^2)``
    for non-plane trees (prefix sums) and ``O(N^2 L)`` for plane trees.
    """
    model = TreeModel.parse(model)
    binom = [[math.comb(l, e) for e in range(l + 1)] for l in range(L + 1)]
    if kind == "exact":
        tab = moment_table(model, 2, N, L, "exact", require_mean=False)
        return [[Fraction(0)] * (L + 1)] + [[tab.moment(n, 0, l) for l in range(L + 1)] for n in range(1, N + 1)]
    if kind != "float":
        raise ContractError(f"unknown kind {kind!r}")
    out = np.zeros((N + 1, L + 1))
    out[1, 0] = 1.0
    if model is TreeModel.NONPLANE:
        running = np.zeros(L + 1)
        for n in range(2, N + 1):
            running += out[n - 1]
            avg = running / (n - 1)
            out[n] = [sum(binom[l][e] * avg[e] for e in range(l + 1)) for l in range(L + 1)]
        return out
    cat = _scaled_catalan(N)
    for n in range(2, N + 1):
        w = split_weights_float(model, n, np.float64, cat)
        avg = w @ out[n - 1 : 0 : -1]
        out[n] = [sum(binom[l][e] * avg[e] for e in range(l + 1)) for l in range(L + 1)]
    return out


def mean_toll(model: TreeModel | str, k: int, N: int, form: str = "split") -> list[Fraction]:
    """Exact toll ``b_n`` (``b[n-1]``, ``b[0] = 0``) of the two-sided mean recurrence.

    ``form='split'`` expands both root corrections over the split law:
    ``sum_l C(k,l) sum_j pi[n,j] (E R_j^l + E R_{n-j}^l)``; for non-plane
    trees this is ``sum_l C(k,l) (2/(n-1)) sum_{i<n} E R_i^l``.
    ``form='root'`` (plane only) rewrites the right-hand correction through
    ``R_n`` itself: ``sum_l C(k,l) (sum_j pi[n,j] E R_j^l - (-1)^(k-l) E R_n^l)``.
    """
    model = TreeModel.parse(model)
    _check_k(k)
    R = root_degree_moments(model, N, k - 1, kind="exact")
    b = [Fraction(0)]
    for n in range(2, N + 1):
        law = split_law(model, n)
        total = Fraction(0)
        for l in range(k):
            if form == "split":
                s = sum((law[j] * (R[j][l] + R[n - j][l]) for j in range(1, n)), Fraction(0))
            elif form == "root":
                if model is not TreeModel.PLANE:
                    raise ContractError("form='root' is the plane rewrite")
                s = sum((law[j] * R[j][l] for j in range(1, n)), Fraction(0)) - (-1) ** (k - l) * R[n][l]
            else:
                raise ContractError(f"unknown form {form!r}")
            total += math.comb(k, l) * s
        b.append(total)
    return b


# ------------------------------------------------------------ closed forms

def nonplane_mean_rootdeg(n: int) -> Fraction:
    return harmonic(n - 1)


def plane_mean_rootdeg(n: int) -> Fraction:
    if n < 1:
        raise InvalidSizeError("n must be >= 1")
    return Fraction(4 ** (n - 1), n * catalan(n)) - 1


def plane_mean_z2(n: int) -> Fraction:
    """``(2n-1)(2 H_{2n} - H_n) - 2n - 4^n / (2n C_n) + 2``."""
    if n < 1:
        raise InvalidSizeError("n must be >= 1")
    H = harmonic_sequence(2 * n)
    return (2 * n - 1) * (2 * H[2 * n] - H[n]) - 2 * n - Fraction(4**n, 2 * n * catalan(n)) + 2


# -------------------------------------------------------------- enumeration

@dataclass(frozen=True)
class EnumerationResult:
    """Every attachment history of size ``n`` aggregated by degree profile.

    ``profiles[(root_degree, sorted_degrees)]`` counts histories; any Zagreb
    order can be evaluated from it exactly.
    """

    model: TreeModel
    n: int
    histories: int
    profiles: Counter

    def zagreb_counts(self, k: int) -> Counter:
        out: Counter = Counter()
        for (_, degs), c in self.profiles.items():
            out[sum(d**k for d in degs)] += c
        return out

    def root_degree_law(self) -> dict[int, Fraction]:
        out: Counter = Counter()
        for (d, _), c in self.profiles.items():
            out[d] += c
        return {d: Fraction(c, self.histories) for d, c in sorted(out.items())}

    def joint(self, k: int) -> dict[tuple[int, int], Fraction]:
        out: Counter = Counter()
        for (d, degs), c in self.profiles.items():
            out[(sum(x**k for x in degs), d)] += c
        return {key: Fraction(c, self.histories) for key, c in sorted(out.items())}

    def moment(self, k: int, i: int, l: int) -> Fraction:
        tot = 0
        for (d, degs), c in self.profiles.items():
            tot += c * sum(x**k for x in degs) ** i * d**l
        return Fraction(tot, self.histories)


def enumerate_all(model: TreeModel | str, n: int, n_limit: int = ENUMERATION_N_LIMIT) -> EnumerationResult:
    """Walk every attachment history (parent choices or gap choices) once."""
    model = TreeModel.parse(model)
    if n < 1:
        raise InvalidSizeError("n must be >= 1")
    if n > n_limit:
        raise ResourceError(f"enumeration of size {n} exceeds limit {n_limit}", attempted=n)
    deg = [0] * (n + 1)
    gaps = [1]
    profiles: Counter = Counter()
    plane = model is TreeModel.PLANE

    def visit(i: int) -> None:
        if i > n:
            profiles[(deg[1], tuple(sorted(deg[1:])))] += 1
            return
        options = gaps if plane else range(1, i)
        for p in list(options) if plane else options:
            deg[p] += 1
            deg[i] = 1
            if plane:
                gaps.append(p)
                gaps.append(i)
            visit(i + 1)
            if plane:
                gaps.pop()
                gaps.pop()
            deg[i] = 0
            deg[p] -= 1

    visit(2)
    total = sum(profiles.values())
    return EnumerationResult(model, n, total, profiles)
